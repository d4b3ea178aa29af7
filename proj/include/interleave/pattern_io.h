#pragma once

#include "interleave/patterns.h"
#include "interleave/token_grid.h"

#include <json.hpp>

#include <string>

namespace interleave {

// {"kind": "delay" | "custom", "T": .., "K": .., "steps": [[[t, k], ...], ...]}
// steps[0] is the empty initial step.
nlohmann::json pattern_to_json(const Pattern & pattern);
// Structural parse only; the result may still fail validate_pattern.
// Throws FormatError on malformed documents.
Pattern pattern_from_json(const nlohmann::json & doc);

// One line per timestep, K comma-separated token ids, no header.
std::string grid_to_csv(const TokenGrid & grid);
TokenGrid grid_from_csv(const std::string & text, int M);

// Fig. 1-style text layout: one row per codebook, one column per step,
// each cell holding the revealed timestep or '.'.
std::string render_layout(const Pattern & pattern);

std::string read_file(const std::string & path);
void write_file(const std::string & path, const std::string & contents);

} // namespace interleave
