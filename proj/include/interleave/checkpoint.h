#pragma once

#include "interleave/model.h"
#include "interleave/optim.h"

#include <json.hpp>

#include <string>

namespace interleave {

inline constexpr int kCheckpointVersion = 1;

// Parameters, optimizer state and config in one versioned JSON document.
// `extra` carries caller data (dataset, codebooks, training flags).
struct Checkpoint {
    Parameters params;
    OptimizerState optimizer;
    nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json config_to_json(const ModelConfig & config);
ModelConfig config_from_json(const nlohmann::json & doc);

nlohmann::json checkpoint_to_json(const Checkpoint & ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json & doc);

void save_checkpoint(const std::string & path, const Checkpoint & ckpt);
Checkpoint load_checkpoint(const std::string & path);

} // namespace interleave
