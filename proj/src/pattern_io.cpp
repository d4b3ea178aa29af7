#include "interleave/pattern_io.h"

#include "interleave/error.h"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace interleave {

nlohmann::json pattern_to_json(const Pattern & pattern) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto & step : pattern.steps) {
        nlohmann::json coords = nlohmann::json::array();
        for (const auto & c : step) {
            coords.push_back({c.t, c.k});
        }
        steps.push_back(std::move(coords));
    }
    return {
        {"kind", pattern.kind ? std::string(to_string(*pattern.kind)) : std::string("custom")},
        {"T", pattern.T},
        {"K", pattern.K},
        {"steps", std::move(steps)},
    };
}

Pattern pattern_from_json(const nlohmann::json & doc) {
    try {
        Pattern p;
        const auto kind = doc.at("kind").get<std::string>();
        if (kind != "custom") {
            p.kind = parse_pattern_kind(kind);
        }
        p.T = doc.at("T").get<int>();
        p.K = doc.at("K").get<int>();
        for (const auto & step : doc.at("steps")) {
            PatternStep coords;
            for (const auto & c : step) {
                if (!c.is_array() || c.size() != 2) {
                    throw FormatError("pattern coordinate must be a [t, k] pair");
                }
                coords.push_back({c[0].get<int>(), c[1].get<int>()});
            }
            p.steps.push_back(std::move(coords));
        }
        return p;
    } catch (const nlohmann::json::exception & e) {
        throw FormatError(std::string("malformed pattern document: ") + e.what());
    } catch (const UsageError & e) {
        throw FormatError(std::string("malformed pattern document: ") + e.what());
    }
}

std::string grid_to_csv(const TokenGrid & grid) {
    std::string out;
    for (int t = 1; t <= grid.timesteps(); ++t) {
        for (int k = 1; k <= grid.codebooks(); ++k) {
            if (k > 1) {
                out += ',';
            }
            out += std::to_string(grid.at(t, k));
        }
        out += '\n';
    }
    return out;
}

TokenGrid grid_from_csv(const std::string & text, int M) {
    std::vector<std::vector<int>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<int> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            std::size_t used = 0;
            int value = 0;
            try {
                value = std::stoi(cell, &used);
            } catch (const std::exception &) {
                throw FormatError("grid CSV: '" + cell + "' is not an integer");
            }
            if (used != cell.size()) {
                throw FormatError("grid CSV: '" + cell + "' is not an integer");
            }
            row.push_back(value);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw FormatError("grid CSV: row " + std::to_string(rows.size() + 1) + " has " +
                              std::to_string(row.size()) + " entries, expected " +
                              std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw FormatError("grid CSV is empty");
    }
    try {
        return TokenGrid::from_rows(rows, M);
    } catch (const ValidationError & e) {
        throw FormatError(std::string("grid CSV: ") + e.what());
    }
}

std::string render_layout(const Pattern & pattern) {
    const PatternLayout layout(pattern);
    const int S = layout.num_steps();
    int width = static_cast<int>(std::to_string(std::max(S, pattern.T)).size());
    std::ostringstream out;
    out << std::setw(4) << "s" << " |";
    for (int s = 1; s <= S; ++s) {
        out << ' ' << std::setw(width) << s;
    }
    out << '\n';
    for (int k = 1; k <= pattern.K; ++k) {
        out << std::setw(4) << ("k" + std::to_string(k)) << " |";
        for (int s = 1; s <= S; ++s) {
            const int t = layout.timestep(s, k);
            out << ' ' << std::setw(width) << (t == 0 ? std::string(".") : std::to_string(t));
        }
        out << '\n';
    }
    return out.str();
}

std::string read_file(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string & path, const std::string & contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << contents;
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

} // namespace interleave
