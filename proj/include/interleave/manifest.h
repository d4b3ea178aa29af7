#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace interleave {

inline constexpr const char * kToolVersion = "0.1.0";

// One per CLI run. `argv` replays the run; artifact hashes are FNV-1a 64 of
// the written bytes, so a replay can be checked byte for byte.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::json config = nlohmann::json::object();
    uint64_t seed = 0;
    nlohmann::json artifacts = nlohmann::json::object(); // file name -> hex hash
    nlohmann::json timings = nlohmann::json::object();   // stage -> seconds
    std::string tool_version = kToolVersion;

    // Writes `contents` to dir/name and records its hash.
    void write_artifact(const std::string & dir, const std::string & name, const std::string & contents);
    void record_timing(const std::string & stage, double seconds);

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json & doc);
    // Writes dir/manifest.json.
    void save(const std::string & dir) const;
};

std::string hash_hex(const std::string & bytes);

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace interleave
