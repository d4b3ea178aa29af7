#include "interleave/manifest.h"

#include "interleave/error.h"
#include "interleave/pattern_io.h"
#include "interleave/rng.h"

#include <cstdio>
#include <filesystem>

namespace interleave {

std::string hash_hex(const std::string & bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

void RunManifest::write_artifact(const std::string & dir, const std::string & name, const std::string & contents) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    }
    write_file((std::filesystem::path(dir) / name).string(), contents);
    artifacts[name] = hash_hex(contents);
}

void RunManifest::record_timing(const std::string & stage, double seconds) { timings[stage] = seconds; }

nlohmann::json RunManifest::to_json() const {
    return {{"command", command}, {"argv", argv},           {"config", config},
            {"seed", seed},       {"artifacts", artifacts}, {"timings", timings},
            {"tool_version", tool_version}};
}

RunManifest RunManifest::from_json(const nlohmann::json & doc) {
    try {
        RunManifest m;
        m.command = doc.at("command").get<std::string>();
        m.argv = doc.at("argv").get<std::vector<std::string>>();
        m.config = doc.value("config", nlohmann::json::object());
        m.seed = doc.value("seed", uint64_t{0});
        m.artifacts = doc.value("artifacts", nlohmann::json::object());
        m.timings = doc.value("timings", nlohmann::json::object());
        m.tool_version = doc.value("tool_version", std::string{});
        return m;
    } catch (const nlohmann::json::exception & e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
}

void RunManifest::save(const std::string & dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    }
    write_file((std::filesystem::path(dir) / "manifest.json").string(), to_json().dump(2) + "\n");
}

} // namespace interleave
