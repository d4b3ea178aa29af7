#include "interleave/checkpoint.h"

#include "interleave/error.h"
#include "interleave/pattern_io.h"

namespace interleave {

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd & v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const nlohmann::json & doc, std::size_t expected) {
    const auto values = doc.get<std::vector<double>>();
    if (values.size() != expected) {
        throw FormatError("checkpoint vector has " + std::to_string(values.size()) + " entries, expected " +
                          std::to_string(expected));
    }
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace

nlohmann::json config_to_json(const ModelConfig & c) {
    return {{"K", c.K},   {"M", c.M},           {"D", c.D},
            {"L", c.L},   {"H", c.H},           {"ffn_mult", c.ffn_mult},
            {"max_steps", c.max_steps}, {"mode", std::string(to_string(c.mode))}};
}

ModelConfig config_from_json(const nlohmann::json & doc) {
    ModelConfig c;
    c.K = doc.at("K").get<int>();
    c.M = doc.at("M").get<int>();
    c.D = doc.at("D").get<int>();
    c.L = doc.at("L").get<int>();
    c.H = doc.at("H").get<int>();
    c.ffn_mult = doc.at("ffn_mult").get<int>();
    c.max_steps = doc.at("max_steps").get<int>();
    c.mode = parse_conditioning_mode(doc.at("mode").get<std::string>());
    c.validate();
    return c;
}

nlohmann::json checkpoint_to_json(const Checkpoint & ckpt) {
    nlohmann::json opt = {
        {"step", ckpt.optimizer.step},
        {"m", vec_to_json(ckpt.optimizer.m)},
        {"v", vec_to_json(ckpt.optimizer.v)},
    };
    if (ckpt.optimizer.ema) {
        opt["ema"] = vec_to_json(*ckpt.optimizer.ema);
    }
    return {
        {"format", "interleave-checkpoint"},
        {"version", kCheckpointVersion},
        {"config", config_to_json(ckpt.params.config())},
        {"param_count", ckpt.params.size()},
        {"params", vec_to_json(ckpt.params.values())},
        {"optimizer", std::move(opt)},
        {"extra", ckpt.extra},
    };
}

Checkpoint checkpoint_from_json(const nlohmann::json & doc) {
    try {
        if (doc.at("format").get<std::string>() != "interleave-checkpoint") {
            throw FormatError("not an interleave checkpoint");
        }
        if (doc.at("version").get<int>() != kCheckpointVersion) {
            throw FormatError("unsupported checkpoint version " + std::to_string(doc.at("version").get<int>()));
        }
        Checkpoint ckpt;
        ckpt.params = Parameters(config_from_json(doc.at("config")));
        ckpt.params.values() = vec_from_json(doc.at("params"), ckpt.params.size());
        const auto & opt = doc.at("optimizer");
        ckpt.optimizer.step = opt.at("step").get<int>();
        ckpt.optimizer.m = vec_from_json(opt.at("m"), ckpt.params.size());
        ckpt.optimizer.v = vec_from_json(opt.at("v"), ckpt.params.size());
        if (opt.contains("ema")) {
            ckpt.optimizer.ema = vec_from_json(opt.at("ema"), ckpt.params.size());
        }
        ckpt.extra = doc.value("extra", nlohmann::json::object());
        return ckpt;
    } catch (const nlohmann::json::exception & e) {
        throw FormatError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::string & path, const Checkpoint & ckpt) {
    write_file(path, checkpoint_to_json(ckpt).dump());
}

Checkpoint load_checkpoint(const std::string & path) {
    const std::string text = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception & e) {
        throw FormatError("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    return checkpoint_from_json(doc);
}

} // namespace interleave
