#include "interleave/cli.h"

#include "interleave/analysis.h"
#include "interleave/checkpoint.h"
#include "interleave/conditioning.h"
#include "interleave/error.h"
#include "interleave/manifest.h"
#include "interleave/oracle.h"
#include "interleave/pattern_io.h"
#include "interleave/patterns.h"
#include "interleave/sampling.h"
#include "interleave/wav.h"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace interleave {

namespace fs = std::filesystem;

std::string default_out_dir() {
    const char * env = std::getenv("INTERLEAVE_OUT_DIR");
    return env && *env ? env : "out";
}

namespace {

struct PatternsOptions {
    std::string kind;
    std::string file;
    int T = 3;
    int K = 2;
    bool json = false;
};

struct ExactnessOptions {
    std::string family = "diagonal";
    int T = 2;
    int K = 2;
    int M = 2;
    std::vector<std::string> patterns;
    uint64_t seed = 0;
    std::string out;
};

struct TrainOptions {
    std::string pattern = "delay";
    int sequences = 4;
    int T = 48;
    int K = 4;
    int M = 32;
    int d_latent = 8;
    int D = 64;
    int L = 2;
    int H = 4;
    int ffn_mult = 4;
    std::string mode = "none";
    std::string text;
    int steps = 2000;
    double target_accuracy = 0.0;
    int log_every = 100;
    uint64_t seed = 1;
    uint64_t data_seed = 1;
    TrainHyper hyper{3e-3, 50, 2000};
    std::string out;
};

struct GenerateOptions {
    std::string checkpoint;
    std::string prompt;
    std::string text;
    bool has_text = false;
    uint64_t seed = 0;
    SamplerConfig sampler;
    bool greedy = false;
    bool wav = false;
    std::string out;
};

struct MemorizeOptions {
    std::string checkpoint;
    std::vector<int> prompt_lens;
    int gen_len = 16;
    double threshold = 0.8;
    std::string out;
};

struct ChromaOptions {
    std::string wav;
    int window = kChromaWindow;
    int hop = kChromaHop;
    std::string out;
};

struct ToneOptions {
    double frequency = 440.0;
    double seconds = 2.0;
    int sample_rate = 32000;
    std::string out;
};

struct ReplayOptions {
    std::string manifest;
    std::string out;
};

std::string resolve_out(const std::string & out) { return out.empty() ? default_out_dir() : out; }

std::string fixed(double v, int digits = 6) {
    std::ostringstream s;
    s << std::setprecision(digits) << v;
    return s.str();
}

Condition make_condition(ConditioningMode mode, const std::string & text, int D) {
    Condition cond;
    if (mode == ConditioningMode::None) {
        if (!text.empty()) {
            throw ValidationError("--text needs a conditioning mode other than none");
        }
        return cond;
    }
    if (text.empty()) {
        throw ValidationError("conditioning mode '" + std::string(to_string(mode)) + "' needs --text");
    }
    const ConditioningTensor encoded = encode_text_toy(text_normalize(text), D);
    if (uses_cross(mode)) {
        cond.cross = encoded;
    }
    if (uses_prefix(mode)) {
        cond.prefix = encoded;
    }
    return cond;
}

// ---------------------------------------------------------------------------

int cmd_patterns_show(const PatternsOptions & o, std::ostream & out) {
    const Pattern p = o.file.empty() ? build_pattern(parse_pattern_kind(o.kind), o.T, o.K)
                                     : pattern_from_json(nlohmann::json::parse(read_file(o.file)));
    require_valid(p);
    if (o.json) {
        out << pattern_to_json(p).dump() << '\n';
        return kExitOk;
    }
    const StepCounts counts = step_counts(p);
    out << (p.kind ? display_name(*p.kind) : "Custom") << "  T=" << p.T << " K=" << p.K << "  steps " << counts.exact
        << " (nominal " << counts.nominal << ")\n";
    out << render_layout(p);
    return kExitOk;
}

int cmd_patterns_validate(const PatternsOptions & o, std::ostream & out) {
    if (o.file.empty() && o.kind.empty()) {
        throw UsageError("patterns validate needs --file or --kind");
    }
    const Pattern p = o.file.empty() ? build_pattern(parse_pattern_kind(o.kind), o.T, o.K)
                                     : pattern_from_json(nlohmann::json::parse(read_file(o.file)));
    const ValidationReport report = validate_pattern(p);
    if (report.ok) {
        out << "ok\n";
        return kExitOk;
    }
    for (const auto & v : report.violations) {
        out << "violation: " << v.message << '\n';
    }
    return kExitValidation;
}

int cmd_patterns_bench(const PatternsOptions & o, std::ostream & out) {
    out << std::left << std::setw(22) << "pattern" << std::right << std::setw(10) << "exact" << std::setw(10)
        << "nominal" << '\n';
    for (PatternKind kind : kAllPatternKinds) {
        if (is_stereo(kind) && o.K % 2 != 0) {
            continue;
        }
        const StepCounts c = step_counts(build_pattern(kind, o.T, o.K));
        out << std::left << std::setw(22) << display_name(kind) << std::right << std::setw(10) << c.exact
            << std::setw(10) << c.nominal << '\n';
    }
    return kExitOk;
}

int cmd_exactness(const ExactnessOptions & o, RunManifest & manifest, std::ostream & out) {
    std::vector<PatternKind> kinds;
    if (o.patterns.empty()) {
        for (PatternKind kind : kAllPatternKinds) {
            if (!is_stereo(kind) || o.K % 2 == 0) {
                kinds.push_back(kind);
            }
        }
    } else {
        for (const auto & name : o.patterns) {
            kinds.push_back(parse_pattern_kind(name));
        }
    }
    manifest.seed = o.seed;
    Stopwatch clock;
    const JointDistribution joint = make_joint(parse_joint_family(o.family), o.T, o.K, o.M, o.seed);
    const auto rows = exactness_report(joint, kinds);
    manifest.record_timing("report", clock.seconds());

    const std::string csv = exactness_csv(rows);
    const std::string dir = resolve_out(o.out);
    manifest.write_artifact(dir, "exactness.csv", csv);
    manifest.save(dir);
    out << csv;

    const double flatten_tv = tv_distance(induced_distribution(joint, build_pattern(PatternKind::Flatten, o.T, o.K)), joint);
    if (flatten_tv > 1e-9) {
        throw InvariantError("flatten pattern induced TV " + fixed(flatten_tv) + " exceeds 1e-9");
    }
    return kExitOk;
}

int cmd_train(const TrainOptions & o, RunManifest & manifest, std::ostream & out) {
    manifest.seed = o.seed;
    const PatternKind kind = parse_pattern_kind(o.pattern);
    const ConditioningMode mode = parse_conditioning_mode(o.mode);
    TrainHyper hyper = o.hyper;
    hyper.total_steps = o.steps;
    hyper.validate();
    if (o.steps < 1) {
        throw ValidationError("--steps must be >= 1");
    }
    if (o.target_accuracy < 0.0 || o.target_accuracy > 1.0) {
        throw ValidationError("--target-accuracy must be in [0, 1]");
    }

    const MemorizationCorpusConfig corpus_cfg{o.sequences, o.T, o.K, o.M, o.d_latent, o.data_seed};
    Stopwatch clock;
    const MemorizationCorpus corpus = memorization_corpus(corpus_cfg);
    manifest.record_timing("corpus", clock.seconds());

    ModelConfig config;
    config.K = o.K;
    config.M = o.M;
    config.D = o.D;
    config.L = o.L;
    config.H = o.H;
    config.ffn_mult = o.ffn_mult;
    config.mode = mode;
    const Pattern pattern = build_pattern(kind, o.T, o.K);
    config.max_steps = std::max(config.max_steps, pattern.num_steps() + 1);
    config.validate();

    const Condition cond = make_condition(mode, o.text, o.D);
    const std::vector<Condition> conditions(corpus.grids.size(), cond);
    const Batch batch = make_batch(pattern, corpus.grids, conditions);

    Parameters params = init_params(config, o.seed);
    OptimizerState state = OptimizerState::for_params(params, hyper.use_ema);
    Rng rng(o.seed ^ 0x747261696eULL);

    std::ostringstream log;
    log << "step,loss,accuracy,grad_norm,lr,condition_dropped\n";
    clock = Stopwatch();
    int steps_run = 0;
    double last_accuracy = 0.0;
    for (int step = 0; step < o.steps; ++step) {
        const TrainStepResult r = train_step(state, params, batch, hyper, rng);
        ++steps_run;
        last_accuracy = r.accuracy;
        log << step << ',' << r.loss << ',' << r.accuracy << ',' << r.grad_norm << ',' << r.lr << ','
            << (r.condition_dropped ? 1 : 0) << '\n';
        if (o.log_every > 0 && step % o.log_every == 0) {
            out << "step " << step << " loss " << fixed(r.loss) << " accuracy " << fixed(r.accuracy) << '\n';
        }
        if (o.target_accuracy > 0.0 && !r.condition_dropped && r.accuracy >= o.target_accuracy) {
            break;
        }
    }
    manifest.record_timing("train", clock.seconds());

    const Parameters eval = ema_params(state, params);
    const LossValue final_loss = batch_loss(eval, batch);

    const std::string dir = resolve_out(o.out);
    Checkpoint ckpt{params, state, nlohmann::json::object()};
    nlohmann::json grids = nlohmann::json::array();
    for (const auto & g : corpus.grids) {
        grids.push_back(grid_to_csv(g));
    }
    ckpt.extra = {{"pattern", o.pattern},
                  {"text", o.text},
                  {"corpus",
                   {{"sequences", o.sequences},
                    {"T", o.T},
                    {"K", o.K},
                    {"M", o.M},
                    {"d_latent", o.d_latent},
                    {"seed", o.data_seed}}},
                  {"grids", grids},
                  {"codebooks", codebooks_to_json(corpus.codebooks)},
                  {"steps_run", steps_run}};
    manifest.write_artifact(dir, "checkpoint.json", checkpoint_to_json(ckpt).dump() + "\n");
    manifest.write_artifact(dir, "loss.csv", log.str());
    for (std::size_t n = 0; n < corpus.grids.size(); ++n) {
        manifest.write_artifact(dir, "data_" + std::to_string(n + 1) + ".csv", grid_to_csv(corpus.grids[n]));
    }
    manifest.save(dir);
    out << "trained " << steps_run << " steps; last step accuracy " << fixed(last_accuracy)
        << "; final masked accuracy " << fixed(final_loss.accuracy) << " loss " << fixed(final_loss.loss) << '\n';
    return kExitOk;
}

struct LoadedRun {
    Checkpoint ckpt;
    Parameters eval;
    Pattern pattern;
    std::vector<TokenGrid> grids;
};

LoadedRun load_run(const std::string & path) {
    LoadedRun run{load_checkpoint(path), {}, {}, {}};
    run.eval = ema_params(run.ckpt.optimizer, run.ckpt.params);
    const auto & extra = run.ckpt.extra;
    try {
        const auto & corpus = extra.at("corpus");
        run.pattern = build_pattern(parse_pattern_kind(extra.at("pattern").get<std::string>()),
                                    corpus.at("T").get<int>(), corpus.at("K").get<int>());
        for (const auto & g : extra.at("grids")) {
            run.grids.push_back(grid_from_csv(g.get<std::string>(), corpus.at("M").get<int>()));
        }
    } catch (const nlohmann::json::exception & e) {
        throw FormatError(std::string("checkpoint lacks training metadata: ") + e.what());
    }
    return run;
}

int cmd_generate(const GenerateOptions & o, RunManifest & manifest, std::ostream & out) {
    manifest.seed = o.seed;
    SamplerConfig sampler = o.sampler;
    if (o.greedy) {
        sampler.mode = SamplingMode::Greedy;
    }
    sampler.validate();

    const LoadedRun run = load_run(o.checkpoint);
    const ModelConfig & config = run.ckpt.params.config();
    const std::string text = o.has_text ? o.text : run.ckpt.extra.value("text", std::string{});
    const Condition cond = make_condition(config.mode, text, config.D);

    Rng rng(o.seed);
    GenerationTrace trace;
    Stopwatch clock;
    TokenGrid grid;
    if (o.prompt.empty()) {
        grid = generate(run.eval, run.pattern, cond, sampler, rng, &trace);
    } else {
        const TokenGrid prompt = grid_from_csv(read_file(o.prompt), config.M);
        grid = continue_from_prompt(run.eval, run.pattern, prompt, cond, sampler, rng, &trace);
    }
    manifest.record_timing("generate", clock.seconds());
    manifest.timings["forward_passes"] = trace.forward_passes;

    const std::string dir = resolve_out(o.out);
    const std::string csv = grid_to_csv(grid);
    manifest.write_artifact(dir, "generated.csv", csv);
    if (o.wav) {
        const auto codebooks = codebooks_from_json(run.ckpt.extra.at("codebooks"));
        const Sonifier sonifier(codebooks.front().d);
        const AudioBuffer audio = sonifier.render(sonifier.classes_of(rvq_decode(grid, codebooks)));
        manifest.write_artifact(dir, "generated.wav", encode_wav(audio));
    }
    manifest.save(dir);
    out << csv;
    return kExitOk;
}

int cmd_memorize(const MemorizeOptions & o, RunManifest & manifest, std::ostream & out) {
    const LoadedRun run = load_run(o.checkpoint);
    const ModelConfig & config = run.ckpt.params.config();
    const Condition cond = make_condition(config.mode, run.ckpt.extra.value("text", std::string{}), config.D);
    if (!run.pattern.kind) {
        throw FormatError("checkpoint pattern has no kind");
    }
    std::vector<MemorizationExample> dataset;
    for (const auto & g : run.grids) {
        dataset.push_back({g, cond});
    }
    std::vector<int> prompt_lens = o.prompt_lens;
    if (prompt_lens.empty()) {
        const int longest = run.pattern.T - o.gen_len;
        for (int p : {1, longest / 4, longest / 2, longest}) {
            if (p >= 1 && (prompt_lens.empty() || p > prompt_lens.back())) {
                prompt_lens.push_back(p);
            }
        }
    }
    SamplerConfig sampler;
    sampler.guidance_scale = 1.0;
    Stopwatch clock;
    const MemorizationReport report =
        memorization_report(run.eval, *run.pattern.kind, dataset, prompt_lens, o.gen_len, sampler, o.threshold);
    manifest.record_timing("report", clock.seconds());

    const std::string dir = resolve_out(o.out);
    const std::string csv = memorization_csv(report);
    manifest.write_artifact(dir, "memorization.csv", csv);
    manifest.save(dir);
    out << csv;
    const auto violations = report.monotonicity_violations();
    if (!violations.empty()) {
        out << "note: match fraction decreases at prompt lengths";
        for (int p : violations) {
            out << ' ' << p;
        }
        out << '\n';
    }
    return kExitOk;
}

int cmd_chroma(const ChromaOptions & o, RunManifest & manifest, std::ostream & out) {
    const AudioBuffer audio = read_wav(o.wav);
    Stopwatch clock;
    const Chromagram chroma = compute_chromagram(audio, o.window, o.hop);
    const QuantizedChroma q = quantize_chroma(chroma);
    manifest.record_timing("chroma", clock.seconds());

    manifest.config["frame_hop_seconds"] = chroma.frame_hop_seconds;
    const std::string dir = resolve_out(o.out);
    manifest.write_artifact(dir, "chroma.json", chroma_to_json(q).dump() + "\n");
    manifest.save(dir);
    out << q.classes.size() << " frames\n";
    return kExitOk;
}

int cmd_tone(const ToneOptions & o, RunManifest & manifest, std::ostream & out) {
    const AudioBuffer audio = sine_wave(o.frequency, o.seconds, o.sample_rate);
    const std::string dir = resolve_out(o.out);
    manifest.write_artifact(dir, "tone.wav", encode_wav(audio));
    manifest.save(dir);
    out << (fs::path(dir) / "tone.wav").string() << '\n';
    return kExitOk;
}

int cmd_replay(const ReplayOptions & o, std::ostream & out, std::ostream & err) {
    const RunManifest old = RunManifest::from_json(nlohmann::json::parse(read_file(o.manifest)));
    const std::string dir = resolve_out(o.out);
    std::vector<std::string> args;
    for (std::size_t i = 0; i < old.argv.size(); ++i) {
        if (old.argv[i] == "--out" || old.argv[i] == "--config") {
            ++i;
            continue;
        }
        if (old.argv[i].rfind("--out=", 0) == 0 || old.argv[i].rfind("--config=", 0) == 0) {
            continue;
        }
        args.push_back(old.argv[i]);
    }
    const std::string ini = old.config.value("ini", std::string{});
    if (!ini.empty()) {
        fs::create_directories(dir);
        const std::string ini_path = (fs::path(dir) / "replay.ini").string();
        write_file(ini_path, ini);
        args.insert(args.begin(), {"--config", ini_path});
    }
    args.push_back("--out");
    args.push_back(dir);

    std::ostringstream discard;
    const int code = run_cli(args, discard, err);
    if (code != kExitOk) {
        return code;
    }
    const RunManifest fresh = RunManifest::from_json(nlohmann::json::parse(read_file((fs::path(dir) / "manifest.json").string())));
    int mismatches = 0;
    for (const auto & [name, hash] : old.artifacts.items()) {
        const bool same = fresh.artifacts.contains(name) && fresh.artifacts[name] == hash;
        out << (same ? "match    " : "MISMATCH ") << name << '\n';
        mismatches += !same;
    }
    if (mismatches > 0) {
        throw InvariantError(std::to_string(mismatches) + " artifact(s) differ on replay");
    }
    return kExitOk;
}

int run_parsed(CLI::App & app, const std::vector<std::string> & args, std::ostream & out, std::ostream & err,
               const PatternsOptions & patterns, const ExactnessOptions & exactness, const TrainOptions & train,
               const GenerateOptions & gen, const MemorizeOptions & memorize, const ChromaOptions & chroma,
               const ToneOptions & tone, const ReplayOptions & replay) {
    auto * sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    if (!sub) {
        throw UsageError("a subcommand is required; see --help");
    }
    const std::string name = sub->get_name();
    if (name == "patterns") {
        auto * action = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands().front();
        if (!action) {
            throw UsageError("patterns needs show, validate or bench");
        }
        if (action->get_name() == "show") {
            return cmd_patterns_show(patterns, out);
        }
        if (action->get_name() == "validate") {
            return cmd_patterns_validate(patterns, out);
        }
        return cmd_patterns_bench(patterns, out);
    }
    if (name == "replay") {
        return cmd_replay(replay, out, err);
    }

    RunManifest manifest;
    manifest.command = name;
    manifest.argv = args;
    manifest.config = {{"ini", app.config_to_str(true, false)}};
    if (name == "exactness") {
        return cmd_exactness(exactness, manifest, out);
    }
    if (name == "train") {
        return cmd_train(train, manifest, out);
    }
    if (name == "generate") {
        return cmd_generate(gen, manifest, out);
    }
    if (name == "memorize") {
        return cmd_memorize(memorize, manifest, out);
    }
    if (name == "chroma") {
        return cmd_chroma(chroma, manifest, out);
    }
    if (name == "tone") {
        return cmd_tone(tone, manifest, out);
    }
    throw UsageError("unknown subcommand '" + name + "'");
}

} // namespace

int run_cli(const std::vector<std::string> & args, std::ostream & out, std::ostream & err) {
    CLI::App app{"Codebook interleaving patterns, toy decoder and exactness oracles", "interleave"};
    app.set_config("--config", "", "INI file with option values; flags override it");
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    PatternsOptions po;
    auto * patterns = app.add_subcommand("patterns", "Build, validate and count interleaving patterns");
    patterns->require_subcommand(1);
    auto * show = patterns->add_subcommand("show", "Print the step layout of a pattern");
    auto * validate = patterns->add_subcommand("validate", "Check a pattern against every invariant");
    auto * bench = patterns->add_subcommand("bench", "Exact and nominal step counts for every kind");
    for (auto * s : {show, validate}) {
        s->add_option("--kind", po.kind, "Pattern kind, e.g. delay");
        s->add_option("--file", po.file, "Pattern JSON file");
        s->add_option("--T", po.T, "Timesteps")->capture_default_str();
        s->add_option("--K", po.K, "Codebooks")->capture_default_str();
    }
    show->add_flag("--json", po.json, "Emit the pattern as JSON");
    bench->add_option("--T", po.T, "Timesteps")->capture_default_str();
    bench->add_option("--K", po.K, "Codebooks")->capture_default_str();

    ExactnessOptions eo;
    auto * exact = app.add_subcommand("exactness", "TV distance between induced and true grid laws");
    exact->add_option("--family", eo.family, "product, diagonal or markov_residual")->capture_default_str();
    exact->add_option("--T", eo.T, "Timesteps")->capture_default_str();
    exact->add_option("--K", eo.K, "Codebooks")->capture_default_str();
    exact->add_option("--M", eo.M, "Codebook size")->capture_default_str();
    exact->add_option("--patterns", eo.patterns, "Comma-separated pattern kinds (default: all)")->delimiter(',');
    exact->add_option("--seed", eo.seed, "Seed for markov_residual")->capture_default_str();
    exact->add_option("--out", eo.out, "Output directory");

    TrainOptions to;
    auto * train = app.add_subcommand("train", "Train the toy decoder on a synthetic RVQ corpus");
    train->add_option("--pattern", to.pattern)->capture_default_str();
    train->add_option("--sequences", to.sequences)->capture_default_str();
    train->add_option("--T", to.T)->capture_default_str();
    train->add_option("--K", to.K)->capture_default_str();
    train->add_option("--M", to.M)->capture_default_str();
    train->add_option("--d-latent", to.d_latent)->capture_default_str();
    train->add_option("--D", to.D)->capture_default_str();
    train->add_option("--L", to.L)->capture_default_str();
    train->add_option("--H", to.H)->capture_default_str();
    train->add_option("--ffn-mult", to.ffn_mult)->capture_default_str();
    train->add_option("--mode", to.mode, "none, cross_attention, prefix or prefix_and_cross")->capture_default_str();
    train->add_option("--text", to.text, "Text condition shared by every sequence");
    train->add_option("--steps", to.steps)->capture_default_str();
    train->add_option("--target-accuracy", to.target_accuracy, "Stop once a step reaches it (0 = never)")
        ->capture_default_str();
    train->add_option("--log-every", to.log_every)->capture_default_str();
    train->add_option("--seed", to.seed)->capture_default_str();
    train->add_option("--data-seed", to.data_seed)->capture_default_str();
    train->add_option("--lr", to.hyper.lr)->capture_default_str();
    train->add_option("--warmup", to.hyper.warmup_steps)->capture_default_str();
    train->add_option("--min-lr", to.hyper.min_lr)->capture_default_str();
    train->add_option("--beta1", to.hyper.beta1)->capture_default_str();
    train->add_option("--beta2", to.hyper.beta2)->capture_default_str();
    train->add_option("--weight-decay", to.hyper.weight_decay)->capture_default_str();
    train->add_option("--clip", to.hyper.clip_norm)->capture_default_str();
    train->add_option("--cfg-drop", to.hyper.condition_dropout)->capture_default_str();
    train->add_flag("--ema", to.hyper.use_ema, "Keep and evaluate EMA weights");
    train->add_option("--ema-decay", to.hyper.ema_decay)->capture_default_str();
    train->add_option("--out", to.out, "Output directory");

    GenerateOptions go;
    auto * gen = app.add_subcommand("generate", "Sample a token grid from a checkpoint");
    gen->add_option("--checkpoint", go.checkpoint)->required();
    gen->add_option("--prompt", go.prompt, "Token-grid CSV whose timesteps are kept");
    gen->add_option("--text", go.text, "Text condition (default: the training text)")
        ->each([&go](const std::string &) { go.has_text = true; });
    gen->add_option("--seed", go.seed)->capture_default_str();
    gen->add_option("--top-k", go.sampler.top_k)->capture_default_str();
    gen->add_option("--temperature", go.sampler.temperature)->capture_default_str();
    gen->add_option("--guidance", go.sampler.guidance_scale)->capture_default_str();
    gen->add_flag("--greedy", go.greedy);
    gen->add_flag("--wav", go.wav, "Also write a sonified WAV");
    gen->add_option("--out", go.out, "Output directory");

    MemorizeOptions mo;
    auto * mem = app.add_subcommand("memorize", "Prompted-continuation match rates on the training corpus");
    mem->add_option("--checkpoint", mo.checkpoint)->required();
    mem->add_option("--prompt-lens", mo.prompt_lens, "Comma-separated prompt lengths in timesteps")->delimiter(',');
    mem->add_option("--gen-len", mo.gen_len)->capture_default_str();
    mem->add_option("--threshold", mo.threshold, "Partial-match fraction")->capture_default_str();
    mem->add_option("--out", mo.out, "Output directory");

    ChromaOptions co;
    auto * chroma = app.add_subcommand("chroma", "Quantized chromagram of a WAV file");
    chroma->add_option("--wav", co.wav)->required();
    chroma->add_option("--window", co.window)->capture_default_str();
    chroma->add_option("--hop", co.hop)->capture_default_str();
    chroma->add_option("--out", co.out, "Output directory");

    ToneOptions tone_o;
    auto * tone = app.add_subcommand("tone", "Write a sine-wave WAV");
    tone->add_option("--freq", tone_o.frequency)->capture_default_str();
    tone->add_option("--seconds", tone_o.seconds)->capture_default_str();
    tone->add_option("--sample-rate", tone_o.sample_rate)->capture_default_str();
    tone->add_option("--out", tone_o.out, "Output directory");

    ReplayOptions ro;
    auto * replay = app.add_subcommand("replay", "Re-run a manifest and compare artifact hashes");
    replay->add_option("--manifest", ro.manifest)->required();
    replay->add_option("--out", ro.out, "Output directory for the replay");

    std::vector<std::string> argv_store{"interleave"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char *> argv;
    for (auto & a : argv_store) {
        argv.push_back(a.data());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success & e) {
        return app.exit(e, out, err);
    } catch (const CLI::FileError & e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const CLI::ParseError & e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        return run_parsed(app, args, out, err, po, eo, to, go, mo, co, tone_o, ro);
    } catch (const UsageError & e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ValidationError & e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const GuardError & e) {
        err << "guard: " << e.what() << '\n';
        return kExitGuard;
    } catch (const InvariantError & e) {
        err << "invariant breach: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const IoError & e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const FormatError & e) {
        err << "format error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const nlohmann::json::exception & e) {
        err << "format error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const std::exception & e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace interleave
