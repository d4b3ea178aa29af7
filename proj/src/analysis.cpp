#include "interleave/analysis.h"

#include "interleave/error.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace interleave {

std::vector<int> MemorizationReport::monotonicity_violations() const {
    std::vector<int> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].exact < rows[i - 1].exact || rows[i].partial < rows[i - 1].partial) {
            out.push_back(rows[i].prompt_len);
        }
    }
    return out;
}

MemorizationReport memorization_report(const Parameters & params, PatternKind kind,
                                       std::span<const MemorizationExample> dataset,
                                       const std::vector<int> & prompt_lens, int gen_len, SamplerConfig sampler,
                                       double threshold) {
    if (dataset.empty()) {
        throw ValidationError("memorization report needs a non-empty dataset");
    }
    if (gen_len < 0) {
        throw ValidationError("gen_len must be >= 0");
    }
    if (threshold < 0.0 || threshold > 1.0) {
        throw ValidationError("match threshold must be in [0, 1]");
    }
    sampler.mode = SamplingMode::Greedy;

    MemorizationReport report;
    report.threshold = threshold;
    report.gen_len = gen_len;
    report.examples = static_cast<int>(dataset.size());

    for (int prompt_len : prompt_lens) {
        for (const auto & ex : dataset) {
            if (prompt_len < 0 || prompt_len + gen_len > ex.grid.timesteps()) {
                throw ValidationError("prompt_len + gen_len exceeds the example length");
            }
        }
        MemorizationRow row{prompt_len, 0.0, 0.0};
        if (gen_len == 0) {
            row.exact = row.partial = 1.0;
            report.rows.push_back(row);
            continue;
        }
        int exact = 0;
        int partial = 0;
        for (const auto & ex : dataset) {
            const Pattern pattern = build_pattern(kind, ex.grid.timesteps(), ex.grid.codebooks());
            Rng rng(0); // unused by greedy decoding
            const TokenGrid out =
                continue_from_prompt(params, pattern, ex.grid.head(prompt_len), ex.condition, sampler, rng);
            int equal = 0;
            for (int t = prompt_len + 1; t <= prompt_len + gen_len; ++t) {
                equal += out.at(t, 1) == ex.grid.at(t, 1);
            }
            exact += equal == gen_len;
            partial += equal >= threshold * gen_len;
        }
        row.exact = static_cast<double>(exact) / dataset.size();
        row.partial = static_cast<double>(partial) / dataset.size();
        report.rows.push_back(row);
    }
    return report;
}

std::string memorization_csv(const MemorizationReport & report) {
    std::ostringstream out;
    out << "prompt_len,exact,partial\n";
    for (const auto & r : report.rows) {
        out << r.prompt_len << ',' << r.exact << ',' << r.partial << '\n';
    }
    return out.str();
}

MemorizationCorpus memorization_corpus(const MemorizationCorpusConfig & config) {
    if (config.sequences < 1 || config.T < 2) {
        throw ValidationError("memorization corpus needs at least one sequence of T >= 2");
    }
    RVQConfig rvq{config.K, config.M, config.d_latent, 50.0};
    rvq.validate();

    LatentFrames all(config.sequences * config.T, config.d_latent);
    for (int n = 0; n < config.sequences; ++n) {
        const LatentFrames part = synth_latents(config.T, config.d_latent, config.seed * 1000 + n);
        std::copy(part.data.begin(), part.data.end(),
                  all.data.begin() + static_cast<std::ptrdiff_t>(n) * config.T * config.d_latent);
    }
    const auto codebooks = train_codebooks(all, rvq, 20, config.seed);
    const TokenGrid tokens = rvq_encode(all, codebooks);

    std::vector<TokenGrid> grids;
    std::set<std::vector<int>> continuations;
    for (int n = 0; n < config.sequences; ++n) {
        TokenGrid g(config.T, config.K, config.M);
        for (int t = 1; t <= config.T; ++t) {
            // shared opening timestep
            const int src_t = t == 1 ? 1 : n * config.T + t;
            for (int k = 1; k <= config.K; ++k) {
                g.set(t, k, tokens.at(src_t, k));
            }
        }
        auto cont = g.stream(1);
        cont.erase(cont.begin());
        if (!continuations.insert(cont).second) {
            throw ValidationError("memorization corpus produced duplicate continuations; change the seed");
        }
        grids.push_back(std::move(g));
    }
    return {std::move(grids), codebooks};
}

double pitch_class_frequency(int pitch_class) {
    if (pitch_class < 0 || pitch_class >= kPitchClasses) {
        throw ValidationError("pitch class outside 0..11");
    }
    return 440.0 * std::pow(2.0, (pitch_class - 9) / 12.0);
}

Sonifier::Sonifier(int d_latent, uint64_t seed, int sample_rate)
    : d_(d_latent), sample_rate_(sample_rate), directions_(kPitchClasses, d_latent) {
    if (d_latent < 1 || sample_rate < 1) {
        throw ValidationError("sonifier needs d_latent >= 1 and a positive sample rate");
    }
    Rng rng(seed);
    for (int c = 0; c < kPitchClasses; ++c) {
        for (int j = 0; j < d_latent; ++j) {
            directions_(c, j) = rng.normal();
        }
        directions_.row(c).normalize();
    }
}

int Sonifier::pitch_class(std::span<const double> frame) const {
    if (static_cast<int>(frame.size()) != d_) {
        throw ValidationError("latent frame dimension does not match the sonifier");
    }
    const Eigen::Map<const Eigen::VectorXd> x(frame.data(), d_);
    Eigen::Index best = 0;
    (directions_ * x).maxCoeff(&best);
    return static_cast<int>(best);
}

QuantizedChroma Sonifier::classes_of(const LatentFrames & frames) const {
    QuantizedChroma q;
    for (int i = 0; i < frames.T; ++i) {
        q.classes.push_back(pitch_class(frames.frame(i)));
    }
    return q;
}

AudioBuffer Sonifier::render(const QuantizedChroma & classes) const {
    AudioBuffer audio;
    audio.sample_rate = sample_rate_;
    audio.samples.reserve(classes.classes.size() * kChromaWindow);
    for (int c : classes.classes) {
        const double w = 2.0 * std::numbers::pi * pitch_class_frequency(c) / sample_rate_;
        for (int n = 0; n < kChromaWindow; ++n) {
            audio.samples.push_back(0.5 * std::sin(w * n));
        }
    }
    return audio;
}

QuantizedChroma Sonifier::analyse(const AudioBuffer & audio) const {
    const QuantizedChroma all = quantize_chroma(compute_chromagram(audio));
    QuantizedChroma out;
    constexpr int stride = kChromaWindow / kChromaHop;
    for (std::size_t i = 0; i < all.classes.size(); i += stride) {
        out.classes.push_back(all.classes[i]);
    }
    return out;
}

double chroma_adherence(const TokenGrid & grid, std::span<const Codebook> codebooks, const Sonifier & sonifier,
                        const QuantizedChroma & reference) {
    const LatentFrames latents = rvq_decode(grid, codebooks);
    const QuantizedChroma heard = sonifier.analyse(sonifier.render(sonifier.classes_of(latents)));
    return chroma_cosine_similarity(heard, reference);
}

} // namespace interleave
