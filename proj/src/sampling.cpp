#include "interleave/sampling.h"

#include "interleave/error.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace interleave {

namespace {

int argmax(std::span<const double> logits) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
        if (logits[i] > logits[best]) {
            best = i;
        }
    }
    return best + 1;
}

TokenGrid decode_loop(const Parameters & params, const Pattern & pattern, const TokenGrid * prompt,
                      const Condition & condition, const SamplerConfig & cfg, Rng & rng, GenerationTrace * trace) {
    cfg.validate();
    const ModelConfig & mc = params.config();
    if (pattern.K != mc.K) {
        throw ValidationError("pattern has K=" + std::to_string(pattern.K) + " codebooks, model has K=" +
                              std::to_string(mc.K));
    }
    const PatternLayout layout(pattern);
    const int S = layout.num_steps();
    if (S > mc.max_steps) {
        throw ValidationError("pattern needs " + std::to_string(S) + " steps, model supports " +
                              std::to_string(mc.max_steps));
    }
    int prompt_len = 0;
    if (prompt != nullptr) {
        if (prompt->codebooks() != pattern.K) {
            throw ValidationError("prompt codebook count does not match the pattern");
        }
        if (prompt->timesteps() > pattern.T) {
            throw ValidationError("prompt of " + std::to_string(prompt->timesteps()) +
                                  " timesteps is longer than the grid (" + std::to_string(pattern.T) + ")");
        }
        if (prompt->vocab() > mc.M) {
            throw ValidationError("prompt vocabulary exceeds the model vocabulary");
        }
        prompt_len = prompt->timesteps();
    }

    const bool guided = !condition.empty() && cfg.guidance_scale != 1.0;
    const Condition unconditional;

    InterleavedSequence seq(S, pattern.K, mc.M);
    std::vector<char> written(static_cast<std::size_t>(S + 1) * pattern.K, 0);
    std::fill(written.begin(), written.begin() + pattern.K, 1); // row 0 is all special

    for (int s = 0; s < S; ++s) {
        const auto started = std::chrono::steady_clock::now();
        std::vector<int> sampled;
        for (int k = 1; k <= pattern.K; ++k) {
            const int t = layout.timestep(s + 1, k);
            if (t == 0) {
                written[static_cast<std::size_t>(s + 1) * pattern.K + (k - 1)] = 1;
            } else if (t <= prompt_len) {
                seq.set(s + 1, k, prompt->at(t, k));
                written[static_cast<std::size_t>(s + 1) * pattern.K + (k - 1)] = 1;
            } else {
                sampled.push_back(k);
            }
        }
        if (!sampled.empty()) {
            // the model may only read rows that have been fully written
            for (std::size_t i = 0; i < static_cast<std::size_t>(s + 1) * pattern.K; ++i) {
                if (written[i] == 0) {
                    throw InvariantError("generation read slot (" + std::to_string(i / pattern.K) + "," +
                                         std::to_string(i % pattern.K + 1) + ") before writing it");
                }
            }
            const auto inputs = step_inputs(seq, s + 1);
            Logits logits = forward(params, inputs, condition);
            int passes = 1;
            if (guided) {
                const Logits uncond = forward(params, inputs, unconditional);
                logits = cfg_combine(logits, uncond, cfg.guidance_scale);
                ++passes;
            }
            for (int k : sampled) {
                const Eigen::RowVectorXd row = logits.per_codebook[k - 1].row(s);
                const int token = sample_token({row.data(), static_cast<std::size_t>(row.size())}, cfg, rng);
                seq.set(s + 1, k, token);
                written[static_cast<std::size_t>(s + 1) * pattern.K + (k - 1)] = 1;
            }
            if (trace != nullptr) {
                trace->forward_passes += passes;
            }
        }
        if (trace != nullptr) {
            trace->step_seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
        }
    }
    return revert_pattern(pattern, seq);
}

} // namespace

void SamplerConfig::validate() const {
    if (top_k < 1) {
        throw ValidationError("top_k must be >= 1");
    }
    if (!(temperature >= 0.0)) {
        throw ValidationError("temperature must be >= 0");
    }
    if (!(guidance_scale >= 0.0)) {
        throw ValidationError("guidance scale must be >= 0");
    }
}

Eigen::RowVectorXd cfg_combine(const Eigen::RowVectorXd & cond, const Eigen::RowVectorXd & uncond, double scale) {
    if (cond.size() != uncond.size()) {
        throw ValidationError("conditional and unconditional logits differ in shape");
    }
    if (scale == 1.0) {
        return cond;
    }
    return uncond + scale * (cond - uncond);
}

Logits cfg_combine(const Logits & cond, const Logits & uncond, double scale) {
    if (cond.per_codebook.size() != uncond.per_codebook.size()) {
        throw ValidationError("conditional and unconditional logits differ in shape");
    }
    Logits out;
    for (std::size_t k = 0; k < cond.per_codebook.size(); ++k) {
        const auto & c = cond.per_codebook[k];
        const auto & u = uncond.per_codebook[k];
        if (c.rows() != u.rows() || c.cols() != u.cols()) {
            throw ValidationError("conditional and unconditional logits differ in shape");
        }
        out.per_codebook.push_back(scale == 1.0 ? c : Eigen::MatrixXd(u + scale * (c - u)));
    }
    return out;
}

int sample_token(std::span<const double> logits, const SamplerConfig & cfg, Rng & rng) {
    cfg.validate();
    if (logits.empty()) {
        throw ValidationError("cannot sample from an empty logit row");
    }
    bool any_finite = false;
    for (double x : logits) {
        if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
            throw ValidationError("logits must be finite or -inf");
        }
        any_finite = any_finite || std::isfinite(x);
    }
    if (!any_finite) {
        throw ValidationError("all logits are -inf");
    }
    if (cfg.mode == SamplingMode::Greedy || cfg.temperature == 0.0) {
        return argmax(logits);
    }

    const int n = static_cast<int>(logits.size());
    const int k = std::min(cfg.top_k, n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&logits](int a, int b) { return logits[a] > logits[b]; });
    if (k == 1) {
        return order.front() + 1;
    }

    const double top = logits[order.front()] / cfg.temperature;
    std::vector<double> weights(k);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        const double x = logits[order[i]];
        weights[i] = std::isfinite(x) ? std::exp(x / cfg.temperature - top) : 0.0;
        total += weights[i];
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        acc += weights[i];
        if (u < acc) {
            return order[i] + 1;
        }
    }
    // rounding: fall back to the last token with nonzero weight
    for (int i = k - 1; i >= 0; --i) {
        if (weights[i] > 0.0) {
            return order[i] + 1;
        }
    }
    return order.front() + 1;
}

TokenGrid generate(const Parameters & params, const Pattern & pattern, const Condition & condition,
                   const SamplerConfig & cfg, Rng & rng, GenerationTrace * trace) {
    return decode_loop(params, pattern, nullptr, condition, cfg, rng, trace);
}

TokenGrid continue_from_prompt(const Parameters & params, const Pattern & pattern, const TokenGrid & prompt,
                               const Condition & condition, const SamplerConfig & cfg, Rng & rng,
                               GenerationTrace * trace) {
    return decode_loop(params, pattern, &prompt, condition, cfg, rng, trace);
}

} // namespace interleave
