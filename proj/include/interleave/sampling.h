#pragma once

#include "interleave/model.h"
#include "interleave/patterns.h"
#include "interleave/rng.h"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace interleave {

enum class SamplingMode { Sample, Greedy };

struct SamplerConfig {
    int top_k = 250;              // clamped to M
    double temperature = 1.0;
    double guidance_scale = 3.0;
    SamplingMode mode = SamplingMode::Sample;

    void validate() const;
};

// uncond + scale * (cond - uncond), on raw logits.
Eigen::RowVectorXd cfg_combine(const Eigen::RowVectorXd & cond, const Eigen::RowVectorXd & uncond, double scale);
Logits cfg_combine(const Logits & cond, const Logits & uncond, double scale);

// Returns a token id in 1..M. Greedy mode or temperature 0 take the argmax;
// otherwise logits are divided by the temperature, cut to the top_k largest
// (ties to the lowest index), renormalised and sampled with one uniform draw.
int sample_token(std::span<const double> logits, const SamplerConfig & cfg, Rng & rng);

struct GenerationTrace {
    std::vector<double> step_seconds; // wall time per pattern step
    int forward_passes = 0;
};

// Walks the pattern: at step s the model sees the already written steps
// 0..s and every codebook present in P_{s+1} is sampled independently.
// With a non-empty condition and guidance_scale != 1 an unconditional pass
// (empty condition) is combined with the conditional one.
TokenGrid generate(const Parameters & params, const Pattern & pattern, const Condition & condition,
                   const SamplerConfig & cfg, Rng & rng, GenerationTrace * trace = nullptr);

// As generate, but positions with t <= prompt.timesteps() are forced to the
// prompt tokens. A prompt covering the whole grid reproduces it unchanged.
TokenGrid continue_from_prompt(const Parameters & params, const Pattern & pattern, const TokenGrid & prompt,
                               const Condition & condition, const SamplerConfig & cfg, Rng & rng,
                               GenerationTrace * trace = nullptr);

} // namespace interleave
