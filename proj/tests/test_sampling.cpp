#include "interleave/error.h"
#include "interleave/model.h"
#include "interleave/rng.h"
#include "interleave/sampling.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace interleave;

namespace {

ModelConfig small_config(ConditioningMode mode) {
    ModelConfig c;
    c.K = 3;
    c.M = 7;
    c.D = 16;
    c.L = 2;
    c.H = 2;
    c.max_steps = 32;
    c.mode = mode;
    return c;
}

Condition random_cross(uint64_t seed, int rows, int D) {
    Rng rng(seed);
    Condition c;
    c.cross = ConditioningTensor(rows, D);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < D; ++j) {
            c.cross.rows(i, j) = rng.normal();
        }
    }
    return c;
}

std::vector<double> softmax(const std::vector<double> & x, double temperature) {
    double top = -INFINITY;
    for (double v : x) {
        top = std::max(top, v / temperature);
    }
    std::vector<double> p;
    double total = 0.0;
    for (double v : x) {
        p.push_back(std::exp(v / temperature - top));
        total += p.back();
    }
    for (double & v : p) {
        v /= total;
    }
    return p;
}

std::vector<double> frequencies(const std::vector<double> & logits, const SamplerConfig & cfg, int draws,
                                uint64_t seed) {
    Rng rng(seed);
    std::vector<double> counts(logits.size(), 0.0);
    for (int i = 0; i < draws; ++i) {
        counts[sample_token(logits, cfg, rng) - 1] += 1.0;
    }
    for (double & c : counts) {
        c /= draws;
    }
    return counts;
}

} // namespace

TEST(CfgCombine, ScaleOneReturnsConditionalExactly) {
    Rng rng(1);
    Eigen::RowVectorXd cond(6);
    Eigen::RowVectorXd uncond(6);
    for (int i = 0; i < 6; ++i) {
        cond(i) = rng.normal() * 1e-3;
        uncond(i) = rng.normal() * 1e8;
    }
    EXPECT_TRUE((cfg_combine(cond, uncond, 1.0).array() == cond.array()).all());
    EXPECT_TRUE((cfg_combine(cond, uncond, 0.0).array() == uncond.array()).all());
}

TEST(CfgCombine, LinearExtrapolation) {
    Eigen::RowVectorXd cond(3);
    Eigen::RowVectorXd uncond(3);
    cond << 1.0, 2.0, 3.0;
    uncond << 0.0, 2.0, 5.0;
    const Eigen::RowVectorXd out = cfg_combine(cond, uncond, 3.0);
    EXPECT_DOUBLE_EQ(out(0), 3.0);
    EXPECT_DOUBLE_EQ(out(1), 2.0);
    EXPECT_DOUBLE_EQ(out(2), -1.0);
    EXPECT_THROW(cfg_combine(cond, Eigen::RowVectorXd(2), 3.0), ValidationError);
}

TEST(SampleToken, TopOneEqualsGreedy) {
    Rng rng(5);
    SamplerConfig top1;
    top1.top_k = 1;
    SamplerConfig greedy;
    greedy.mode = SamplingMode::Greedy;
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> logits(1 + rng.uniform_int(40));
        for (double & x : logits) {
            // coarse values so ties occur
            x = static_cast<double>(rng.uniform_int(5));
        }
        EXPECT_EQ(sample_token(logits, top1, rng), sample_token(logits, greedy, rng));
    }
}

TEST(SampleToken, GreedyBreaksTiesTowardLowestIndex) {
    SamplerConfig greedy;
    greedy.mode = SamplingMode::Greedy;
    Rng rng(0);
    EXPECT_EQ(sample_token(std::vector<double>{1.0, 3.0, 3.0, 2.0}, greedy, rng), 2);
    SamplerConfig zero_temp;
    zero_temp.temperature = 0.0;
    EXPECT_EQ(sample_token(std::vector<double>{-1.0, -1.0}, zero_temp, rng), 1);
}

TEST(SampleToken, FullVocabularyMatchesSoftmax) {
    const std::vector<double> logits{0.0, 0.5, 1.0, 0.2, -0.3};
    SamplerConfig cfg;
    cfg.top_k = 5;
    const auto freq = frequencies(logits, cfg, 1000000, 42);
    const auto p = softmax(logits, 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_NEAR(freq[i] / p[i], 1.0, 0.01) << "token " << i + 1;
    }
}

TEST(SampleToken, TemperatureReshapesDistribution) {
    const std::vector<double> logits{0.0, 1.0, 2.0};
    for (double temp : {0.5, 2.0}) {
        SamplerConfig cfg;
        cfg.temperature = temp;
        const auto freq = frequencies(logits, cfg, 200000, 3);
        const auto p = softmax(logits, temp);
        for (std::size_t i = 0; i < p.size(); ++i) {
            EXPECT_NEAR(freq[i], p[i], 0.005) << "T=" << temp;
        }
    }
}

TEST(SampleToken, TopKRestrictsSupportAndRenormalises) {
    const std::vector<double> logits{0.1, 2.0, -1.0, 1.5, 0.7};
    SamplerConfig cfg;
    cfg.top_k = 2;
    const auto freq = frequencies(logits, cfg, 200000, 9);
    EXPECT_EQ(freq[0] + freq[2] + freq[4], 0.0);
    const auto p = softmax({2.0, 1.5}, 1.0);
    EXPECT_NEAR(freq[1], p[0], 0.005);
    EXPECT_NEAR(freq[3], p[1], 0.005);
}

TEST(SampleToken, NegativeInfinityNeverSampled) {
    const double ninf = -std::numeric_limits<double>::infinity();
    SamplerConfig cfg;
    const auto freq = frequencies({ninf, 0.0, ninf, 0.0}, cfg, 20000, 1);
    EXPECT_EQ(freq[0], 0.0);
    EXPECT_EQ(freq[2], 0.0);
    EXPECT_NEAR(freq[1], 0.5, 0.02);
}

TEST(SampleToken, RejectsBadInputs) {
    SamplerConfig cfg;
    Rng rng(0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double ninf = -std::numeric_limits<double>::infinity();
    EXPECT_THROW(sample_token(std::vector<double>{0.0, nan}, cfg, rng), ValidationError);
    EXPECT_THROW(sample_token(std::vector<double>{-ninf}, cfg, rng), ValidationError);
    EXPECT_THROW(sample_token(std::vector<double>{ninf, ninf}, cfg, rng), ValidationError);
    EXPECT_THROW(sample_token(std::vector<double>{}, cfg, rng), ValidationError);
    cfg.top_k = 0;
    EXPECT_THROW(sample_token(std::vector<double>{1.0}, cfg, rng), ValidationError);
    cfg.top_k = 3;
    cfg.temperature = -1.0;
    EXPECT_THROW(sample_token(std::vector<double>{1.0}, cfg, rng), ValidationError);
}

TEST(Generate, DeterministicForSeed) {
    const Parameters p = init_params(small_config(ConditioningMode::CrossAttention), 3);
    const Pattern pattern = build_pattern(PatternKind::Delay, 6, 3);
    const Condition cond = random_cross(2, 4, 16);
    SamplerConfig cfg;
    Rng a(11);
    Rng b(11);
    Rng c(12);
    const TokenGrid ga = generate(p, pattern, cond, cfg, a);
    EXPECT_EQ(ga, generate(p, pattern, cond, cfg, b));
    EXPECT_NE(ga, generate(p, pattern, cond, cfg, c));
    EXPECT_EQ(ga.timesteps(), 6);
    EXPECT_EQ(ga.codebooks(), 3);
}

TEST(Generate, GreedyOutputIsAFixedPointOfTheModel) {
    // Rerun the finished sequence in one forward pass: by causality every
    // written slot must be the argmax of the logits that produced it.
    for (PatternKind kind : {PatternKind::Parallel, PatternKind::Delay, PatternKind::Flatten,
                             PatternKind::CoarseFirst}) {
        const Parameters p = init_params(small_config(ConditioningMode::None), 8);
        const Pattern pattern = build_pattern(kind, 4, 3);
        SamplerConfig cfg;
        cfg.mode = SamplingMode::Greedy;
        Rng rng(0);
        const TokenGrid g = generate(p, pattern, {}, cfg, rng);
        const auto seq = apply_pattern(pattern, g);
        const Logits l = forward(p, step_inputs(seq, seq.S), {});
        for (int s = 0; s < seq.S; ++s) {
            for (int k = 1; k <= 3; ++k) {
                const int token = seq.at(s + 1, k);
                if (token == kSpecialToken) {
                    continue;
                }
                Eigen::Index best = 0;
                l.per_codebook[k - 1].row(s).maxCoeff(&best);
                EXPECT_EQ(token, best + 1) << to_string(kind) << " s=" << s << " k=" << k;
            }
        }
    }
}

TEST(Generate, GuidanceScaleZeroIsUnconditional) {
    const Parameters p = init_params(small_config(ConditioningMode::CrossAttention), 4);
    const Pattern pattern = build_pattern(PatternKind::Delay, 5, 3);
    SamplerConfig cfg;
    cfg.guidance_scale = 0.0;
    Rng a(3);
    Rng b(3);
    EXPECT_EQ(generate(p, pattern, random_cross(1, 3, 16), cfg, a), generate(p, pattern, {}, cfg, b));
}

TEST(Generate, GuidanceCountsForwardPasses) {
    const Parameters p = init_params(small_config(ConditioningMode::CrossAttention), 4);
    const Pattern pattern = build_pattern(PatternKind::Delay, 5, 3);
    SamplerConfig cfg;
    Rng rng(1);
    GenerationTrace guided;
    generate(p, pattern, random_cross(1, 3, 16), cfg, rng, &guided);
    EXPECT_EQ(guided.forward_passes, 2 * 7);
    EXPECT_EQ(guided.step_seconds.size(), 7u);
    cfg.guidance_scale = 1.0;
    GenerationTrace plain;
    generate(p, pattern, random_cross(1, 3, 16), cfg, rng, &plain);
    EXPECT_EQ(plain.forward_passes, 7);
}

TEST(Generate, RejectsMismatchedShapes) {
    const Parameters p = init_params(small_config(ConditioningMode::None), 1);
    SamplerConfig cfg;
    Rng rng(0);
    EXPECT_THROW(generate(p, build_pattern(PatternKind::Delay, 4, 2), {}, cfg, rng), ValidationError);
    EXPECT_THROW(generate(p, build_pattern(PatternKind::Flatten, 20, 3), {}, cfg, rng), ValidationError);
}

TEST(ContinueFromPrompt, FullPromptIsIdentity) {
    const Parameters p = init_params(small_config(ConditioningMode::None), 2);
    Rng data(4);
    for (PatternKind kind : {PatternKind::Delay, PatternKind::PartialFlatten, PatternKind::CoarseFirst}) {
        const Pattern pattern = build_pattern(kind, 5, 3);
        TokenGrid prompt(5, 3, 7);
        for (int t = 1; t <= 5; ++t) {
            for (int k = 1; k <= 3; ++k) {
                prompt.set(t, k, 1 + static_cast<int>(data.uniform_int(7)));
            }
        }
        SamplerConfig cfg;
        Rng rng(1);
        GenerationTrace trace;
        EXPECT_EQ(continue_from_prompt(p, pattern, prompt, {}, cfg, rng, &trace), prompt) << to_string(kind);
        EXPECT_EQ(trace.forward_passes, 0);
    }
}

TEST(ContinueFromPrompt, PartialPromptIsKept) {
    const Parameters p = init_params(small_config(ConditioningMode::None), 2);
    const Pattern pattern = build_pattern(PatternKind::Delay, 6, 3);
    TokenGrid prompt(2, 3, 7);
    prompt.set(1, 1, 4);
    prompt.set(2, 3, 6);
    SamplerConfig cfg;
    Rng rng(9);
    const TokenGrid out = continue_from_prompt(p, pattern, prompt, {}, cfg, rng);
    EXPECT_EQ(out.head(2), prompt);
    EXPECT_THROW(continue_from_prompt(p, pattern, TokenGrid(7, 3, 7), {}, cfg, rng), ValidationError);
    EXPECT_THROW(continue_from_prompt(p, pattern, TokenGrid(2, 2, 7), {}, cfg, rng), ValidationError);
}
