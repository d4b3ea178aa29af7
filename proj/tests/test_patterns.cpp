#include "interleave/error.h"
#include "interleave/pattern_io.h"
#include "interleave/patterns.h"
#include "interleave/rng.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace interleave;

namespace {

std::vector<PatternKind> kinds_for(int K) {
    std::vector<PatternKind> out;
    for (PatternKind kind : kAllPatternKinds) {
        if (!is_stereo(kind) || K % 2 == 0) {
            out.push_back(kind);
        }
    }
    return out;
}

TokenGrid random_grid(Rng & rng, int T, int K, int M) {
    TokenGrid g(T, K, M);
    for (int t = 1; t <= T; ++t) {
        for (int k = 1; k <= K; ++k) {
            g.set(t, k, 1 + static_cast<int>(rng.uniform_int(M)));
        }
    }
    return g;
}

std::set<Coordinate> as_set(const PatternStep & step) { return {step.begin(), step.end()}; }

// Step index of (t, k) computed from the construction rules by hand.
int expected_step(PatternKind kind, int T, int K, int t, int k) {
    const int level = (k + 1) / 2;
    switch (kind) {
    case PatternKind::Parallel:
        return t;
    case PatternKind::Delay:
        return t + k - 1;
    case PatternKind::PartialDelay:
        return k == 1 ? t : t + 1;
    case PatternKind::Flatten:
        return (t - 1) * K + k;
    case PatternKind::PartialFlatten:
        return K == 1 ? t : (k == 1 ? 2 * t - 1 : 2 * t);
    case PatternKind::CoarseFirst:
        return K == 1 ? t : (k == 1 ? t : T + t);
    case PatternKind::StereoDelay:
        return t + (k % 2 == 1 ? level - 1 : level);
    case PatternKind::StereoPartialDelay:
        return t + level - 1;
    }
    return -1;
}

} // namespace

TEST(BuildPattern, DelaySmallMatchesHandSubstitution) {
    const Pattern p = build_pattern(PatternKind::Delay, 3, 2);
    ASSERT_EQ(p.num_steps(), 4);
    EXPECT_TRUE(p.steps[0].empty());
    EXPECT_EQ(as_set(p.steps[1]), (std::set<Coordinate>{{1, 1}}));
    EXPECT_EQ(as_set(p.steps[2]), (std::set<Coordinate>{{2, 1}, {1, 2}}));
    EXPECT_EQ(as_set(p.steps[3]), (std::set<Coordinate>{{3, 1}, {2, 2}}));
    EXPECT_EQ(as_set(p.steps[4]), (std::set<Coordinate>{{3, 2}}));
}

TEST(BuildPattern, EveryCoordinateLandsOnItsRuleStep) {
    for (int K : {1, 2, 4, 6, 8}) {
        for (int T : {1, 2, 5, 17}) {
            for (PatternKind kind : kinds_for(K)) {
                const Pattern p = build_pattern(kind, T, K);
                const PatternLayout layout(p);
                for (int t = 1; t <= T; ++t) {
                    for (int k = 1; k <= K; ++k) {
                        EXPECT_EQ(layout.step_of(t, k), expected_step(kind, T, K, t, k))
                            << to_string(kind) << " T=" << T << " K=" << K << " (" << t << "," << k << ")";
                    }
                }
            }
        }
    }
}

TEST(BuildPattern, StepCountsMatchConstructionFormulas) {
    const int T = 10;
    const int K = 4;
    EXPECT_EQ(build_pattern(PatternKind::Parallel, T, K).num_steps(), T);
    EXPECT_EQ(build_pattern(PatternKind::Delay, T, K).num_steps(), T + K - 1);
    EXPECT_EQ(build_pattern(PatternKind::PartialDelay, T, K).num_steps(), T + 1);
    EXPECT_EQ(build_pattern(PatternKind::Flatten, T, K).num_steps(), T * K);
    EXPECT_EQ(build_pattern(PatternKind::PartialFlatten, T, K).num_steps(), 2 * T);
    EXPECT_EQ(build_pattern(PatternKind::CoarseFirst, T, K).num_steps(), 2 * T);
    EXPECT_EQ(build_pattern(PatternKind::StereoPartialDelay, T, K).num_steps(), T + K / 2 - 1);
    EXPECT_EQ(build_pattern(PatternKind::StereoDelay, T, K).num_steps(), T + K / 2);
}

TEST(BuildPattern, SingleCellGridIsOneStepForEveryMonoKind) {
    const Pattern parallel = build_pattern(PatternKind::Parallel, 1, 1);
    ASSERT_EQ(parallel.num_steps(), 1);
    EXPECT_EQ(parallel.steps[1], (PatternStep{{1, 1}}));
    EXPECT_EQ(build_pattern(PatternKind::Flatten, 1, 1).steps, build_pattern(PatternKind::Delay, 1, 1).steps);
}

TEST(BuildPattern, RejectsBadDimensions) {
    EXPECT_THROW(build_pattern(PatternKind::Delay, 0, 2), ValidationError);
    EXPECT_THROW(build_pattern(PatternKind::Delay, 2, 0), ValidationError);
    EXPECT_THROW(build_pattern(PatternKind::StereoDelay, 4, 3), ValidationError);
    EXPECT_THROW(build_pattern(PatternKind::StereoPartialDelay, 4, 1), ValidationError);
}

TEST(BuildPattern, StereoPartialDelayWithOneLevelIsParallel) {
    for (int T : {1, 3, 9}) {
        EXPECT_EQ(build_pattern(PatternKind::StereoPartialDelay, T, 2).steps,
                  build_pattern(PatternKind::Parallel, T, 2).steps);
    }
}

TEST(ValidatePattern, EveryBuiltPatternIsValid) {
    for (int K = 1; K <= 8; ++K) {
        for (int T : {1, 2, 7, 64}) {
            for (PatternKind kind : kinds_for(K)) {
                const auto report = validate_pattern(build_pattern(kind, T, K));
                EXPECT_TRUE(report.ok) << to_string(kind) << " T=" << T << " K=" << K;
            }
        }
    }
}

TEST(ValidatePattern, PartitionCheckedExhaustivelyUpTo64) {
    for (int K : {1, 2, 3, 4, 8, 64}) {
        for (int T : {1, 13, 64}) {
            for (PatternKind kind : kinds_for(K)) {
                const Pattern p = build_pattern(kind, T, K);
                std::vector<int> seen(static_cast<std::size_t>(T) * K, 0);
                for (const auto & step : p.steps) {
                    std::set<int> codebooks;
                    for (const auto & c : step) {
                        ++seen[static_cast<std::size_t>(c.t - 1) * K + (c.k - 1)];
                        EXPECT_TRUE(codebooks.insert(c.k).second);
                    }
                }
                EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }))
                    << to_string(kind) << " T=" << T << " K=" << K;
            }
        }
    }
}

TEST(ValidatePattern, DuplicateCodebookInStep) {
    Pattern p{std::nullopt, 2, 1, {{}, {{1, 1}, {2, 1}}}};
    const auto report = validate_pattern(p);
    EXPECT_FALSE(report.ok);
    EXPECT_TRUE(report.has(ViolationKind::DuplicateCodebook));
    const bool named = std::any_of(report.violations.begin(), report.violations.end(), [](const Violation & v) {
        return v.message.find("duplicate codebook in step") != std::string::npos;
    });
    EXPECT_TRUE(named);
}

TEST(ValidatePattern, MissingCoordinateIsNotAPartition) {
    Pattern p{std::nullopt, 2, 2, {{}, {{1, 1}, {1, 2}}, {{2, 1}}}};
    const auto report = validate_pattern(p);
    EXPECT_FALSE(report.ok);
    EXPECT_TRUE(report.has(ViolationKind::NotPartition));
}

TEST(ValidatePattern, ReportsEveryViolationKind) {
    Pattern nonempty{std::nullopt, 1, 1, {{{1, 1}}}};
    EXPECT_TRUE(validate_pattern(nonempty).has(ViolationKind::NonEmptyInitialStep));

    Pattern out_of_range{std::nullopt, 1, 1, {{}, {{2, 1}}}};
    EXPECT_TRUE(validate_pattern(out_of_range).has(ViolationKind::OutOfRange));

    Pattern backwards{std::nullopt, 2, 1, {{}, {{2, 1}}, {{1, 1}}}};
    EXPECT_TRUE(validate_pattern(backwards).has(ViolationKind::NonMonotone));

    Pattern empty_step{std::nullopt, 1, 1, {{}, {}, {{1, 1}}}};
    EXPECT_TRUE(validate_pattern(empty_step).has(ViolationKind::EmptyStep));

    Pattern dims{std::nullopt, 0, 1, {{}}};
    EXPECT_TRUE(validate_pattern(dims).has(ViolationKind::BadDimensions));

    Pattern duplicate_across{std::nullopt, 1, 1, {{}, {{1, 1}}, {{1, 1}}}};
    EXPECT_TRUE(validate_pattern(duplicate_across).has(ViolationKind::NotPartition));
    EXPECT_THROW(require_valid(duplicate_across), ValidationError);
}

TEST(ApplyPattern, ParallelAndDelayOnTwoByTwo) {
    const TokenGrid grid = TokenGrid::from_rows({{5, 7}, {6, 8}}, 9);

    const auto par = apply_pattern(build_pattern(PatternKind::Parallel, 2, 2), grid);
    ASSERT_EQ(par.S, 2);
    EXPECT_EQ(par.at(0, 1), kSpecialToken);
    EXPECT_EQ(par.at(0, 2), kSpecialToken);
    EXPECT_EQ(par.at(1, 1), 5);
    EXPECT_EQ(par.at(1, 2), 7);
    EXPECT_EQ(par.at(2, 1), 6);
    EXPECT_EQ(par.at(2, 2), 8);

    const auto del = apply_pattern(build_pattern(PatternKind::Delay, 2, 2), grid);
    ASSERT_EQ(del.S, 3);
    const std::vector<std::vector<int>> expected{{0, 0}, {5, 0}, {6, 7}, {0, 8}};
    for (int s = 0; s <= 3; ++s) {
        EXPECT_EQ(del.at(s, 1), expected[s][0]) << "s=" << s;
        EXPECT_EQ(del.at(s, 2), expected[s][1]) << "s=" << s;
    }
}

TEST(ApplyPattern, FlattenSingleCell) {
    const auto seq = apply_pattern(build_pattern(PatternKind::Flatten, 1, 1), TokenGrid::from_rows({{9}}, 9));
    ASSERT_EQ(seq.S, 1);
    EXPECT_EQ(seq.at(1, 1), 9);
}

TEST(ApplyPattern, RejectsShapeMismatch) {
    EXPECT_THROW(apply_pattern(build_pattern(PatternKind::Delay, 3, 2), TokenGrid(2, 2, 4)), ValidationError);
}

TEST(RevertPattern, RoundtripPropertyAllKinds) {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const int K = std::vector<int>{1, 2, 4, 8}[rng.uniform_int(4)];
        const int T = 1 + static_cast<int>(rng.uniform_int(64));
        const int M = 1 + static_cast<int>(rng.uniform_int(64));
        const TokenGrid grid = random_grid(rng, T, K, M);
        for (PatternKind kind : kinds_for(K)) {
            const Pattern p = build_pattern(kind, T, K);
            const auto seq = apply_pattern(p, grid);
            ASSERT_EQ(revert_pattern(p, seq), grid) << to_string(kind);
        }
    }
}

TEST(RevertPattern, SpecExamples) {
    Rng rng(3);
    const TokenGrid small = random_grid(rng, 3, 2, 10);
    const Pattern delay = build_pattern(PatternKind::Delay, 3, 2);
    EXPECT_EQ(revert_pattern(delay, apply_pattern(delay, small)), small);

    const TokenGrid stereo = random_grid(rng, 10, 8, 50);
    const Pattern sd = build_pattern(PatternKind::StereoDelay, 10, 8);
    EXPECT_EQ(revert_pattern(sd, apply_pattern(sd, stereo)), stereo);
}

TEST(RevertPattern, RealTokenAtAbsentSlotIsAnError) {
    const Pattern delay = build_pattern(PatternKind::Delay, 2, 2);
    auto seq = apply_pattern(delay, TokenGrid::from_rows({{5, 7}, {6, 8}}, 9));
    seq.set(1, 2, 3); // codebook 2 is absent at step 1
    EXPECT_THROW(revert_pattern(delay, seq), ValidationError);

    auto missing = apply_pattern(delay, TokenGrid::from_rows({{5, 7}, {6, 8}}, 9));
    missing.set(2, 1, kSpecialToken);
    EXPECT_THROW(revert_pattern(delay, missing), ValidationError);
}

TEST(RevertPattern, InitialRowMustBeSpecial) {
    const Pattern p = build_pattern(PatternKind::Parallel, 1, 1);
    auto seq = apply_pattern(p, TokenGrid::from_rows({{2}}, 3));
    seq.set(0, 1, 2);
    EXPECT_THROW(revert_pattern(p, seq), ValidationError);
}

TEST(StepCounts, TableConventionAtFullScale) {
    struct Row {
        PatternKind kind;
        int exact;
        int nominal;
    };
    const std::vector<Row> rows{
        {PatternKind::Parallel, 1500, 1500},      {PatternKind::Delay, 1503, 1500},
        {PatternKind::PartialDelay, 1501, 1500},  {PatternKind::PartialFlatten, 3000, 3000},
        {PatternKind::CoarseFirst, 3000, 3000},   {PatternKind::Flatten, 6000, 6000},
    };
    for (const auto & r : rows) {
        const auto c = step_counts(build_pattern(r.kind, 1500, 4));
        EXPECT_EQ(c.exact, r.exact) << to_string(r.kind);
        EXPECT_EQ(c.nominal, r.nominal) << to_string(r.kind);
    }
    EXPECT_EQ(step_counts(build_pattern(PatternKind::StereoPartialDelay, 1500, 8)).nominal, 1500);
    EXPECT_EQ(step_counts(build_pattern(PatternKind::StereoDelay, 1500, 8)).nominal, 1500);
}

TEST(StepCounts, CustomPatternNominalIsExact) {
    Pattern custom = build_pattern(PatternKind::Delay, 4, 2);
    custom.kind.reset();
    const auto c = step_counts(custom);
    EXPECT_EQ(c.exact, 5);
    EXPECT_EQ(c.nominal, 5);
}

TEST(PatternNames, ParseRoundtrip) {
    for (PatternKind kind : kAllPatternKinds) {
        EXPECT_EQ(parse_pattern_kind(to_string(kind)), kind);
    }
    EXPECT_THROW(parse_pattern_kind("zigzag"), UsageError);
}

TEST(PatternIo, JsonRoundtripKeepsStepsAndKind) {
    for (PatternKind kind : kinds_for(4)) {
        const Pattern p = build_pattern(kind, 5, 4);
        const Pattern back = pattern_from_json(pattern_to_json(p));
        EXPECT_EQ(back, p) << to_string(kind);
    }
    Pattern custom{std::nullopt, 1, 2, {{}, {{1, 2}}, {{1, 1}}}};
    EXPECT_EQ(pattern_from_json(pattern_to_json(custom)), custom);
}

TEST(PatternIo, JsonRejectsMalformedDocuments) {
    EXPECT_THROW(pattern_from_json(nlohmann::json::parse(R"({"T": 2})")), FormatError);
    EXPECT_THROW(pattern_from_json(nlohmann::json::parse(R"({"T": 1, "K": 1, "steps": [[[1]]]})")), FormatError);
}

TEST(PatternIo, JsonLoadsBrokenPatternsForValidation) {
    const auto doc = nlohmann::json::parse(R"({"kind": "custom", "T": 2, "K": 1, "steps": [[], [[1,1],[2,1]]]})");
    const Pattern p = pattern_from_json(doc);
    EXPECT_TRUE(validate_pattern(p).has(ViolationKind::DuplicateCodebook));
}

TEST(PatternIo, GridCsvRoundtrip) {
    Rng rng(5);
    const TokenGrid g = random_grid(rng, 7, 3, 20);
    const std::string csv = grid_to_csv(g);
    EXPECT_EQ(grid_from_csv(csv, 20), g);
    const std::string first = csv.substr(0, csv.find('\n'));
    EXPECT_EQ(std::count(first.begin(), first.end(), ','), 2);
    EXPECT_THROW(grid_from_csv("1,2\n3\n", 5), FormatError);
    EXPECT_THROW(grid_from_csv("1,x\n", 5), FormatError);
}

TEST(PatternIo, RenderLayoutShowsDelayStaircase) {
    const std::string text = render_layout(build_pattern(PatternKind::Delay, 3, 2));
    EXPECT_NE(text.find("k1 | 1 2 3 ."), std::string::npos) << text;
    EXPECT_NE(text.find("k2 | . 1 2 3"), std::string::npos) << text;
}

TEST(TokenGridTest, RejectsReservedAndOutOfRangeIds) {
    TokenGrid g(2, 2, 4);
    EXPECT_THROW(g.set(1, 1, 0), ValidationError);
    EXPECT_THROW(g.set(1, 1, 5), ValidationError);
    EXPECT_THROW(g.set(3, 1, 1), ValidationError);
    EXPECT_THROW(TokenGrid::from_rows({{1, 2}, {3}}, 4), ValidationError);
}
