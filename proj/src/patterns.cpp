#include "interleave/patterns.h"

#include "interleave/error.h"

#include <algorithm>
#include <sstream>

namespace interleave {

namespace {

struct KindInfo {
    PatternKind kind;
    std::string_view name;
    std::string_view label;
};

constexpr KindInfo kKindInfo[] = {
    {PatternKind::Parallel, "parallel", "Parallel"},
    {PatternKind::Delay, "delay", "Delay"},
    {PatternKind::PartialDelay, "partial_delay", "Partial delay"},
    {PatternKind::Flatten, "flatten", "Flattening"},
    {PatternKind::PartialFlatten, "partial_flatten", "Partial flattening"},
    {PatternKind::CoarseFirst, "coarse_first", "Coarse first"},
    {PatternKind::StereoDelay, "stereo_delay", "Stereo delay"},
    {PatternKind::StereoPartialDelay, "stereo_partial_delay", "Stereo partial delay"},
};

const KindInfo & info(PatternKind kind) {
    for (const auto & i : kKindInfo) {
        if (i.kind == kind) {
            return i;
        }
    }
    throw InvariantError("unknown pattern kind");
}

std::string coord_str(const Coordinate & c) {
    return "(" + std::to_string(c.t) + "," + std::to_string(c.k) + ")";
}

// P_s = {(s - d_k, k) : 1 <= s - d_k <= T}; requires min(d) == 0.
Pattern delayed(PatternKind kind, int T, int K, const std::vector<int> & delay) {
    const int max_delay = *std::max_element(delay.begin(), delay.end());
    Pattern p{kind, T, K, {}};
    p.steps.resize(static_cast<std::size_t>(T + max_delay) + 1);
    for (int s = 1; s <= T + max_delay; ++s) {
        for (int k = 1; k <= K; ++k) {
            const int t = s - delay[k - 1];
            if (t >= 1 && t <= T) {
                p.steps[s].push_back({t, k});
            }
        }
    }
    return p;
}

// Codebook 1 revealed alone, the remaining codebooks of the same timestep
// together in a later step. `interleaved` alternates per timestep, otherwise
// all of codebook 1 comes first.
Pattern split_first(PatternKind kind, int T, int K, bool interleaved) {
    Pattern p{kind, T, K, {{}}};
    if (K == 1) {
        for (int t = 1; t <= T; ++t) {
            p.steps.push_back({{t, 1}});
        }
        return p;
    }
    auto rest = [K](int t) {
        PatternStep step;
        for (int k = 2; k <= K; ++k) {
            step.push_back({t, k});
        }
        return step;
    };
    if (interleaved) {
        for (int t = 1; t <= T; ++t) {
            p.steps.push_back({{t, 1}});
            p.steps.push_back(rest(t));
        }
    } else {
        for (int t = 1; t <= T; ++t) {
            p.steps.push_back({{t, 1}});
        }
        for (int t = 1; t <= T; ++t) {
            p.steps.push_back(rest(t));
        }
    }
    return p;
}

} // namespace

std::string_view to_string(PatternKind kind) { return info(kind).name; }

std::string_view display_name(PatternKind kind) { return info(kind).label; }

PatternKind parse_pattern_kind(std::string_view name) {
    for (const auto & i : kKindInfo) {
        if (i.name == name) {
            return i.kind;
        }
    }
    throw UsageError("unknown pattern kind '" + std::string(name) + "'");
}

bool is_stereo(PatternKind kind) {
    return kind == PatternKind::StereoDelay || kind == PatternKind::StereoPartialDelay;
}

Pattern build_pattern(PatternKind kind, int T, int K) {
    if (T < 1) {
        throw ValidationError(std::string(to_string(kind)) + " pattern requires T >= 1 (got " + std::to_string(T) + ")");
    }
    if (K < 1) {
        throw ValidationError(std::string(to_string(kind)) + " pattern requires K >= 1 (got " + std::to_string(K) + ")");
    }
    if (is_stereo(kind) && K % 2 != 0) {
        throw ValidationError(std::string(to_string(kind)) + " pattern requires an even K (got " + std::to_string(K) + ")");
    }

    std::vector<int> delay(K, 0);
    switch (kind) {
    case PatternKind::Parallel:
        return delayed(kind, T, K, delay);
    case PatternKind::Delay:
        for (int k = 1; k <= K; ++k) {
            delay[k - 1] = k - 1;
        }
        return delayed(kind, T, K, delay);
    case PatternKind::PartialDelay:
        for (int k = 2; k <= K; ++k) {
            delay[k - 1] = 1;
        }
        return delayed(kind, T, K, delay);
    case PatternKind::StereoPartialDelay:
        // channels interleaved [L1, R1, L2, R2, ...]; level = ceil(k / 2)
        for (int k = 1; k <= K; ++k) {
            delay[k - 1] = (k + 1) / 2 - 1;
        }
        return delayed(kind, T, K, delay);
    case PatternKind::StereoDelay:
        for (int k = 1; k <= K; ++k) {
            const int level = (k + 1) / 2;
            delay[k - 1] = (k % 2 == 1) ? level - 1 : level;
        }
        return delayed(kind, T, K, delay);
    case PatternKind::Flatten: {
        Pattern p{kind, T, K, {{}}};
        for (int t = 1; t <= T; ++t) {
            for (int k = 1; k <= K; ++k) {
                p.steps.push_back({{t, k}});
            }
        }
        return p;
    }
    case PatternKind::PartialFlatten:
        return split_first(kind, T, K, true);
    case PatternKind::CoarseFirst:
        return split_first(kind, T, K, false);
    }
    throw InvariantError("unhandled pattern kind");
}

bool ValidationReport::has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(), [kind](const Violation & v) { return v.kind == kind; });
}

ValidationReport validate_pattern(const Pattern & pattern) {
    ValidationReport report;
    auto add = [&report](ViolationKind kind, std::string message) {
        report.ok = false;
        report.violations.push_back({kind, std::move(message)});
    };

    const int T = pattern.T;
    const int K = pattern.K;
    if (T < 1 || K < 1) {
        add(ViolationKind::BadDimensions,
            "grid dimensions must be positive (T=" + std::to_string(T) + ", K=" + std::to_string(K) + ")");
    }
    if (pattern.steps.empty()) {
        add(ViolationKind::NonEmptyInitialStep, "pattern has no initial step P0");
        return report;
    }
    if (!pattern.steps.front().empty()) {
        add(ViolationKind::NonEmptyInitialStep, "initial step P0 must be empty");
    }

    const bool dims_ok = T >= 1 && K >= 1;
    std::vector<int> seen(dims_ok ? static_cast<std::size_t>(T) * K : 0, 0);
    std::vector<int> last_t(dims_ok ? K : 0, 0);

    for (std::size_t s = 0; s < pattern.steps.size(); ++s) {
        const auto & step = pattern.steps[s];
        const std::string where = "step " + std::to_string(s);
        if (s > 0 && step.empty()) {
            add(ViolationKind::EmptyStep, where + " is empty");
        }
        std::vector<int> codebooks_here;
        for (const auto & c : step) {
            if (!dims_ok || c.t < 1 || c.t > T || c.k < 1 || c.k > K) {
                add(ViolationKind::OutOfRange, where + ": coordinate " + coord_str(c) + " out of range");
                continue;
            }
            if (std::find(codebooks_here.begin(), codebooks_here.end(), c.k) != codebooks_here.end()) {
                add(ViolationKind::DuplicateCodebook,
                    where + ": duplicate codebook in step (codebook " + std::to_string(c.k) + ")");
            }
            codebooks_here.push_back(c.k);
            ++seen[static_cast<std::size_t>(c.t - 1) * K + (c.k - 1)];
            if (c.t <= last_t[c.k - 1]) {
                add(ViolationKind::NonMonotone, where + ": codebook " + std::to_string(c.k) + " reveals t=" +
                                                    std::to_string(c.t) + " after t=" +
                                                    std::to_string(last_t[c.k - 1]));
            }
            last_t[c.k - 1] = std::max(last_t[c.k - 1], c.t);
        }
    }

    if (dims_ok) {
        for (int t = 1; t <= T; ++t) {
            for (int k = 1; k <= K; ++k) {
                const int n = seen[static_cast<std::size_t>(t - 1) * K + (k - 1)];
                if (n == 0) {
                    add(ViolationKind::NotPartition,
                        "not a partition of the grid: " + coord_str({t, k}) + " never revealed");
                } else if (n > 1) {
                    add(ViolationKind::NotPartition, "not a partition of the grid: " + coord_str({t, k}) +
                                                         " revealed " + std::to_string(n) + " times");
                }
            }
        }
    }
    return report;
}

void require_valid(const Pattern & pattern) {
    const auto report = validate_pattern(pattern);
    if (report.ok) {
        return;
    }
    std::ostringstream msg;
    msg << "invalid pattern:";
    for (const auto & v : report.violations) {
        msg << "\n  " << v.message;
    }
    throw ValidationError(msg.str());
}

PatternLayout::PatternLayout(const Pattern & pattern)
    : S_(pattern.num_steps()), T_(pattern.T), K_(pattern.K) {
    require_valid(pattern);
    table_.assign(static_cast<std::size_t>(S_ + 1) * K_, 0);
    step_of_.assign(static_cast<std::size_t>(T_) * K_, 0);
    for (int s = 1; s <= S_; ++s) {
        for (const auto & c : pattern.steps[s]) {
            table_[static_cast<std::size_t>(s) * K_ + (c.k - 1)] = c.t;
            step_of_[static_cast<std::size_t>(c.t - 1) * K_ + (c.k - 1)] = s;
        }
    }
}

InterleavedSequence::InterleavedSequence(int S_, int K_, int M_)
    : S(S_), K(K_), M(M_), slots(static_cast<std::size_t>(S_ + 1) * K_, kSpecialToken) {}

InterleavedSequence apply_pattern(const Pattern & pattern, const TokenGrid & grid) {
    if (grid.timesteps() != pattern.T || grid.codebooks() != pattern.K) {
        throw ValidationError("dimension mismatch: pattern is " + std::to_string(pattern.T) + "x" +
                              std::to_string(pattern.K) + ", grid is " + std::to_string(grid.timesteps()) + "x" +
                              std::to_string(grid.codebooks()));
    }
    const PatternLayout layout(pattern);
    InterleavedSequence seq(layout.num_steps(), pattern.K, grid.vocab());
    for (int s = 1; s <= layout.num_steps(); ++s) {
        for (int k = 1; k <= pattern.K; ++k) {
            if (const int t = layout.timestep(s, k); t != 0) {
                seq.set(s, k, grid.at(t, k));
            }
        }
    }
    return seq;
}

TokenGrid revert_pattern(const Pattern & pattern, const InterleavedSequence & seq) {
    const PatternLayout layout(pattern);
    if (seq.S != layout.num_steps() || seq.K != pattern.K ||
        seq.slots.size() != static_cast<std::size_t>(seq.S + 1) * seq.K) {
        throw ValidationError("interleaved sequence shape " + std::to_string(seq.S + 1) + "x" +
                              std::to_string(seq.K) + " does not match pattern (" +
                              std::to_string(layout.num_steps() + 1) + "x" + std::to_string(pattern.K) + ")");
    }
    TokenGrid grid(pattern.T, pattern.K, seq.M);
    for (int s = 0; s <= seq.S; ++s) {
        for (int k = 1; k <= seq.K; ++k) {
            const int token = seq.at(s, k);
            const int t = layout.timestep(s, k);
            if (t == 0) {
                if (token != kSpecialToken) {
                    throw ValidationError("inconsistent interleaved sequence: real token " + std::to_string(token) +
                                          " at absent slot (" + std::to_string(s) + "," + std::to_string(k) + ")");
                }
                continue;
            }
            if (token == kSpecialToken) {
                throw ValidationError("inconsistent interleaved sequence: special token at present slot (" +
                                      std::to_string(s) + "," + std::to_string(k) + ")");
            }
            grid.set(t, k, token);
        }
    }
    return grid;
}

StepCounts step_counts(const Pattern & pattern) {
    StepCounts counts;
    counts.exact = pattern.num_steps();
    if (!pattern.kind) {
        counts.nominal = counts.exact;
        return counts;
    }
    const int T = pattern.T;
    switch (*pattern.kind) {
    case PatternKind::Parallel:
    case PatternKind::Delay:
    case PatternKind::PartialDelay:
    case PatternKind::StereoDelay:
    case PatternKind::StereoPartialDelay:
        counts.nominal = T;
        break;
    case PatternKind::PartialFlatten:
    case PatternKind::CoarseFirst:
        counts.nominal = pattern.K >= 2 ? 2 * T : T;
        break;
    case PatternKind::Flatten:
        counts.nominal = T * pattern.K;
        break;
    }
    return counts;
}

} // namespace interleave
