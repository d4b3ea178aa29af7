#include "interleave/oracle.h"

#include "interleave/error.h"
#include "interleave/rng.h"
#include "interleave/rvq.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace interleave {

namespace {

std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t out = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        out *= base;
    }
    return out;
}

// Digit of position p (0-based, p = (t-1)*K + (k-1)) in an outcome index.
struct Digits {
    std::vector<std::size_t> stride;
    std::size_t M;

    Digits(std::size_t positions, std::size_t M_) : stride(positions), M(M_) {
        std::size_t s = 1;
        for (std::size_t p = 0; p < positions; ++p) {
            stride[p] = s;
            s *= M;
        }
    }
    std::size_t digit(std::size_t index, std::size_t p) const { return (index / stride[p]) % M; }
};

// Marginal table of `joint` over the ordered positions `keep`.
std::vector<double> marginal(const JointDistribution & joint, const Digits & digits,
                             const std::vector<std::size_t> & keep) {
    std::vector<double> out(ipow(joint.M, keep.size()), 0.0);
    for (std::size_t o = 0; o < joint.probs.size(); ++o) {
        const double p = joint.probs[o];
        if (p == 0.0) {
            continue;
        }
        std::size_t idx = 0;
        std::size_t mul = 1;
        for (std::size_t pos : keep) {
            idx += digits.digit(o, pos) * mul;
            mul *= joint.M;
        }
        out[idx] += p;
    }
    return out;
}

JointDistribution empty_joint(int T, int K, int M) {
    JointDistribution j{T, K, M, {}};
    j.probs.assign(oracle_table_size(T, K, M), 0.0);
    return j;
}

JointDistribution markov_residual(int T, int K, int M, uint64_t seed) {
    const int levels = 4 * M;
    const double paths = std::pow(static_cast<double>(levels), T);
    if (paths > 1e7) {
        throw GuardError("markov_residual enumeration of " + std::to_string(levels) + "^" + std::to_string(T) +
                         " latent paths exceeds the guard");
    }
    Rng rng(seed);

    LatentFrames latents(levels, 1);
    for (int i = 0; i < levels; ++i) {
        latents.frame(i)[0] = -1.0 + 2.0 * (i + 0.5) / levels + 0.2 / levels * (rng.uniform() - 0.5);
    }
    RVQConfig rvq{K, M, 1, 50.0};
    const auto codebooks = train_codebooks(latents, rvq, 25, seed ^ 0x5eedULL);
    const TokenGrid columns = rvq_encode(latents, codebooks);

    // local, seeded transition kernel: nearby levels are likelier
    std::vector<double> transition(static_cast<std::size_t>(levels) * levels);
    for (int i = 0; i < levels; ++i) {
        double row = 0.0;
        for (int j = 0; j < levels; ++j) {
            const double w = std::exp(-std::abs(i - j) / 2.0) * (0.5 + rng.uniform());
            transition[static_cast<std::size_t>(i) * levels + j] = w;
            row += w;
        }
        for (int j = 0; j < levels; ++j) {
            transition[static_cast<std::size_t>(i) * levels + j] /= row;
        }
    }

    JointDistribution joint = empty_joint(T, K, M);
    const Digits digits(static_cast<std::size_t>(T) * K, M);
    std::vector<int> path(T, 0);
    const auto total_paths = static_cast<std::size_t>(paths);
    for (std::size_t n = 0; n < total_paths; ++n) {
        std::size_t rest = n;
        for (int t = 0; t < T; ++t) {
            path[t] = static_cast<int>(rest % levels);
            rest /= levels;
        }
        double p = 1.0 / levels;
        for (int t = 1; t < T; ++t) {
            p *= transition[static_cast<std::size_t>(path[t - 1]) * levels + path[t]];
        }
        std::size_t idx = 0;
        for (int t = 0; t < T; ++t) {
            for (int k = 0; k < K; ++k) {
                idx += static_cast<std::size_t>(columns.at(path[t] + 1, k + 1) - 1) *
                       digits.stride[static_cast<std::size_t>(t) * K + k];
            }
        }
        joint.probs[idx] += p;
    }
    return joint;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

} // namespace

double GridDistribution::total() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

std::size_t GridDistribution::index_of(const TokenGrid & grid) const {
    if (grid.timesteps() != T || grid.codebooks() != K || grid.vocab() > M) {
        throw ValidationError("grid does not belong to this distribution's outcome space");
    }
    std::size_t idx = 0;
    std::size_t mul = 1;
    for (int t = 1; t <= T; ++t) {
        for (int k = 1; k <= K; ++k) {
            idx += static_cast<std::size_t>(grid.at(t, k) - 1) * mul;
            mul *= M;
        }
    }
    return idx;
}

TokenGrid GridDistribution::grid_of(std::size_t index) const {
    TokenGrid grid(T, K, M);
    for (int t = 1; t <= T; ++t) {
        for (int k = 1; k <= K; ++k) {
            grid.set(t, k, static_cast<int>(index % M) + 1);
            index /= M;
        }
    }
    return grid;
}

std::string_view to_string(JointFamily family) {
    switch (family) {
    case JointFamily::Product:
        return "product";
    case JointFamily::Diagonal:
        return "diagonal";
    case JointFamily::MarkovResidual:
        return "markov_residual";
    }
    return "?";
}

JointFamily parse_joint_family(std::string_view name) {
    for (auto f : {JointFamily::Product, JointFamily::Diagonal, JointFamily::MarkovResidual}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    throw UsageError("unknown joint family '" + std::string(name) + "'");
}

std::size_t oracle_table_size(int T, int K, int M) {
    if (T < 1 || K < 1 || M < 1) {
        throw ValidationError("joint distribution needs T, K, M >= 1");
    }
    const double size = std::pow(static_cast<double>(M), static_cast<double>(T) * K);
    if (size > static_cast<double>(kOracleTableGuard)) {
        throw GuardError("joint table of " + std::to_string(M) + "^" + std::to_string(T * K) +
                         " outcomes exceeds the guard of " + std::to_string(kOracleTableGuard));
    }
    return ipow(M, static_cast<std::size_t>(T) * K);
}

JointDistribution make_joint(JointFamily family, int T, int K, int M, uint64_t seed) {
    switch (family) {
    case JointFamily::Product: {
        JointDistribution j = empty_joint(T, K, M);
        std::fill(j.probs.begin(), j.probs.end(), 1.0 / static_cast<double>(j.probs.size()));
        return j;
    }
    case JointFamily::Diagonal: {
        JointDistribution j = empty_joint(T, K, M);
        const Digits digits(static_cast<std::size_t>(T) * K, M);
        const double mass = std::pow(1.0 / M, T);
        // iterate over the M^T diagonal grids
        const std::size_t count = ipow(M, T);
        for (std::size_t n = 0; n < count; ++n) {
            std::size_t rest = n;
            std::size_t idx = 0;
            for (int t = 0; t < T; ++t) {
                const std::size_t value = rest % M;
                rest /= M;
                for (int k = 0; k < K; ++k) {
                    idx += value * digits.stride[static_cast<std::size_t>(t) * K + k];
                }
            }
            j.probs[idx] = mass;
        }
        return j;
    }
    case JointFamily::MarkovResidual:
        oracle_table_size(T, K, M);
        return markov_residual(T, K, M, seed);
    }
    throw InvariantError("unhandled joint family");
}

ConditionalDistribution true_conditional(const JointDistribution & joint, const PartialGrid & revealed,
                                         const std::vector<Coordinate> & targets) {
    if (revealed.T != joint.T || revealed.K != joint.K) {
        throw ValidationError("revealed grid shape does not match the joint");
    }
    const std::size_t positions = static_cast<std::size_t>(joint.T) * joint.K;
    std::vector<std::size_t> target_pos;
    for (const auto & c : targets) {
        if (c.t < 1 || c.t > joint.T || c.k < 1 || c.k > joint.K) {
            throw ValidationError("target coordinate out of range");
        }
        if (revealed.at(c.t, c.k) != 0) {
            throw ValidationError("target (" + std::to_string(c.t) + "," + std::to_string(c.k) +
                                  ") is already revealed");
        }
        const std::size_t p = static_cast<std::size_t>(c.t - 1) * joint.K + (c.k - 1);
        if (std::find(target_pos.begin(), target_pos.end(), p) != target_pos.end()) {
            throw ValidationError("duplicate target coordinate");
        }
        target_pos.push_back(p);
    }
    for (int v : revealed.values) {
        if (v < 0 || v > joint.M) {
            throw ValidationError("revealed token outside 0..M");
        }
    }
    const Digits digits(positions, joint.M);
    ConditionalDistribution out{targets, joint.M, std::vector<double>(ipow(joint.M, targets.size()), 0.0)};
    double evidence = 0.0;
    for (std::size_t o = 0; o < joint.probs.size(); ++o) {
        const double p = joint.probs[o];
        if (p == 0.0) {
            continue;
        }
        bool consistent = true;
        for (std::size_t pos = 0; pos < positions && consistent; ++pos) {
            const int v = revealed.values[pos];
            consistent = v == 0 || digits.digit(o, pos) == static_cast<std::size_t>(v - 1);
        }
        if (!consistent) {
            continue;
        }
        std::size_t idx = 0;
        std::size_t mul = 1;
        for (std::size_t pos : target_pos) {
            idx += digits.digit(o, pos) * mul;
            mul *= joint.M;
        }
        out.probs[idx] += p;
        evidence += p;
    }
    if (evidence <= 0.0) {
        throw ValidationError("revealed assignment has probability 0");
    }
    for (double & p : out.probs) {
        p /= evidence;
    }
    return out;
}

InducedDistribution induced_distribution(const JointDistribution & joint, const Pattern & pattern) {
    if (pattern.T != joint.T || pattern.K != joint.K) {
        throw ValidationError("pattern shape does not match the joint");
    }
    require_valid(pattern);
    oracle_table_size(joint.T, joint.K, joint.M);
    const std::size_t M = joint.M;
    const Digits digits(static_cast<std::size_t>(joint.T) * joint.K, M);

    std::vector<std::size_t> revealed;  // ordered positions covered so far
    std::vector<double> law{1.0};       // induced law over `revealed`

    for (int s = 1; s <= pattern.num_steps(); ++s) {
        std::vector<std::size_t> step_pos;
        for (const auto & c : pattern.steps[s]) {
            step_pos.push_back(static_cast<std::size_t>(c.t - 1) * joint.K + (c.k - 1));
        }
        const std::vector<double> context = marginal(joint, digits, revealed);
        // per position: true marginal over (revealed, position)
        std::vector<std::vector<double>> with_pos;
        for (std::size_t pos : step_pos) {
            auto keep = revealed;
            keep.push_back(pos);
            with_pos.push_back(marginal(joint, digits, keep));
        }

        const std::size_t ctx_size = law.size();
        const std::size_t step_size = ipow(M, step_pos.size());
        if (ctx_size * step_size > kOracleTableGuard) {
            throw GuardError("induced-distribution branch table exceeds the guard");
        }
        std::vector<double> next(ctx_size * step_size, 0.0);
        for (std::size_t r = 0; r < ctx_size; ++r) {
            if (law[r] == 0.0) {
                continue;
            }
            for (std::size_t x = 0; x < step_size; ++x) {
                double p = law[r];
                std::size_t rest = x;
                for (std::size_t i = 0; i < step_pos.size(); ++i) {
                    const std::size_t value = rest % M;
                    rest /= M;
                    p *= context[r] > 0.0 ? with_pos[i][r + value * ctx_size] / context[r]
                                          : 1.0 / static_cast<double>(M);
                }
                next[r + x * ctx_size] = p;
            }
        }
        revealed.insert(revealed.end(), step_pos.begin(), step_pos.end());
        law = std::move(next);
    }

    // reorder from pattern order to outcome-index order
    InducedDistribution out = empty_joint(joint.T, joint.K, joint.M);
    for (std::size_t i = 0; i < law.size(); ++i) {
        std::size_t rest = i;
        std::size_t idx = 0;
        for (std::size_t pos : revealed) {
            idx += (rest % M) * digits.stride[pos];
            rest /= M;
        }
        out.probs[idx] += law[i];
    }
    return out;
}

double tv_distance(const std::vector<double> & p, const std::vector<double> & q) {
    if (p.size() != q.size()) {
        throw ValidationError("total variation between mismatched outcome spaces");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += std::abs(p[i] - q[i]);
    }
    return 0.5 * acc;
}

double tv_distance(const GridDistribution & p, const GridDistribution & q) {
    if (p.T != q.T || p.K != q.K || p.M != q.M) {
        throw ValidationError("total variation between mismatched outcome spaces");
    }
    return tv_distance(p.probs, q.probs);
}

std::vector<ExactnessRow> exactness_report(const JointDistribution & joint, const std::vector<PatternKind> & kinds) {
    std::vector<ExactnessRow> rows;
    for (PatternKind kind : kinds) {
        const Pattern pattern = build_pattern(kind, joint.T, joint.K);
        const StepCounts counts = step_counts(pattern);
        rows.push_back({kind, counts.exact, counts.nominal, tv_distance(induced_distribution(joint, pattern), joint)});
    }
    return rows;
}

std::string exactness_csv(const std::vector<ExactnessRow> & rows) {
    std::string out = "pattern,S_exact,S_nominal,TV\n";
    for (const auto & r : rows) {
        out += std::string(to_string(r.kind)) + "," + std::to_string(r.exact_steps) + "," +
               std::to_string(r.nominal_steps) + "," + format_double(r.tv) + "\n";
    }
    return out;
}

} // namespace interleave
