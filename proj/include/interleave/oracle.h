#pragma once

#include "interleave/patterns.h"
#include "interleave/token_grid.h"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace interleave {

// Largest number of grid outcomes (M^(T*K)) any oracle table may hold.
inline constexpr std::size_t kOracleTableGuard = 1'000'000;

// Probability table over every complete T x K grid with tokens in 1..M.
// Outcome index: position p = (t-1)*K + (k-1) contributes digit
// (token - 1) * M^p.
struct GridDistribution {
    int T = 0;
    int K = 0;
    int M = 0;
    std::vector<double> probs;

    std::size_t outcomes() const { return probs.size(); }
    double total() const;

    std::size_t index_of(const TokenGrid & grid) const;
    TokenGrid grid_of(std::size_t index) const;
    double prob(const TokenGrid & grid) const { return probs[index_of(grid)]; }
};

// The true law of the token grid.
using JointDistribution = GridDistribution;
// The law of grids produced by walking a pattern with exact per-position
// conditionals.
using InducedDistribution = GridDistribution;

enum class JointFamily { Product, Diagonal, MarkovResidual };

std::string_view to_string(JointFamily family);
JointFamily parse_joint_family(std::string_view name);

// Table size M^(T*K); throws GuardError above kOracleTableGuard.
std::size_t oracle_table_size(int T, int K, int M);

// product: independent uniform tokens. diagonal: every codebook of a
// timestep carries the same uniform token, timesteps independent.
// markov_residual: a scalar latent Markov chain over 4M levels, quantized by
// RVQ codebooks trained on the levels, enumerated exhaustively over paths.
JointDistribution make_joint(JointFamily family, int T, int K, int M, uint64_t seed);

// Grid with unrevealed positions set to 0.
struct PartialGrid {
    int T = 0;
    int K = 0;
    std::vector<int> values;

    PartialGrid(int T, int K) : T(T), K(K), values(static_cast<std::size_t>(T) * K, 0) {}
    int at(int t, int k) const { return values[static_cast<std::size_t>(t - 1) * K + (k - 1)]; }
    void set(int t, int k, int token) { values[static_cast<std::size_t>(t - 1) * K + (k - 1)] = token; }
};

// Distribution over joint assignments of `targets`; entry index
// sum_i (token_i - 1) * M^i in target order.
struct ConditionalDistribution {
    std::vector<Coordinate> targets;
    int M = 0;
    std::vector<double> probs;
};

// Exact conditional by marginalising the unrevealed, non-target positions.
// Throws ValidationError if targets overlap the revealed set or the revealed
// assignment has probability 0.
ConditionalDistribution true_conditional(const JointDistribution & joint, const PartialGrid & revealed,
                                         const std::vector<Coordinate> & targets);

// Exact forward enumeration of the generation law: at each step every present
// position is drawn from its own true conditional given all earlier steps,
// positions within a step independently. A context with zero true probability
// (reachable only through an inexact step) falls back to uniform tokens.
InducedDistribution induced_distribution(const JointDistribution & joint, const Pattern & pattern);

// 0.5 * sum |p - q|. Throws ValidationError on mismatched spaces.
double tv_distance(const GridDistribution & p, const GridDistribution & q);
double tv_distance(const std::vector<double> & p, const std::vector<double> & q);

struct ExactnessRow {
    PatternKind kind;
    int exact_steps = 0;
    int nominal_steps = 0;
    double tv = 0.0;
};

std::vector<ExactnessRow> exactness_report(const JointDistribution & joint, const std::vector<PatternKind> & kinds);

// "pattern,S_exact,S_nominal,TV" header plus one line per row.
std::string exactness_csv(const std::vector<ExactnessRow> & rows);

} // namespace interleave
