#pragma once

#include "interleave/token_grid.h"

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace interleave {

// A (timestep, codebook) position of the token grid, both 1-based.
struct Coordinate {
    int t = 0;
    int k = 0;

    auto operator<=>(const Coordinate &) const = default;
};

// One pattern step: the positions predicted together.
using PatternStep = std::vector<Coordinate>;

enum class PatternKind {
    Parallel,
    Delay,
    PartialDelay,
    Flatten,
    PartialFlatten,
    CoarseFirst,
    StereoDelay,
    StereoPartialDelay,
};

inline constexpr PatternKind kAllPatternKinds[] = {
    PatternKind::Parallel,       PatternKind::Delay,       PatternKind::PartialDelay,
    PatternKind::Flatten,        PatternKind::PartialFlatten, PatternKind::CoarseFirst,
    PatternKind::StereoDelay,    PatternKind::StereoPartialDelay,
};

// Machine name, e.g. "partial_delay".
std::string_view to_string(PatternKind kind);
// Table label, e.g. "Partial delay".
std::string_view display_name(PatternKind kind);
// Accepts machine names; throws UsageError otherwise.
PatternKind parse_pattern_kind(std::string_view name);
bool is_stereo(PatternKind kind);

// Ordered partition of the T x K grid. steps[0] is the empty initial step, so
// a pattern with S real steps has steps.size() == S + 1.
struct Pattern {
    std::optional<PatternKind> kind; // empty for patterns loaded from a file
    int T = 0;
    int K = 0;
    std::vector<PatternStep> steps;

    int num_steps() const { return static_cast<int>(steps.size()) - 1; }

    bool operator==(const Pattern &) const = default;
};

// Throws ValidationError naming the violated constraint for bad (T, K).
Pattern build_pattern(PatternKind kind, int T, int K);

enum class ViolationKind {
    BadDimensions,
    NonEmptyInitialStep,
    EmptyStep,
    OutOfRange,
    DuplicateCodebook,
    NotPartition,
    NonMonotone,
};

struct Violation {
    ViolationKind kind;
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Violation> violations;

    bool has(ViolationKind kind) const;
};

// Collects every violated invariant; never throws.
ValidationReport validate_pattern(const Pattern & pattern);

// Throws ValidationError listing the violations when the pattern is invalid.
void require_valid(const Pattern & pattern);

// Dense lookup of a valid pattern: for each step s in 0..S and codebook k,
// the timestep revealed there (0 when the codebook is absent).
class PatternLayout {
public:
    explicit PatternLayout(const Pattern & pattern);

    int num_steps() const { return S_; }
    int timesteps() const { return T_; }
    int codebooks() const { return K_; }

    int timestep(int s, int k) const { return table_[static_cast<std::size_t>(s) * K_ + (k - 1)]; }
    bool present(int s, int k) const { return timestep(s, k) != 0; }
    // Step at which (t, k) is revealed.
    int step_of(int t, int k) const { return step_of_[static_cast<std::size_t>(t - 1) * K_ + (k - 1)]; }

private:
    int S_ = 0;
    int T_ = 0;
    int K_ = 0;
    std::vector<int> table_;
    std::vector<int> step_of_;
};

// (S + 1) x K slots; row 0 is the all-special initial step.
struct InterleavedSequence {
    int S = 0;
    int K = 0;
    int M = 1;
    std::vector<int> slots;

    InterleavedSequence() = default;
    InterleavedSequence(int S, int K, int M);

    int at(int s, int k) const { return slots[static_cast<std::size_t>(s) * K + (k - 1)]; }
    void set(int s, int k, int token) { slots[static_cast<std::size_t>(s) * K + (k - 1)] = token; }

    bool operator==(const InterleavedSequence &) const = default;
};

InterleavedSequence apply_pattern(const Pattern & pattern, const TokenGrid & grid);
TokenGrid revert_pattern(const Pattern & pattern, const InterleavedSequence & seq);

struct StepCounts {
    int exact = 0;   // S, the number of non-empty steps
    int nominal = 0; // the count as reported in step-count tables
};

StepCounts step_counts(const Pattern & pattern);

} // namespace interleave
