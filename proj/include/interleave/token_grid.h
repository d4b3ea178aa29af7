#pragma once

#include <span>
#include <vector>

namespace interleave {

// Reserved id for "no token here". Never a valid codebook entry.
inline constexpr int kSpecialToken = 0;

// T x K grid of token ids in 1..M (timestep-major). Coordinates are 1-based.
class TokenGrid {
public:
    TokenGrid() = default;

    // Every entry initialised to token 1.
    TokenGrid(int T, int K, int M);

    // rows[t-1][k-1]; throws ValidationError on ragged rows or out-of-range ids.
    static TokenGrid from_rows(const std::vector<std::vector<int>> & rows, int M);

    int timesteps() const { return T_; }
    int codebooks() const { return K_; }
    int vocab() const { return M_; }

    int at(int t, int k) const { return tokens_[index(t, k)]; }
    void set(int t, int k, int token);

    // Codebook k as a length-T sequence.
    std::vector<int> stream(int k) const;

    // First `T` timesteps.
    TokenGrid head(int T) const;

    std::span<const int> data() const { return tokens_; }

    bool operator==(const TokenGrid & other) const = default;

private:
    std::size_t index(int t, int k) const;

    int T_ = 0;
    int K_ = 0;
    int M_ = 1;
    std::vector<int> tokens_;
};

} // namespace interleave
