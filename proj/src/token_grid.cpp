#include "interleave/token_grid.h"

#include "interleave/error.h"

#include <string>

namespace interleave {

TokenGrid::TokenGrid(int T, int K, int M) : T_(T), K_(K), M_(M) {
    if (T < 0 || K < 1 || M < 1) {
        throw ValidationError("token grid needs T >= 0, K >= 1, M >= 1 (got T=" + std::to_string(T) +
                              ", K=" + std::to_string(K) + ", M=" + std::to_string(M) + ")");
    }
    tokens_.assign(static_cast<std::size_t>(T) * K, 1);
}

TokenGrid TokenGrid::from_rows(const std::vector<std::vector<int>> & rows, int M) {
    if (rows.empty()) {
        throw ValidationError("token grid needs at least one row");
    }
    const int K = static_cast<int>(rows.front().size());
    TokenGrid grid(static_cast<int>(rows.size()), K, M);
    for (int t = 1; t <= grid.T_; ++t) {
        const auto & row = rows[t - 1];
        if (static_cast<int>(row.size()) != K) {
            throw ValidationError("ragged token grid: row " + std::to_string(t) + " has " +
                                  std::to_string(row.size()) + " entries, expected " + std::to_string(K));
        }
        for (int k = 1; k <= K; ++k) {
            grid.set(t, k, row[k - 1]);
        }
    }
    return grid;
}

std::size_t TokenGrid::index(int t, int k) const {
    if (t < 1 || t > T_ || k < 1 || k > K_) {
        throw ValidationError("grid coordinate (" + std::to_string(t) + "," + std::to_string(k) +
                              ") outside " + std::to_string(T_) + "x" + std::to_string(K_));
    }
    return static_cast<std::size_t>(t - 1) * K_ + (k - 1);
}

void TokenGrid::set(int t, int k, int token) {
    if (token < 1 || token > M_) {
        throw ValidationError("token " + std::to_string(token) + " outside 1.." + std::to_string(M_));
    }
    tokens_[index(t, k)] = token;
}

std::vector<int> TokenGrid::stream(int k) const {
    std::vector<int> out;
    out.reserve(T_);
    for (int t = 1; t <= T_; ++t) {
        out.push_back(at(t, k));
    }
    return out;
}

TokenGrid TokenGrid::head(int T) const {
    if (T < 0 || T > T_) {
        throw ValidationError("cannot take " + std::to_string(T) + " timesteps of a " + std::to_string(T_) +
                              "-step grid");
    }
    TokenGrid out(T, K_, M_);
    std::copy(tokens_.begin(), tokens_.begin() + static_cast<std::ptrdiff_t>(T) * K_, out.tokens_.begin());
    return out;
}

} // namespace interleave
