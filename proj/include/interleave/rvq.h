#pragma once

#include "interleave/token_grid.h"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace interleave {

struct RVQConfig {
    int K = 4;             // quantizer stages
    int M = 64;            // entries per codebook (2048 at full scale)
    int d_latent = 8;
    double frame_rate = 50.0; // informational

    void validate() const;
};

// T latent vectors of dimension d, stored frame-major. Frames are 0-based.
struct LatentFrames {
    int T = 0;
    int d = 1;
    std::vector<double> data;

    LatentFrames() = default;
    LatentFrames(int T, int d) : T(T), d(d), data(static_cast<std::size_t>(T) * d, 0.0) {}

    std::span<double> frame(int i) { return {data.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)}; }
    std::span<const double> frame(int i) const {
        return {data.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
    }
};

// M centroids of dimension d. Centroid j corresponds to token id j (1-based).
struct Codebook {
    int M = 0;
    int d = 0;
    std::vector<double> centroids;

    std::span<const double> centroid(int token) const {
        return {centroids.data() + static_cast<std::size_t>(token - 1) * d, static_cast<std::size_t>(d)};
    }
};

// Stationary AR(1) process per dimension (coefficient 0.9, unit variance).
LatentFrames synth_latents(int T, int d_latent, uint64_t seed);

// Stage k is fit by Lloyd's k-means on the residuals left by stages 1..k-1.
// Initial centroids are M distinct frames drawn with the seed; empty clusters
// are reseeded from the points farthest from their centroid.
// Throws ValidationError when T < M.
std::vector<Codebook> train_codebooks(const LatentFrames & frames, const RVQConfig & config, int iterations,
                                      uint64_t seed);

// Greedy residual encoding, nearest centroid per stage (ties -> lowest id).
TokenGrid rvq_encode(const LatentFrames & frames, std::span<const Codebook> codebooks);

// Sum of selected centroids. `stages` limits decoding to the first stages
// (default: all).
LatentFrames rvq_decode(const TokenGrid & grid, std::span<const Codebook> codebooks, int stages = -1);

// Entry 0: mean squared norm of the frames; entry k: mean squared residual
// after stages 1..k.
std::vector<double> residual_energy_profile(const LatentFrames & frames, std::span<const Codebook> codebooks);

// Index of the nearest centroid to `x` (1-based token id).
int nearest_centroid(const Codebook & codebook, std::span<const double> x);

// [[centroid, ...], ...] one list per stage.
nlohmann::json codebooks_to_json(std::span<const Codebook> codebooks);
std::vector<Codebook> codebooks_from_json(const nlohmann::json & doc);

} // namespace interleave
