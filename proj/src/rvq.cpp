#include "interleave/rvq.h"

#include "interleave/error.h"
#include "interleave/rng.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace interleave {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

double squared_norm(std::span<const double> a) {
    double acc = 0.0;
    for (double v : a) {
        acc += v * v;
    }
    return acc;
}

void check_codebooks(std::span<const Codebook> codebooks, int d) {
    if (codebooks.empty()) {
        throw ValidationError("at least one codebook is required");
    }
    for (const auto & cb : codebooks) {
        if (cb.d != d) {
            throw ValidationError("codebook dimension " + std::to_string(cb.d) + " does not match latent dimension " +
                                  std::to_string(d));
        }
        if (cb.M < 1 || cb.centroids.size() != static_cast<std::size_t>(cb.M) * cb.d) {
            throw ValidationError("malformed codebook");
        }
    }
}

Codebook fit_stage(const LatentFrames & residuals, int M, int iterations, uint64_t seed) {
    const int T = residuals.T;
    const int d = residuals.d;
    Rng rng(seed);

    // M distinct starting frames via partial Fisher-Yates
    std::vector<int> order(T);
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < M; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(T - i)));
        std::swap(order[i], order[j]);
    }
    Codebook cb{M, d, std::vector<double>(static_cast<std::size_t>(M) * d)};
    for (int j = 0; j < M; ++j) {
        const auto src = residuals.frame(order[j]);
        std::copy(src.begin(), src.end(), cb.centroids.begin() + static_cast<std::ptrdiff_t>(j) * d);
    }

    std::vector<int> assign(T);
    std::vector<double> dist(T);
    std::vector<double> sums(static_cast<std::size_t>(M) * d);
    std::vector<int> counts(M);
    for (int iter = 0; iter < iterations; ++iter) {
        for (int i = 0; i < T; ++i) {
            assign[i] = nearest_centroid(cb, residuals.frame(i)) - 1;
            dist[i] = squared_distance(residuals.frame(i), cb.centroid(assign[i] + 1));
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < T; ++i) {
            const auto x = residuals.frame(i);
            for (int c = 0; c < d; ++c) {
                sums[static_cast<std::size_t>(assign[i]) * d + c] += x[c];
            }
            ++counts[assign[i]];
        }
        for (int j = 0; j < M; ++j) {
            double * centroid = cb.centroids.data() + static_cast<std::size_t>(j) * d;
            if (counts[j] > 0) {
                for (int c = 0; c < d; ++c) {
                    centroid[c] = sums[static_cast<std::size_t>(j) * d + c] / counts[j];
                }
                continue;
            }
            // empty cluster: move it onto the worst-served point
            const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
            const auto x = residuals.frame(static_cast<int>(far));
            std::copy(x.begin(), x.end(), centroid);
            dist[far] = 0.0;
        }
    }
    return cb;
}

} // namespace

void RVQConfig::validate() const {
    if (K < 1 || M < 1 || d_latent < 1) {
        throw ValidationError("RVQ config requires K >= 1, M >= 1, d_latent >= 1");
    }
    if (!(frame_rate > 0.0)) {
        throw ValidationError("RVQ frame rate must be positive");
    }
}

LatentFrames synth_latents(int T, int d_latent, uint64_t seed) {
    if (T < 1 || d_latent < 1) {
        throw ValidationError("synth_latents requires T >= 1 and d_latent >= 1");
    }
    constexpr double kCoefficient = 0.9;
    const double innovation = std::sqrt(1.0 - kCoefficient * kCoefficient);
    Rng rng(seed);
    LatentFrames frames(T, d_latent);
    for (int c = 0; c < d_latent; ++c) {
        frames.frame(0)[c] = rng.normal();
    }
    for (int i = 1; i < T; ++i) {
        const auto prev = frames.frame(i - 1);
        auto cur = frames.frame(i);
        for (int c = 0; c < d_latent; ++c) {
            cur[c] = kCoefficient * prev[c] + innovation * rng.normal();
        }
    }
    return frames;
}

int nearest_centroid(const Codebook & codebook, std::span<const double> x) {
    int best = 1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= codebook.M; ++j) {
        const double dist = squared_distance(x, codebook.centroid(j));
        if (dist < best_dist) {
            best_dist = dist;
            best = j;
        }
    }
    return best;
}

std::vector<Codebook> train_codebooks(const LatentFrames & frames, const RVQConfig & config, int iterations,
                                      uint64_t seed) {
    config.validate();
    if (frames.d != config.d_latent) {
        throw ValidationError("latent dimension " + std::to_string(frames.d) + " does not match config d_latent " +
                              std::to_string(config.d_latent));
    }
    if (frames.T < config.M) {
        throw ValidationError("insufficient data: " + std::to_string(frames.T) + " frames for " +
                              std::to_string(config.M) + " centroids");
    }
    if (iterations < 0) {
        throw ValidationError("iterations must be nonnegative");
    }
    std::vector<Codebook> codebooks;
    LatentFrames residuals = frames;
    for (int k = 0; k < config.K; ++k) {
        codebooks.push_back(fit_stage(residuals, config.M, iterations, seed + 0x9e3779b97f4a7c15ULL * (k + 1)));
        const Codebook & cb = codebooks.back();
        for (int i = 0; i < residuals.T; ++i) {
            auto r = residuals.frame(i);
            const auto c = cb.centroid(nearest_centroid(cb, r));
            for (int j = 0; j < residuals.d; ++j) {
                r[j] -= c[j];
            }
        }
    }
    return codebooks;
}

TokenGrid rvq_encode(const LatentFrames & frames, std::span<const Codebook> codebooks) {
    check_codebooks(codebooks, frames.d);
    const int K = static_cast<int>(codebooks.size());
    TokenGrid grid(frames.T, K, codebooks.front().M);
    std::vector<double> residual(frames.d);
    for (int i = 0; i < frames.T; ++i) {
        const auto x = frames.frame(i);
        std::copy(x.begin(), x.end(), residual.begin());
        for (int k = 1; k <= K; ++k) {
            const Codebook & cb = codebooks[k - 1];
            const int token = nearest_centroid(cb, residual);
            grid.set(i + 1, k, token);
            const auto c = cb.centroid(token);
            for (int j = 0; j < frames.d; ++j) {
                residual[j] -= c[j];
            }
        }
    }
    return grid;
}

LatentFrames rvq_decode(const TokenGrid & grid, std::span<const Codebook> codebooks, int stages) {
    if (codebooks.empty()) {
        throw ValidationError("at least one codebook is required");
    }
    const int d = codebooks.front().d;
    check_codebooks(codebooks, d);
    if (grid.codebooks() > static_cast<int>(codebooks.size())) {
        throw ValidationError("grid has " + std::to_string(grid.codebooks()) + " codebooks, only " +
                              std::to_string(codebooks.size()) + " available");
    }
    const int used = stages < 0 ? grid.codebooks() : std::min(stages, grid.codebooks());
    LatentFrames out(grid.timesteps(), d);
    for (int t = 1; t <= grid.timesteps(); ++t) {
        auto f = out.frame(t - 1);
        for (int k = 1; k <= used; ++k) {
            const Codebook & cb = codebooks[k - 1];
            const int token = grid.at(t, k);
            if (token < 1 || token > cb.M) {
                throw ValidationError("token " + std::to_string(token) + " outside codebook " + std::to_string(k) +
                                      " range 1.." + std::to_string(cb.M));
            }
            const auto c = cb.centroid(token);
            for (int j = 0; j < d; ++j) {
                f[j] += c[j];
            }
        }
    }
    return out;
}

std::vector<double> residual_energy_profile(const LatentFrames & frames, std::span<const Codebook> codebooks) {
    check_codebooks(codebooks, frames.d);
    const int K = static_cast<int>(codebooks.size());
    std::vector<double> profile(K + 1, 0.0);
    if (frames.T == 0) {
        return profile;
    }
    std::vector<double> residual(frames.d);
    for (int i = 0; i < frames.T; ++i) {
        const auto x = frames.frame(i);
        std::copy(x.begin(), x.end(), residual.begin());
        profile[0] += squared_norm(residual);
        for (int k = 1; k <= K; ++k) {
            const Codebook & cb = codebooks[k - 1];
            const auto c = cb.centroid(nearest_centroid(cb, residual));
            for (int j = 0; j < frames.d; ++j) {
                residual[j] -= c[j];
            }
            profile[k] += squared_norm(residual);
        }
    }
    for (double & e : profile) {
        e /= frames.T;
    }
    return profile;
}

nlohmann::json codebooks_to_json(std::span<const Codebook> codebooks) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto & cb : codebooks) {
        nlohmann::json rows = nlohmann::json::array();
        for (int j = 1; j <= cb.M; ++j) {
            const auto c = cb.centroid(j);
            rows.push_back(std::vector<double>(c.begin(), c.end()));
        }
        stages.push_back(std::move(rows));
    }
    return stages;
}

std::vector<Codebook> codebooks_from_json(const nlohmann::json & doc) {
    std::vector<Codebook> out;
    try {
        for (const auto & stage : doc) {
            Codebook cb;
            cb.M = static_cast<int>(stage.size());
            for (const auto & row : stage) {
                const auto values = row.get<std::vector<double>>();
                if (cb.d == 0) {
                    cb.d = static_cast<int>(values.size());
                } else if (static_cast<int>(values.size()) != cb.d) {
                    throw ValidationError("ragged codebook");
                }
                cb.centroids.insert(cb.centroids.end(), values.begin(), values.end());
            }
            out.push_back(std::move(cb));
        }
    } catch (const nlohmann::json::exception & e) {
        throw ValidationError(std::string("malformed codebook document: ") + e.what());
    }
    return out;
}

} // namespace interleave
