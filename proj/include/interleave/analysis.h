#pragma once

#include "interleave/conditioning.h"
#include "interleave/model.h"
#include "interleave/patterns.h"
#include "interleave/rvq.h"
#include "interleave/sampling.h"

#include <span>
#include <string>
#include <vector>

namespace interleave {

// ---------------------------------------------------------------------------
// Memorization
// ---------------------------------------------------------------------------

struct MemorizationExample {
    TokenGrid grid;
    Condition condition;
};

struct MemorizationRow {
    int prompt_len = 0;
    double exact = 0.0;   // continuation identical on codebook 1
    double partial = 0.0; // at least `threshold` of codebook-1 tokens equal
};

struct MemorizationReport {
    std::vector<MemorizationRow> rows;
    double threshold = 0.8;
    int gen_len = 0;
    int examples = 0;

    // Prompt lengths (in row order) where a fraction drops below the
    // previous row's. Reported, not enforced.
    std::vector<int> monotonicity_violations() const;
};

// Greedy continuation of every example from its first prompt_len timesteps
// (all K codebooks forced), comparing codebook 1 over timesteps
// prompt_len+1 .. prompt_len+gen_len. `sampler` is switched to greedy.
MemorizationReport memorization_report(const Parameters & params, PatternKind kind,
                                       std::span<const MemorizationExample> dataset,
                                       const std::vector<int> & prompt_lens, int gen_len,
                                       SamplerConfig sampler = {}, double threshold = 0.8);

// "prompt_len,exact,partial" header plus one line per row.
std::string memorization_csv(const MemorizationReport & report);

struct MemorizationCorpusConfig {
    int sequences = 4;
    int T = 48;
    int K = 4;
    int M = 32;
    int d_latent = 8;
    uint64_t seed = 1;
};

// RVQ-encoded synthetic sequences that share their entire first timestep and
// have pairwise distinct codebook-1 continuations, so a one-timestep prompt
// cannot identify the source.
struct MemorizationCorpus {
    std::vector<TokenGrid> grids;
    std::vector<Codebook> codebooks; // the quantizer that produced the grids
};

MemorizationCorpus memorization_corpus(const MemorizationCorpusConfig & config);

// ---------------------------------------------------------------------------
// Chroma adherence
// ---------------------------------------------------------------------------

// Deterministic, non-physical latent -> audio rule: a latent frame maps to
// the pitch class whose fixed direction has the largest dot product, and each
// class is rendered as a sine at 440 * 2^((c - 9) / 12) Hz for one analysis
// window, so analysis frames taken every window/hop hops see one pure class.
class Sonifier {
public:
    explicit Sonifier(int d_latent, uint64_t seed = 0x736f6eULL, int sample_rate = 32000);

    int pitch_class(std::span<const double> frame) const;
    QuantizedChroma classes_of(const LatentFrames & frames) const;

    AudioBuffer render(const QuantizedChroma & classes) const;

    // Chromagram of rendered audio, quantized and taken at the start of each
    // rendered segment.
    QuantizedChroma analyse(const AudioBuffer & audio) const;

    int sample_rate() const { return sample_rate_; }

private:
    int d_;
    int sample_rate_;
    Eigen::MatrixXd directions_; // 12 x d
};

double pitch_class_frequency(int pitch_class);

// similarity(analyse(render(classes_of(decode(grid)))), reference)
double chroma_adherence(const TokenGrid & grid, std::span<const Codebook> codebooks, const Sonifier & sonifier,
                        const QuantizedChroma & reference);

} // namespace interleave
