#pragma once

#include "interleave/rng.h"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace interleave {

// ---------------------------------------------------------------------------
// Melody conditioning
// ---------------------------------------------------------------------------

struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = 32000;
};

inline constexpr int kChromaWindow = 1 << 14;
inline constexpr int kChromaHop = 1 << 12;
inline constexpr int kPitchClasses = 12;
// Lowest analysed frequency (C1).
inline constexpr double kChromaMinHz = 32.7;

struct Chromagram {
    std::vector<std::array<double, kPitchClasses>> frames; // energies for C, C#, ..., B
    double frame_hop_seconds = 0.0;
};

struct QuantizedChroma {
    std::vector<int> classes; // 0..11 per frame

    bool operator==(const QuantizedChroma &) const = default;
};

// (round(12 log2(f / 440)) + 9) mod 12, i.e. A = 9 with A4 = 440 Hz.
int pitch_class_of(double frequency_hz);

// Hann-windowed power spectrum per frame, bins in [32.7 Hz, Nyquist) folded
// onto 12 pitch classes. Throws ValidationError if shorter than one window.
Chromagram compute_chromagram(const AudioBuffer & audio, int window = kChromaWindow, int hop = kChromaHop);

// Per-frame argmax, ties to the lowest class.
QuantizedChroma quantize_chroma(const Chromagram & chroma);

// Mean per-frame cosine similarity of one-hot frames, i.e. the fraction of
// frames whose classes agree. The longer input is truncated. Throws
// ValidationError when the overlap is empty.
double chroma_cosine_similarity(const QuantizedChroma & a, const QuantizedChroma & b);

// Debug variant on raw energies (zero frames count as similarity 0).
double chroma_cosine_similarity_raw(const Chromagram & a, const Chromagram & b);

nlohmann::json chroma_to_json(const QuantizedChroma & q);
QuantizedChroma chroma_from_json(const nlohmann::json & doc);

// ---------------------------------------------------------------------------
// Conditioning tensors
// ---------------------------------------------------------------------------

// T_C x D rows; zero rows is the null (unconditional) condition.
struct ConditioningTensor {
    Eigen::MatrixXd rows;

    ConditioningTensor() = default;
    ConditioningTensor(int length, int D) : rows(Eigen::MatrixXd::Zero(length, D)) {}
    explicit ConditioningTensor(Eigen::MatrixXd m) : rows(std::move(m)) {}

    int length() const { return static_cast<int>(rows.rows()); }
    int dim() const { return static_cast<int>(rows.cols()); }
    bool empty() const { return rows.rows() == 0; }
};

// Fixed table of 12 pitch-class rows plus one null row, each a unit vector.
// The model's learned condition projection sits on top of it.
class ChromaEmbedder {
public:
    static constexpr int kNullClass = kPitchClasses;

    explicit ChromaEmbedder(int D, uint64_t seed = 0x63687230ULL);

    ConditioningTensor embed(const QuantizedChroma & q) const;
    // F null rows: the melody condition with the melody dropped.
    ConditioningTensor null_condition(int frames) const;
    Eigen::VectorXd row(int pitch_class) const { return table_.row(pitch_class).transpose(); }

private:
    Eigen::MatrixXd table_; // 13 x D
};

ConditioningTensor chroma_to_condition(const QuantizedChroma & q, int D);

// ---------------------------------------------------------------------------
// Text preprocessing
// ---------------------------------------------------------------------------

struct TextAnnotation {
    std::string description;
    std::map<std::string, std::string> tags; // genre, bpm, key, instrument, ...
};

struct PreprocessConfig {
    double merge_prob = 0.25;
    double description_dropout = 0.5;
    double word_dropout = 0.3;
    double condition_dropout = 0.2;

    void validate() const;
};

struct MergeOutcome {
    std::string text;
    bool merged = false;
    bool description_dropped = false;
};

// With probability merge_prob appends "key: value" tags (sorted by key); upon
// merging, drops the description with probability description_dropout.
// Annotations without tags pass through untouched and draw nothing.
MergeOutcome merge_conditions(const TextAnnotation & ann, const PreprocessConfig & cfg, Rng & rng);

// Removes each whitespace-delimited word independently with probability p.
std::string word_dropout(const std::string & text, double p, Rng & rng);

// Lowercase, strip punctuation, drop stop words, lemmatize with the suffix
// table below. Idempotent.
std::string text_normalize(const std::string & text);

// Suffix rewrite rules applied to a fixpoint, first match wins per pass.
struct SuffixRule {
    const char * suffix;
    const char * replacement;
    int min_stem; // characters that must remain before the suffix
};
std::span<const SuffixRule> lemma_rules();
bool is_stop_word(const std::string & word);
std::string lemmatize(std::string word);

// One unit-norm row per whitespace token, seeded by a hash of the token.
ConditioningTensor encode_text_toy(const std::string & text, int D);

} // namespace interleave
