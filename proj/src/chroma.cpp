#include "interleave/conditioning.h"

#include "interleave/error.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace interleave {

namespace {

struct FftwPlanDeleter {
    void operator()(fftw_plan_s * plan) const { fftw_destroy_plan(plan); }
};
struct FftwFree {
    void operator()(void * p) const { fftw_free(p); }
};

} // namespace

int pitch_class_of(double frequency_hz) {
    const long semis = std::lround(12.0 * std::log2(frequency_hz / 440.0)) + 9;
    return static_cast<int>(((semis % kPitchClasses) + kPitchClasses) % kPitchClasses);
}

Chromagram compute_chromagram(const AudioBuffer & audio, int window, int hop) {
    if (audio.sample_rate <= 0) {
        throw ValidationError("sample rate must be positive");
    }
    if (window < 2 || hop < 1) {
        throw ValidationError("chroma window must be >= 2 and hop >= 1");
    }
    const auto n = static_cast<long>(audio.samples.size());
    if (n < window) {
        throw ValidationError("audio of " + std::to_string(n) + " samples is shorter than one chroma window (" +
                              std::to_string(window) + ")");
    }

    std::unique_ptr<double, FftwFree> in(static_cast<double *>(fftw_malloc(sizeof(double) * window)));
    std::unique_ptr<fftw_complex, FftwFree> out(
        static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * (window / 2 + 1))));
    std::unique_ptr<fftw_plan_s, FftwPlanDeleter> plan(
        fftw_plan_dft_r2c_1d(window, in.get(), out.get(), FFTW_ESTIMATE));

    std::vector<double> hann(window);
    for (int i = 0; i < window; ++i) {
        hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / window);
    }

    // bin -> pitch class, -1 outside [32.7 Hz, Nyquist)
    const double nyquist = audio.sample_rate / 2.0;
    std::vector<int> bin_class(window / 2 + 1, -1);
    for (int b = 1; b <= window / 2; ++b) {
        const double f = static_cast<double>(b) * audio.sample_rate / window;
        if (f >= kChromaMinHz && f < nyquist) {
            bin_class[b] = pitch_class_of(f);
        }
    }

    Chromagram chroma;
    chroma.frame_hop_seconds = static_cast<double>(hop) / audio.sample_rate;
    const long frames = 1 + (n - window) / hop;
    chroma.frames.resize(frames);
    for (long f = 0; f < frames; ++f) {
        const double * src = audio.samples.data() + f * hop;
        for (int i = 0; i < window; ++i) {
            in.get()[i] = src[i] * hann[i];
        }
        fftw_execute(plan.get());
        auto & energies = chroma.frames[f];
        energies.fill(0.0);
        for (int b = 1; b <= window / 2; ++b) {
            if (bin_class[b] < 0) {
                continue;
            }
            const double re = out.get()[b][0];
            const double im = out.get()[b][1];
            energies[bin_class[b]] += re * re + im * im;
        }
    }
    return chroma;
}

QuantizedChroma quantize_chroma(const Chromagram & chroma) {
    QuantizedChroma q;
    q.classes.reserve(chroma.frames.size());
    for (const auto & frame : chroma.frames) {
        // max_element returns the first maximum
        q.classes.push_back(static_cast<int>(std::max_element(frame.begin(), frame.end()) - frame.begin()));
    }
    return q;
}

double chroma_cosine_similarity(const QuantizedChroma & a, const QuantizedChroma & b) {
    const std::size_t n = std::min(a.classes.size(), b.classes.size());
    if (n == 0) {
        throw ValidationError("chroma similarity is undefined for empty sequences");
    }
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        agree += a.classes[i] == b.classes[i] ? 1 : 0;
    }
    return static_cast<double>(agree) / static_cast<double>(n);
}

double chroma_cosine_similarity_raw(const Chromagram & a, const Chromagram & b) {
    const std::size_t n = std::min(a.frames.size(), b.frames.size());
    if (n == 0) {
        throw ValidationError("chroma similarity is undefined for empty sequences");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (int c = 0; c < kPitchClasses; ++c) {
            dot += a.frames[i][c] * b.frames[i][c];
            na += a.frames[i][c] * a.frames[i][c];
            nb += b.frames[i][c] * b.frames[i][c];
        }
        if (na > 0.0 && nb > 0.0) {
            total += dot / std::sqrt(na * nb);
        }
    }
    return total / static_cast<double>(n);
}

nlohmann::json chroma_to_json(const QuantizedChroma & q) { return q.classes; }

QuantizedChroma chroma_from_json(const nlohmann::json & doc) {
    QuantizedChroma q;
    try {
        q.classes = doc.get<std::vector<int>>();
    } catch (const nlohmann::json::exception & e) {
        throw FormatError(std::string("malformed chroma document: ") + e.what());
    }
    for (int c : q.classes) {
        if (c < 0 || c >= kPitchClasses) {
            throw FormatError("pitch class " + std::to_string(c) + " outside 0..11");
        }
    }
    return q;
}

ChromaEmbedder::ChromaEmbedder(int D, uint64_t seed) : table_(kPitchClasses + 1, D) {
    if (D < 1) {
        throw ValidationError("condition dimension must be >= 1");
    }
    Rng rng(seed);
    for (int r = 0; r <= kPitchClasses; ++r) {
        for (int c = 0; c < D; ++c) {
            table_(r, c) = rng.normal();
        }
        table_.row(r).normalize();
    }
}

ConditioningTensor ChromaEmbedder::embed(const QuantizedChroma & q) const {
    ConditioningTensor out(static_cast<int>(q.classes.size()), static_cast<int>(table_.cols()));
    for (std::size_t i = 0; i < q.classes.size(); ++i) {
        const int c = q.classes[i];
        if (c < 0 || c > kNullClass) {
            throw ValidationError("pitch class " + std::to_string(c) + " outside 0..12");
        }
        out.rows.row(static_cast<Eigen::Index>(i)) = table_.row(c);
    }
    return out;
}

ConditioningTensor ChromaEmbedder::null_condition(int frames) const {
    ConditioningTensor out(frames, static_cast<int>(table_.cols()));
    for (int i = 0; i < frames; ++i) {
        out.rows.row(i) = table_.row(kNullClass);
    }
    return out;
}

ConditioningTensor chroma_to_condition(const QuantizedChroma & q, int D) { return ChromaEmbedder(D).embed(q); }

} // namespace interleave
