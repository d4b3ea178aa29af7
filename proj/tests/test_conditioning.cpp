#include "interleave/conditioning.h"
#include "interleave/error.h"
#include "interleave/optim.h"
#include "interleave/rng.h"
#include "interleave/wav.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace interleave;

namespace {

// Direct O(N^2) DFT chromagram of one frame, written from the definition.
std::array<double, 12> naive_chroma_frame(const std::vector<double> & x, int offset, int window, int sample_rate) {
    std::array<double, 12> out{};
    for (int b = 1; b <= window / 2; ++b) {
        const double f = static_cast<double>(b) * sample_rate / window;
        if (f < 32.7 || f >= sample_rate / 2.0) {
            continue;
        }
        double re = 0.0;
        double im = 0.0;
        for (int n = 0; n < window; ++n) {
            const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / window);
            const double v = x[offset + n] * w;
            re += v * std::cos(2.0 * std::numbers::pi * b * n / window);
            im -= v * std::sin(2.0 * std::numbers::pi * b * n / window);
        }
        const int semis = static_cast<int>(std::lround(12.0 * std::log2(f / 440.0))) + 9;
        out[((semis % 12) + 12) % 12] += re * re + im * im;
    }
    return out;
}

int word_count(const std::string & s) {
    std::istringstream in(s);
    std::string w;
    int n = 0;
    while (in >> w) {
        ++n;
    }
    return n;
}

} // namespace

TEST(PitchClass, ClosedForm) {
    EXPECT_EQ(pitch_class_of(440.0), 9);
    EXPECT_EQ(pitch_class_of(880.0), 9);
    EXPECT_EQ(pitch_class_of(220.0), 9);
    EXPECT_EQ(pitch_class_of(261.63), 0);
    EXPECT_EQ(pitch_class_of(466.16), 10);
    EXPECT_EQ(pitch_class_of(32.7), 0);
}

TEST(Chromagram, MatchesNaiveDftOnSmallWindow) {
    const int sr = 8000;
    const int window = 512;
    const int hop = 128;
    Rng rng(2);
    AudioBuffer audio;
    audio.sample_rate = sr;
    for (int n = 0; n < 1200; ++n) {
        audio.samples.push_back(0.3 * std::sin(2 * std::numbers::pi * 311.0 * n / sr) + 0.1 * rng.normal());
    }
    const Chromagram c = compute_chromagram(audio, window, hop);
    ASSERT_EQ(c.frames.size(), 1u + (1200 - window) / hop);
    for (std::size_t f = 0; f < c.frames.size(); ++f) {
        const auto ref = naive_chroma_frame(audio.samples, static_cast<int>(f) * hop, window, sr);
        for (int k = 0; k < 12; ++k) {
            EXPECT_NEAR(c.frames[f][k], ref[k], 1e-8 * (1.0 + ref[k])) << "frame " << f << " class " << k;
        }
    }
}

TEST(Chromagram, PureTonesLandOnTheirPitchClass) {
    for (double f : {440.0, 880.0, 261.63, 329.63, 110.0, 1760.0}) {
        const auto q = quantize_chroma(compute_chromagram(sine_wave(f, 2.0, 32000)));
        ASSERT_FALSE(q.classes.empty());
        for (int c : q.classes) {
            ASSERT_EQ(c, pitch_class_of(f)) << f << " Hz";
        }
    }
}

TEST(Chromagram, OctaveInvariance) {
    const auto a = quantize_chroma(compute_chromagram(sine_wave(392.0, 1.5, 32000)));
    const auto b = quantize_chroma(compute_chromagram(sine_wave(784.0, 1.5, 32000)));
    EXPECT_EQ(a, b);
}

TEST(Chromagram, SilenceAndShortInput) {
    AudioBuffer silence{std::vector<double>(kChromaWindow * 2, 0.0), 32000};
    const Chromagram c = compute_chromagram(silence);
    for (const auto & frame : c.frames) {
        for (double e : frame) {
            EXPECT_EQ(e, 0.0);
        }
    }
    EXPECT_EQ(quantize_chroma(c).classes.front(), 0);
    AudioBuffer short_audio{std::vector<double>(kChromaWindow - 1, 0.1), 32000};
    EXPECT_THROW(compute_chromagram(short_audio), ValidationError);
}

TEST(Chromagram, FrameCountAndHop) {
    const auto c = compute_chromagram(sine_wave(440.0, 2.0, 32000));
    EXPECT_EQ(c.frames.size(), static_cast<std::size_t>(1 + (64000 - kChromaWindow) / kChromaHop));
    EXPECT_DOUBLE_EQ(c.frame_hop_seconds, 4096.0 / 32000.0);
}

TEST(QuantizeChroma, ArgmaxWithLowestTie) {
    Chromagram c;
    std::array<double, 12> peak{};
    peak[9] = 5.0;
    std::array<double, 12> tie{};
    tie[3] = 2.0;
    tie[7] = 2.0;
    c.frames = {peak, std::array<double, 12>{}, tie};
    EXPECT_EQ(quantize_chroma(c).classes, (std::vector<int>{9, 0, 3}));
}

TEST(ChromaSimilarity, IdentityDisjointAndTruncation) {
    QuantizedChroma a{{0, 1, 2, 3, 4}};
    QuantizedChroma b{{5, 6, 7, 8, 9}};
    EXPECT_EQ(chroma_cosine_similarity(a, a), 1.0);
    EXPECT_EQ(chroma_cosine_similarity(a, b), 0.0);
    QuantizedChroma c{{0, 1, 7}};
    EXPECT_DOUBLE_EQ(chroma_cosine_similarity(a, c), 2.0 / 3.0);
    EXPECT_EQ(chroma_cosine_similarity(a, c), chroma_cosine_similarity(c, a));
    EXPECT_THROW(chroma_cosine_similarity(QuantizedChroma{}, QuantizedChroma{}), ValidationError);
}

TEST(ChromaSimilarity, RandomSequencesNearOneTwelfth) {
    Rng rng(4);
    QuantizedChroma a;
    QuantizedChroma b;
    for (int i = 0; i < 10000; ++i) {
        a.classes.push_back(static_cast<int>(rng.uniform_int(12)));
        b.classes.push_back(static_cast<int>(rng.uniform_int(12)));
    }
    EXPECT_NEAR(chroma_cosine_similarity(a, b), 1.0 / 12.0, 0.01);
}

TEST(ChromaSimilarity, RawVariantBounds) {
    const auto a = compute_chromagram(sine_wave(440.0, 1.0, 32000));
    EXPECT_NEAR(chroma_cosine_similarity_raw(a, a), 1.0, 1e-12);
}

TEST(ChromaJson, RoundtripAndValidation) {
    const QuantizedChroma q{{9, 9, 0, 11}};
    EXPECT_EQ(chroma_from_json(chroma_to_json(q)), q);
    EXPECT_EQ(chroma_to_json(q).dump(), "[9,9,0,11]");
    EXPECT_THROW(chroma_from_json(nlohmann::json::parse("[12]")), FormatError);
    EXPECT_THROW(chroma_from_json(nlohmann::json::parse("{\"a\":1}")), FormatError);
}

TEST(ChromaCondition, ShapeEqualityAndNullRow) {
    const QuantizedChroma q{{3, 3, 7, 0}};
    const ConditioningTensor t = chroma_to_condition(q, 16);
    ASSERT_EQ(t.length(), 4);
    ASSERT_EQ(t.dim(), 16);
    EXPECT_EQ(t.rows.row(0), t.rows.row(1));
    EXPECT_NE(t.rows.row(0), t.rows.row(2));
    const ChromaEmbedder emb(16);
    const auto null_row = emb.row(ChromaEmbedder::kNullClass);
    for (int c = 0; c < 12; ++c) {
        EXPECT_GT((emb.row(c) - null_row).norm(), 1e-6);
    }
    EXPECT_EQ(emb.null_condition(5).length(), 5);
}

TEST(MergeConditions, NoTagsLeavesDescription) {
    const TextAnnotation ann{"calm piano piece", {}};
    for (uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        EXPECT_EQ(merge_conditions(ann, PreprocessConfig{}, rng).text, "calm piano piece");
    }
}

TEST(MergeConditions, ForcedMergeAndDrop) {
    const TextAnnotation ann{"upbeat track", {{"key", "C major"}, {"bpm", "120"}}};
    PreprocessConfig always{1.0, 1.0, 0.3, 0.2};
    Rng rng(1);
    const auto dropped = merge_conditions(ann, always, rng);
    EXPECT_TRUE(dropped.merged);
    EXPECT_TRUE(dropped.description_dropped);
    EXPECT_EQ(dropped.text, "bpm: 120. key: C major");

    PreprocessConfig keep{1.0, 0.0, 0.3, 0.2};
    const auto merged = merge_conditions(ann, keep, rng);
    EXPECT_EQ(merged.text, "upbeat track. bpm: 120. key: C major");

    PreprocessConfig never{0.0, 1.0, 0.3, 0.2};
    EXPECT_EQ(merge_conditions(ann, never, rng).text, "upbeat track");
}

TEST(MergeConditions, Reproducible) {
    const TextAnnotation ann{"a", {{"genre", "jazz"}}};
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng r1(seed);
        Rng r2(seed);
        EXPECT_EQ(merge_conditions(ann, {}, r1).text, merge_conditions(ann, {}, r2).text);
    }
}

TEST(MergeConditions, FrequenciesMatchConfig) {
    const TextAnnotation ann{"slow blues", {{"genre", "blues"}}};
    const int trials = 100000;
    int merged = 0;
    int dropped = 0;
    Rng rng(10);
    for (int i = 0; i < trials; ++i) {
        const auto out = merge_conditions(ann, PreprocessConfig{}, rng);
        merged += out.merged;
        dropped += out.description_dropped;
    }
    EXPECT_NEAR(static_cast<double>(merged) / trials, 0.25, 0.01);
    EXPECT_NEAR(static_cast<double>(dropped) / merged, 0.5, 0.01);
}

TEST(WordDropout, Extremes) {
    Rng rng(3);
    EXPECT_EQ(word_dropout("one two three", 0.0, rng), "one two three");
    EXPECT_EQ(word_dropout("one two three", 1.0, rng), "");
    EXPECT_THROW(word_dropout("x", 1.5, rng), ValidationError);
}

TEST(WordDropout, MeanSurvivorsTenWords) {
    const std::string text = "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9";
    Rng rng(12);
    double total = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        total += word_count(word_dropout(text, 0.3, rng));
    }
    EXPECT_NEAR(total / trials, 7.0, 0.05);
}

TEST(TextNormalize, StopWordsAndSuffixes) {
    EXPECT_EQ(text_normalize("the guitars are playing"), "guitar play");
    EXPECT_EQ(text_normalize(""), "");
    EXPECT_EQ(text_normalize("Drums, BASS and strings!"), "drum bass string");
    EXPECT_EQ(lemmatize("melodies"), "melody");
    EXPECT_EQ(lemmatize("bass"), "bass");
    EXPECT_EQ(lemmatize("is"), "is");
    EXPECT_TRUE(is_stop_word("the"));
    EXPECT_FALSE(is_stop_word("guitar"));
}

TEST(TextNormalize, IdempotentOnRandomText) {
    const std::vector<std::string> vocab{"the", "guitars", "playing", "played", "melodies", "calm", "is",
                                         "bass",  "drums",   "strings", "a",      "sings",  "Jazz", "pianos"};
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const int n = static_cast<int>(rng.uniform_int(8));
        for (int i = 0; i < n; ++i) {
            text += vocab[rng.uniform_int(vocab.size())] + (rng.bernoulli(0.2) ? ", " : " ");
        }
        const std::string once = text_normalize(text);
        EXPECT_EQ(text_normalize(once), once) << "input: " << text;
    }
}

TEST(TextEmbedder, DeterministicUnitRows) {
    const auto a = encode_text_toy("calm piano melody", 32);
    const auto b = encode_text_toy("calm piano melody", 32);
    ASSERT_EQ(a.length(), 3);
    EXPECT_EQ(a.rows, b.rows);
    for (int i = 0; i < a.length(); ++i) {
        EXPECT_NEAR(a.rows.row(i).norm(), 1.0, 1e-9);
    }
    EXPECT_EQ(a.rows.row(1), encode_text_toy("piano", 32).rows.row(0));
    EXPECT_TRUE(encode_text_toy("", 32).empty());
    EXPECT_THROW(encode_text_toy("x", 0), ValidationError);
}

TEST(ConditionDropout, FrequencyMatchesConfig) {
    Rng rng(21);
    int dropped = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        dropped += draw_condition_dropout(0.2, rng);
    }
    EXPECT_NEAR(static_cast<double>(dropped) / trials, 0.2, 0.01);
}

TEST(Wav, EncodeDecodeRoundtripWithinQuantization) {
    const AudioBuffer tone = sine_wave(440.0, 0.1, 16000);
    const AudioBuffer back = decode_wav(encode_wav(tone));
    ASSERT_EQ(back.samples.size(), tone.samples.size());
    EXPECT_EQ(back.sample_rate, 16000);
    for (std::size_t i = 0; i < tone.samples.size(); ++i) {
        EXPECT_NEAR(back.samples[i], tone.samples[i], 1.0 / 32767.0);
    }
    EXPECT_THROW(decode_wav("RIFF"), FormatError);
    EXPECT_THROW(decode_wav(std::string(64, 'x')), FormatError);
}

TEST(Wav, StereoIsDownmixedByAveraging) {
    // hand-built 2-channel 16-bit file: L = 1000, R = -3000
    auto le16 = [](std::string & s, int v) {
        s.push_back(static_cast<char>(v & 0xff));
        s.push_back(static_cast<char>((v >> 8) & 0xff));
    };
    auto le32 = [](std::string & s, uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        }
    };
    std::string data;
    for (int i = 0; i < 3; ++i) {
        le16(data, 1000);
        le16(data, -3000 & 0xffff);
    }
    std::string wav = "RIFF";
    le32(wav, 36 + static_cast<uint32_t>(data.size()));
    wav += "WAVEfmt ";
    le32(wav, 16);
    le16(wav, 1);
    le16(wav, 2);
    le32(wav, 8000);
    le32(wav, 8000 * 4);
    le16(wav, 4);
    le16(wav, 16);
    wav += "data";
    le32(wav, static_cast<uint32_t>(data.size()));
    wav += data;
    const AudioBuffer a = decode_wav(wav);
    ASSERT_EQ(a.samples.size(), 3u);
    EXPECT_NEAR(a.samples[0], -1000.0 / 32768.0, 1e-9);
}
