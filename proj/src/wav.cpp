#include "interleave/wav.h"

#include "interleave/error.h"
#include "interleave/pattern_io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>

namespace interleave {

namespace {

uint32_t read_u32(const std::string & b, std::size_t at) {
    return static_cast<uint32_t>(static_cast<unsigned char>(b[at])) |
           static_cast<uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
           static_cast<uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
           static_cast<uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

uint16_t read_u16(const std::string & b, std::size_t at) {
    return static_cast<uint16_t>(static_cast<unsigned char>(b[at]) |
                                 static_cast<unsigned char>(b[at + 1]) << 8);
}

void put_u32(std::string & b, uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        b += static_cast<char>((v >> (8 * i)) & 0xff);
    }
}

void put_u16(std::string & b, uint16_t v) {
    b += static_cast<char>(v & 0xff);
    b += static_cast<char>((v >> 8) & 0xff);
}

} // namespace

AudioBuffer decode_wav(const std::string & bytes) {
    if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
        throw FormatError("not a RIFF/WAVE file");
    }
    int channels = 0;
    int sample_rate = 0;
    int bits = 0;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::string id = bytes.substr(pos, 4);
        const uint32_t size = read_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) {
            throw FormatError("truncated WAV chunk '" + id + "'");
        }
        if (id == "fmt ") {
            if (size < 16) {
                throw FormatError("WAV fmt chunk too short");
            }
            const uint16_t format = read_u16(bytes, body);
            channels = read_u16(bytes, body + 2);
            sample_rate = static_cast<int>(read_u32(bytes, body + 4));
            bits = read_u16(bytes, body + 14);
            if (format != 1 || bits != 16) {
                throw FormatError("only 16-bit PCM WAV is supported");
            }
            if (channels < 1 || sample_rate < 1) {
                throw FormatError("WAV header has no channels or sample rate");
            }
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) {
                throw FormatError("WAV data chunk precedes fmt chunk");
            }
            const std::size_t frames = size / (2u * channels);
            AudioBuffer audio;
            audio.sample_rate = sample_rate;
            audio.samples.resize(frames);
            for (std::size_t i = 0; i < frames; ++i) {
                double acc = 0.0;
                for (int c = 0; c < channels; ++c) {
                    const auto raw = static_cast<int16_t>(read_u16(bytes, body + (i * channels + c) * 2));
                    acc += raw / 32768.0;
                }
                audio.samples[i] = acc / channels;
            }
            return audio;
        }
        pos = body + size + (size & 1u);
    }
    throw FormatError("WAV file has no data chunk");
}

AudioBuffer read_wav(const std::string & path) { return decode_wav(read_file(path)); }

std::string encode_wav(const AudioBuffer & audio) {
    if (audio.sample_rate <= 0) {
        throw ValidationError("sample rate must be positive");
    }
    const auto data_bytes = static_cast<uint32_t>(audio.samples.size() * 2);
    std::string b;
    b.reserve(44 + data_bytes);
    b += "RIFF";
    put_u32(b, 36 + data_bytes);
    b += "WAVE";
    b += "fmt ";
    put_u32(b, 16);
    put_u16(b, 1); // PCM
    put_u16(b, 1); // mono
    put_u32(b, static_cast<uint32_t>(audio.sample_rate));
    put_u32(b, static_cast<uint32_t>(audio.sample_rate) * 2);
    put_u16(b, 2);
    put_u16(b, 16);
    b += "data";
    put_u32(b, data_bytes);
    for (double s : audio.samples) {
        const double clipped = std::clamp(s, -1.0, 1.0);
        put_u16(b, static_cast<uint16_t>(static_cast<int16_t>(std::lround(clipped * 32767.0))));
    }
    return b;
}

void write_wav(const std::string & path, const AudioBuffer & audio) { write_file(path, encode_wav(audio)); }

AudioBuffer sine_wave(double frequency_hz, double seconds, int sample_rate, double amplitude) {
    if (sample_rate <= 0 || seconds < 0.0) {
        throw ValidationError("sine wave needs a positive sample rate and nonnegative duration");
    }
    AudioBuffer audio;
    audio.sample_rate = sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
    audio.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        audio.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * frequency_hz * static_cast<double>(i) / sample_rate);
    }
    return audio;
}

} // namespace interleave
