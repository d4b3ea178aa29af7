#pragma once

#include "interleave/conditioning.h"

#include <string>

namespace interleave {

// 16-bit PCM RIFF/WAVE. Multi-channel input is downmixed to mono by
// averaging the channels. Throws IoError / FormatError.
AudioBuffer read_wav(const std::string & path);
AudioBuffer decode_wav(const std::string & bytes);

// Mono 16-bit PCM; samples are clipped to [-1, 1].
void write_wav(const std::string & path, const AudioBuffer & audio);
std::string encode_wav(const AudioBuffer & audio);

// Pure tone of the given frequency and amplitude.
AudioBuffer sine_wave(double frequency_hz, double seconds, int sample_rate, double amplitude = 0.5);

} // namespace interleave
