#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "abf/synth.hpp"

namespace abf {

enum class WavFormat : std::uint8_t { Pcm16, Float32 };

/// Stereo RIFF/WAVE writer (format tag 1 for PCM16, 3 for IEEE float).
void write_wav(const std::filesystem::path& path, const StereoBuffer& audio, double sample_rate,
               WavFormat format = WavFormat::Float32);

struct WavFile {
  StereoBuffer audio;
  std::uint32_t sample_rate = 0;
  WavFormat format = WavFormat::Float32;
};

/// Reads files produced by write_wav (stereo PCM16 or float32).
WavFile read_wav(const std::filesystem::path& path);

}  // namespace abf
