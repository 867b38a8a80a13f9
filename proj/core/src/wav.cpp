#include "abf/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "abf/error.hpp"

namespace abf {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(const std::vector<char>& data, std::size_t offset) {
  if (offset + sizeof(T) > data.size()) throw Error(Errc::MalformedRecord, "WAV file truncated");
  T value;
  std::memcpy(&value, data.data() + offset, sizeof(T));
  return value;
}

}  // namespace

void write_wav(const std::filesystem::path& path, const StereoBuffer& audio, double sample_rate,
               WavFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");

  const std::uint16_t channels = 2;
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::uint16_t tag = format == WavFormat::Pcm16 ? 1 : 3;
  const auto rate = static_cast<std::uint32_t>(std::lround(sample_rate));
  const std::uint16_t block_align = channels * bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(audio.frames() * block_align);

  out.write("RIFF", 4);
  put<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, tag);
  put<std::uint16_t>(out, channels);
  put<std::uint32_t>(out, rate);
  put<std::uint32_t>(out, rate * block_align);
  put<std::uint16_t>(out, block_align);
  put<std::uint16_t>(out, bits);
  out.write("data", 4);
  put<std::uint32_t>(out, data_bytes);

  for (std::size_t i = 0; i < audio.frames(); ++i) {
    for (float s : {audio.left[i], audio.right[i]}) {
      if (format == WavFormat::Float32) {
        put<float>(out, s);
      } else {
        const float c = std::clamp(s, -1.0f, 1.0f);
        put<std::int16_t>(out, static_cast<std::int16_t>(std::lround(c * 32767.0f)));
      }
    }
  }
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

WavFile read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 || std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    throw Error(Errc::MalformedRecord, path.string() + " is not a RIFF/WAVE file");
  }

  WavFile wav;
  std::uint16_t tag = 0, channels = 0, bits = 0;
  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const std::string id(data.data() + pos, 4);
    const auto size = get<std::uint32_t>(data, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      tag = get<std::uint16_t>(data, body);
      channels = get<std::uint16_t>(data, body + 2);
      wav.sample_rate = get<std::uint32_t>(data, body + 4);
      bits = get<std::uint16_t>(data, body + 14);
    } else if (id == "data") {
      if (channels != 2 || !((tag == 1 && bits == 16) || (tag == 3 && bits == 32))) {
        throw Error(Errc::MalformedRecord, "only stereo PCM16 / float32 WAV is supported");
      }
      wav.format = tag == 1 ? WavFormat::Pcm16 : WavFormat::Float32;
      const std::size_t frame_bytes = channels * bits / 8u;
      const std::size_t frames = size / frame_bytes;
      wav.audio.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        const std::size_t off = body + i * frame_bytes;
        if (tag == 3) {
          wav.audio.left[i] = get<float>(data, off);
          wav.audio.right[i] = get<float>(data, off + 4);
        } else {
          wav.audio.left[i] = static_cast<float>(get<std::int16_t>(data, off)) / 32767.0f;
          wav.audio.right[i] = static_cast<float>(get<std::int16_t>(data, off + 2)) / 32767.0f;
        }
      }
      return wav;
    }
    pos = body + size + (size & 1u);
  }
  throw Error(Errc::MalformedRecord, path.string() + " has no data chunk");
}

}  // namespace abf
