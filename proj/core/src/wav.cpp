#include "convsim/wav.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "convsim/error.hpp"

namespace convsim {

namespace {

std::uint32_t le32(const char* p) {
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  return std::uint32_t(u[0]) | std::uint32_t(u[1]) << 8 | std::uint32_t(u[2]) << 16 |
         std::uint32_t(u[3]) << 24;
}

std::uint16_t le16(const char* p) {
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint16_t>(u[0] | u[1] << 8);
}

void put32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                              char((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

void put16(std::ostream& os, std::uint16_t v) {
  const std::array<char, 2> b{char(v & 0xff), char((v >> 8) & 0xff)};
  os.write(b.data(), 2);
}

struct WavLayout {
  int sample_rate = 0;
  std::int64_t data_offset = 0;
  std::int64_t num_samples = 0;
};

WavLayout parse_header(std::ifstream& in, const std::filesystem::path& path) {
  std::array<char, 12> riff{};
  if (!in.read(riff.data(), 12) || std::memcmp(riff.data(), "RIFF", 4) != 0 ||
      std::memcmp(riff.data() + 8, "WAVE", 4) != 0) {
    throw Error(fmt::format("{}: not a RIFF/WAVE file", path.string()));
  }
  WavLayout layout;
  bool have_fmt = false;
  std::array<char, 8> chunk{};
  while (in.read(chunk.data(), 8)) {
    const std::uint32_t size = le32(chunk.data() + 4);
    if (std::memcmp(chunk.data(), "fmt ", 4) == 0) {
      if (size < 16) throw Error(fmt::format("{}: truncated fmt chunk", path.string()));
      std::vector<char> body(size);
      if (!in.read(body.data(), size)) {
        throw Error(fmt::format("{}: truncated fmt chunk", path.string()));
      }
      const std::uint16_t format = le16(body.data());
      const std::uint16_t channels = le16(body.data() + 2);
      const std::uint16_t bits = le16(body.data() + 14);
      if (format != 1 || bits != 16) {
        throw Error(fmt::format("{}: only 16-bit integer PCM is supported (format={}, bits={})",
                                path.string(), format, bits));
      }
      if (channels != 1) {
        throw Error(fmt::format("{}: expected mono audio, found {} channels", path.string(),
                                channels));
      }
      layout.sample_rate = static_cast<int>(le32(body.data() + 4));
      have_fmt = true;
      if (size & 1) in.seekg(1, std::ios::cur);
    } else if (std::memcmp(chunk.data(), "data", 4) == 0) {
      if (!have_fmt) throw Error(fmt::format("{}: data chunk before fmt chunk", path.string()));
      layout.data_offset = static_cast<std::int64_t>(in.tellg());
      layout.num_samples = size / 2;
      return layout;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  throw Error(fmt::format("{}: missing data chunk", path.string()));
}

}  // namespace

std::pair<int, std::int64_t> read_wav_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("{}: cannot open audio file", path.string()));
  const WavLayout layout = parse_header(in, path);
  return {layout.sample_rate, layout.num_samples};
}

PcmAudio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("{}: cannot open audio file", path.string()));
  const WavLayout layout = parse_header(in, path);
  PcmAudio audio;
  audio.sample_rate = layout.sample_rate;
  std::vector<char> raw(static_cast<std::size_t>(layout.num_samples) * 2);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(fmt::format("{}: truncated data chunk", path.string()));
  }
  audio.samples.resize(static_cast<std::size_t>(layout.num_samples));
  for (std::size_t i = 0; i < audio.samples.size(); ++i) {
    audio.samples[i] = static_cast<std::int16_t>(le16(raw.data() + 2 * i));
  }
  return audio;
}

void write_wav(const std::filesystem::path& path, std::span<const std::int16_t> samples,
               int sample_rate) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out.write("data", 4);
  put32(out, data_bytes);
  std::vector<char> raw(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(samples[i]);
    raw[2 * i] = static_cast<char>(v & 0xff);
    raw[2 * i + 1] = static_cast<char>(v >> 8);
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(fmt::format("{}: write failed", path.string()));
}

}  // namespace convsim
