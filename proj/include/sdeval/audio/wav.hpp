#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sdeval/audio/buffer.hpp"
#include "sdeval/error.hpp"

// Minimal RIFF/WAVE codec: integer PCM (8/16/24/32 bit) and IEEE float
// (32/64 bit), plain or WAVE_FORMAT_EXTENSIBLE. Non-audio chunks are skipped.

namespace sdeval::audio {

enum class WavEncoding { kPcm16, kFloat32 };

struct WavFormat {
  std::uint16_t format_tag = 0;  // 1 = PCM, 3 = IEEE float
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
  std::uint16_t block_align = 0;
};

namespace detail {

inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
inline void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kUndecodableFile, "cannot open " + path.string(), {path.string()});
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

struct Chunk {
  std::string id;
  std::size_t offset;  // payload offset
  std::size_t size;
};

inline std::vector<Chunk> list_chunks(const std::vector<unsigned char>& bytes,
                                      const std::string& name) {
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::kUndecodableFile, name + ": " + why, {name});
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    bad("not a RIFF/WAVE file");
  }
  std::vector<Chunk> chunks;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    Chunk c{std::string(reinterpret_cast<const char*>(bytes.data() + pos), 4), pos + 8,
            le32(bytes.data() + pos + 4)};
    if (c.offset + c.size > bytes.size()) {
      // Truncated trailing data chunk: keep what is there.
      if (c.id == "data") {
        c.size = bytes.size() - c.offset;
      } else {
        bad("truncated chunk " + c.id);
      }
    }
    chunks.push_back(c);
    pos = c.offset + c.size + (c.size & 1);
  }
  return chunks;
}

inline WavFormat parse_fmt(const unsigned char* p, std::size_t size, const std::string& name) {
  if (size < 16) fail(ErrorCode::kUndecodableFile, name + ": short fmt chunk", {name});
  WavFormat f;
  f.format_tag = le16(p);
  f.channels = le16(p + 2);
  f.sample_rate = le32(p + 4);
  f.block_align = le16(p + 12);
  f.bits_per_sample = le16(p + 14);
  if (f.format_tag == 0xFFFE) {
    if (size < 40) fail(ErrorCode::kUndecodableFile, name + ": short extensible fmt", {name});
    f.format_tag = le16(p + 24);  // first two bytes of the subformat GUID
  }
  return f;
}

}  // namespace detail

inline AudioBuffer decode_wav_bytes(const std::vector<unsigned char>& bytes,
                                    const std::string& name = "<memory>") {
  const auto chunks = detail::list_chunks(bytes, name);
  const detail::Chunk* fmt = nullptr;
  const detail::Chunk* data = nullptr;
  for (const auto& c : chunks) {
    if (c.id == "fmt " && !fmt) fmt = &c;
    if (c.id == "data" && !data) data = &c;
  }
  if (!fmt || !data) fail(ErrorCode::kUndecodableFile, name + ": missing fmt or data", {name});
  const WavFormat f = detail::parse_fmt(bytes.data() + fmt->offset, fmt->size, name);
  const bool is_float = f.format_tag == 3;
  const bool is_pcm = f.format_tag == 1;
  const int bytes_per_sample = f.bits_per_sample / 8;
  const bool supported =
      (is_pcm && (f.bits_per_sample == 8 || f.bits_per_sample == 16 ||
                  f.bits_per_sample == 24 || f.bits_per_sample == 32)) ||
      (is_float && (f.bits_per_sample == 32 || f.bits_per_sample == 64));
  if (!supported || f.channels == 0 || f.sample_rate == 0) {
    fail(ErrorCode::kUndecodableFile,
         name + ": unsupported encoding tag=" + std::to_string(f.format_tag) +
             " bits=" + std::to_string(f.bits_per_sample),
         {name});
  }
  const std::size_t frame_bytes = static_cast<std::size_t>(bytes_per_sample) * f.channels;
  const std::size_t frames = data->size / frame_bytes;
  std::vector<std::vector<float>> ch(f.channels, std::vector<float>(frames));
  const unsigned char* p = bytes.data() + data->offset;
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < f.channels; ++c, p += bytes_per_sample) {
      double v = 0.0;
      if (is_float && bytes_per_sample == 4) {
        float x;
        std::memcpy(&x, p, 4);
        v = x;
      } else if (is_float) {
        double x;
        std::memcpy(&x, p, 8);
        v = x;
      } else if (bytes_per_sample == 1) {
        v = (static_cast<int>(p[0]) - 128) / 128.0;
      } else if (bytes_per_sample == 2) {
        v = static_cast<std::int16_t>(detail::le16(p)) / 32768.0;
      } else if (bytes_per_sample == 3) {
        std::int32_t x = p[0] | (p[1] << 8) | (p[2] << 16);
        if (x & 0x800000) x |= ~0xffffff;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(detail::le32(p)) / 2147483648.0;
      }
      ch[c][i] = static_cast<float>(v);
    }
  }
  AudioBuffer buf(std::move(ch), static_cast<int>(f.sample_rate));
  if (!all_finite(buf)) fail(ErrorCode::kUndecodableFile, name + ": non-finite samples", {name});
  return buf;
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
  return decode_wav_bytes(detail::slurp(path), path.string());
}

inline std::string encode_wav(const AudioBuffer& buf, WavEncoding enc = WavEncoding::kPcm16) {
  const std::uint16_t bits = enc == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t tag = enc == WavEncoding::kPcm16 ? 1 : 3;
  const auto channels = static_cast<std::uint16_t>(buf.channel_count());
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint32_t data_size = static_cast<std::uint32_t>(buf.frames() * block);
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  detail::put32(out, 36 + data_size);
  out += "WAVEfmt ";
  detail::put32(out, 16);
  detail::put16(out, tag);
  detail::put16(out, channels);
  detail::put32(out, static_cast<std::uint32_t>(buf.sample_rate_hz()));
  detail::put32(out, static_cast<std::uint32_t>(buf.sample_rate_hz()) * block);
  detail::put16(out, block);
  detail::put16(out, bits);
  out += "data";
  detail::put32(out, data_size);
  for (std::size_t i = 0; i < buf.frames(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const float v = buf.channel(c)[i];
      if (enc == WavEncoding::kPcm16) {
        const double clamped = std::clamp(static_cast<double>(v), -1.0, 1.0);
        const long q = std::lround(clamped * 32767.0);
        detail::put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        std::uint32_t bits32;
        std::memcpy(&bits32, &v, 4);
        detail::put32(out, bits32);
      }
    }
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
                      WavEncoding enc = WavEncoding::kPcm16) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string(), {path.string()});
  const std::string bytes = encode_wav(buf, enc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write " + path.string(), {path.string()});
}

// Copies a WAV file keeping only its fmt and data chunks, so metadata
// chunks (LIST/INFO, bext, ...) do not travel with the audio.
inline void copy_wav_audio_only(const std::filesystem::path& from,
                                const std::filesystem::path& to) {
  const auto bytes = detail::slurp(from);
  const auto chunks = detail::list_chunks(bytes, from.string());
  std::string out = "RIFF____WAVE";
  bool have_fmt = false, have_data = false;
  for (const auto& c : chunks) {
    if ((c.id == "fmt " && !have_fmt) || (c.id == "data" && !have_data)) {
      (c.id == "fmt " ? have_fmt : have_data) = true;
      out += c.id;
      detail::put32(out, static_cast<std::uint32_t>(c.size));
      out.append(reinterpret_cast<const char*>(bytes.data() + c.offset), c.size);
      if (c.size & 1) out.push_back('\0');
    }
  }
  if (!have_fmt || !have_data) {
    fail(ErrorCode::kUndecodableFile, from.string() + ": missing fmt or data", {from.string()});
  }
  std::string riff_size;
  detail::put32(riff_size, static_cast<std::uint32_t>(out.size() - 8));
  out.replace(4, 4, riff_size);
  if (to.has_parent_path()) std::filesystem::create_directories(to.parent_path());
  std::ofstream os(to, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::kIo, "cannot write " + to.string(), {to.string()});
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace sdeval::audio
