// Copyright 2026 The ancff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ANCFF_WAV_HPP
#define ANCFF_WAV_HPP

// Minimal RIFF/WAVE reader and writer for single-channel impulse responses.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ancff/types.hpp"

namespace ancff::wav {

struct Audio {
  RealVector samples;
  std::uint32_t sample_rate = 0;
};

namespace detail {

inline void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>(v >> 8));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace detail

/// Encodes mono IEEE float32 WAV.
inline std::string encode_float32(std::span<const double> samples, std::uint32_t sample_rate) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 4);
  std::string b;
  b.reserve(44 + data_bytes);
  b += "RIFF";
  detail::put_u32(b, 36 + data_bytes);
  b += "WAVEfmt ";
  detail::put_u32(b, 16);
  detail::put_u16(b, 3);  // WAVE_FORMAT_IEEE_FLOAT
  detail::put_u16(b, 1);
  detail::put_u32(b, sample_rate);
  detail::put_u32(b, sample_rate * 4);
  detail::put_u16(b, 4);
  detail::put_u16(b, 32);
  b += "data";
  detail::put_u32(b, data_bytes);
  for (double s : samples) {
    const float f = static_cast<float>(s);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    detail::put_u32(b, bits);
  }
  return b;
}

/// Decodes mono PCM (16/24/32-bit) or IEEE float (32/64-bit) WAV data.
inline Audio decode(const std::string& bytes, const std::string& name = "wav") {
  auto fail = [&](const std::string& why) -> IngestionError { return IngestionError(name + ": " + why); };
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = detail::get_u32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > n) throw fail("truncated chunk");
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16) throw fail("short fmt chunk");
      format = detail::get_u16(p + body);
      channels = detail::get_u16(p + body + 2);
      rate = detail::get_u32(p + body + 4);
      bits = detail::get_u16(p + body + 14);
      if (format == 0xFFFE && size >= 26) format = detail::get_u16(p + body + 24);
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      if (channels != 1) throw fail("expected a single channel, found " + std::to_string(channels));
      const std::size_t width = bits / 8;
      if (width == 0 || size % width != 0) throw fail("data size not a multiple of the sample width");
      Audio a;
      a.sample_rate = rate;
      const std::size_t count = size / width;
      a.samples.resize(count);
      const unsigned char* d = p + body;
      for (std::size_t i = 0; i < count; ++i, d += width) {
        if (format == 3 && bits == 32) {
          float f;
          std::memcpy(&f, d, 4);
          a.samples[i] = f;
        } else if (format == 3 && bits == 64) {
          double v;
          std::memcpy(&v, d, 8);
          a.samples[i] = v;
        } else if (format == 1 && bits == 16) {
          a.samples[i] = static_cast<std::int16_t>(detail::get_u16(d)) / 32768.0;
        } else if (format == 1 && bits == 24) {
          std::int32_t v = d[0] | (d[1] << 8) | (d[2] << 16);
          if (v & 0x800000) v -= 0x1000000;
          a.samples[i] = v / 8388608.0;
        } else if (format == 1 && bits == 32) {
          a.samples[i] = static_cast<std::int32_t>(detail::get_u32(d)) / 2147483648.0;
        } else {
          throw fail("unsupported sample format " + std::to_string(format) + "/" + std::to_string(bits) + " bit");
        }
      }
      for (double v : a.samples)
        if (!std::isfinite(v)) throw fail("non-finite sample");
      return a;
    }
    pos = body + size + (size & 1);
  }
  throw fail("no data chunk");
}

inline void write_float32(const std::string& path, std::span<const double> samples, std::uint32_t sample_rate) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  const std::string b = encode_float32(samples, sample_rate);
  f.write(b.data(), static_cast<std::streamsize>(b.size()));
}

inline Audio read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestionError("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode(bytes, path);
}

}  // namespace ancff::wav

#endif  // ANCFF_WAV_HPP
