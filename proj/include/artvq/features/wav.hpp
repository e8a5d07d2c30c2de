// Copyright 2026 The artvq Authors
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

// Minimal RIFF/WAVE support: 16-bit PCM mono only.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "artvq/core/io.hpp"

namespace artvq::features {

struct Waveform {
  std::vector<double> samples;  // scaled to [-1, 1)
  int sample_rate = 16000;
};

namespace detail {

inline std::uint32_t read_u32(const std::string& b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

inline std::uint16_t read_u16(const std::string& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

inline void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

inline Waveform parse_wav(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw IngestionError(origin + ": not a RIFF/WAVE file");
  }
  Waveform wav;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = detail::read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw IngestionError(origin + ": truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw IngestionError(origin + ": short fmt chunk");
      const auto format = detail::read_u16(bytes, body);
      const auto channels = detail::read_u16(bytes, body + 2);
      wav.sample_rate = static_cast<int>(detail::read_u32(bytes, body + 4));
      const auto bits = detail::read_u16(bytes, body + 14);
      if (format != 1 || bits != 16) {
        throw IngestionError(origin + ": only 16-bit PCM is supported (format " +
                             std::to_string(format) + ", " + std::to_string(bits) + " bits)");
      }
      if (channels != 1) {
        throw IngestionError(origin + ": expected mono audio, got " + std::to_string(channels) +
                             " channels");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw IngestionError(origin + ": data chunk before fmt chunk");
      wav.samples.resize(size / 2);
      for (std::size_t i = 0; i < wav.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(detail::read_u16(bytes, body + 2 * i));
        wav.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      return wav;
    }
    pos = body + size + (size & 1);
  }
  throw IngestionError(origin + ": no data chunk");
}

inline Waveform read_wav(const fs::path& path) { return parse_wav(read_text_file(path), path.string()); }

inline std::string encode_wav(const Waveform& wav) {
  std::string b = "RIFF";
  const auto data_bytes = static_cast<std::uint32_t>(2 * wav.samples.size());
  detail::put_u32(b, 36 + data_bytes);
  b += "WAVEfmt ";
  detail::put_u32(b, 16);
  detail::put_u16(b, 1);
  detail::put_u16(b, 1);
  detail::put_u32(b, static_cast<std::uint32_t>(wav.sample_rate));
  detail::put_u32(b, static_cast<std::uint32_t>(wav.sample_rate * 2));
  detail::put_u16(b, 2);
  detail::put_u16(b, 16);
  b += "data";
  detail::put_u32(b, data_bytes);
  for (double s : wav.samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    detail::put_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return b;
}

inline void write_wav(const fs::path& path, const Waveform& wav) {
  write_text_file(path, encode_wav(wav));
}

}  // namespace artvq::features
