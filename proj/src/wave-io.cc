// src/wave-io.cc

// Copyright 2026  plugin-se contributors
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

#include "plugin-se/wave-io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "plugin-se/errors.h"

namespace plugin_se {

namespace {

void PutU32(std::ostream &os, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

void PutU16(std::ostream &os, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

uint32_t GetU32(const unsigned char *p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t GetU16(const unsigned char *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void ReadExact(std::istream &is, void *dst, size_t n, const char *what) {
  is.read(static_cast<char *>(dst), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n)
    throw InvalidArgument(std::string("ReadWave: truncated ") + what);
}

}  // namespace

void WriteWave(std::ostream &os, const Waveform &w) {
  if (w.sample_rate <= 0) throw InvalidArgument("WriteWave: bad sample rate");
  const uint32_t data_bytes = static_cast<uint32_t>(w.size() * 2);
  os.write("RIFF", 4);
  PutU32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  PutU32(os, 16);
  PutU16(os, 1);  // PCM
  PutU16(os, 1);  // mono
  PutU32(os, static_cast<uint32_t>(w.sample_rate));
  PutU32(os, static_cast<uint32_t>(w.sample_rate) * 2);
  PutU16(os, 2);
  PutU16(os, 16);
  os.write("data", 4);
  PutU32(os, data_bytes);
  for (double v : w.samples) {
    const double scaled = std::round(v * 32768.0);
    const auto q = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    PutU16(os, static_cast<uint16_t>(q));
  }
  if (!os) throw std::runtime_error("WriteWave: stream error");
}

void WriteWaveFile(const std::string &path, const Waveform &w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  WriteWave(os, w);
}

Waveform ReadWave(std::istream &is) {
  unsigned char riff[12];
  ReadExact(is, riff, 12, "RIFF header");
  if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
    throw InvalidArgument("ReadWave: not a RIFF/WAVE stream");

  bool have_fmt = false;
  int rate = 0;
  while (true) {
    unsigned char hdr[8];
    ReadExact(is, hdr, 8, "chunk header");
    const uint32_t size = GetU32(hdr + 4);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw InvalidArgument("ReadWave: short fmt chunk");
      std::vector<unsigned char> fmt(size + (size & 1));
      ReadExact(is, fmt.data(), fmt.size(), "fmt chunk");
      const uint16_t format = GetU16(fmt.data());
      const uint16_t channels = GetU16(fmt.data() + 2);
      rate = static_cast<int>(GetU32(fmt.data() + 4));
      const uint16_t bits = GetU16(fmt.data() + 14);
      if (format != 1 || channels != 1 || bits != 16)
        throw InvalidArgument("ReadWave: only 16-bit PCM mono is supported");
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw InvalidArgument("ReadWave: data before fmt");
      std::vector<unsigned char> raw(size);
      ReadExact(is, raw.data(), size, "data chunk");
      std::vector<double> samples(size / 2);
      for (size_t i = 0; i < samples.size(); ++i)
        samples[i] = static_cast<int16_t>(GetU16(raw.data() + 2 * i)) / 32768.0;
      return Waveform(std::move(samples), rate);
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
      if (!is) throw InvalidArgument("ReadWave: truncated chunk");
    }
  }
}

Waveform ReadWaveFile(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifact(path);
  return ReadWave(is);
}

}  // namespace plugin_se
