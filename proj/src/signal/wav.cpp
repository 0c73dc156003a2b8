// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "phasor/signal.hpp"

namespace phasor::dsp {

namespace {

uint32_t rd_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t rd_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ofstream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void wr_u16(std::ofstream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValueError("cannot open wav file: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw ValueError("not a RIFF/WAVE file: " + path);

  WavData out;
  bool have_fmt = false;
  size_t data_off = 0, data_len = 0;
  size_t pos = 12;
  uint16_t channels = 0, bits = 0, format = 0;
  while (pos + 8 <= buf.size()) {
    const char* id = reinterpret_cast<const char*>(buf.data() + pos);
    uint32_t sz = rd_u32(buf.data() + pos + 4);
    size_t body = pos + 8;
    if (body + sz > buf.size()) break;
    if (std::memcmp(id, "fmt ", 4) == 0 && sz >= 16) {
      format = rd_u16(buf.data() + body);
      channels = rd_u16(buf.data() + body + 2);
      out.sample_rate = static_cast<int>(rd_u32(buf.data() + body + 4));
      bits = rd_u16(buf.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = sz;
    }
    pos = body + sz + (sz & 1);
  }
  if (!have_fmt || data_off == 0) throw ValueError("wav missing fmt/data chunk: " + path);
  if (format != 1) throw ValueError("wav format " + std::to_string(format) +
                                    " unsupported (need PCM=1): " + path);
  if (channels != 1)
    throw ValueError("wav has " + std::to_string(channels) + " channels (need mono): " + path);
  if (bits != 16)
    throw ValueError("wav has " + std::to_string(bits) + "-bit samples (need 16): " + path);

  const size_t n = data_len / 2;
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    int16_t s = static_cast<int16_t>(buf[data_off + 2 * i] | (buf[data_off + 2 * i + 1] << 8));
    out.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return out;
}

void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValueError("cannot create wav file: " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  wr_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  wr_u32(os, 16);
  wr_u16(os, 1);  // PCM
  wr_u16(os, 1);  // mono
  wr_u32(os, static_cast<uint32_t>(sample_rate));
  wr_u32(os, static_cast<uint32_t>(sample_rate * 2));  // byte rate
  wr_u16(os, 2);                                       // block align
  wr_u16(os, 16);                                      // bits
  os.write("data", 4);
  wr_u32(os, data_bytes);
  for (double v : samples) {
    double scaled = std::round(v * 32768.0);
    int16_t s = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    unsigned char b[2] = {static_cast<unsigned char>(s & 0xff),
                          static_cast<unsigned char>((s >> 8) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 2);
  }
}

}  // namespace phasor::dsp
