// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint format, all integers and doubles little-endian:
//   "PHSR" | u32 version | u64 len, config JSON | u64 count,
//   then per parameter: u64 len, name | u64 numel, f64 data.
// Parameters are stored in collect() order, which is part of the format.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "phasor/network.hpp"

namespace phasor::nn {

namespace {

constexpr char kMagic[4] = {'P', 'H', 'S', 'R'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

uint32_t take_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ValueError("truncated checkpoint");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t take_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ValueError("truncated checkpoint");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double take_f64(std::istream& is) {
  uint64_t bits = take_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string take_str(std::istream& is) {
  uint64_t len = take_u64(is);
  if (len > (1u << 26)) throw ValueError("checkpoint string length is implausible");
  std::string s(len, '\0');
  if (len && !is.read(s.data(), static_cast<std::streamsize>(len)))
    throw ValueError("truncated checkpoint");
  return s;
}

}  // namespace

void save_network(const std::string& path, const Network& net) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ValueError("cannot open \"" + path + "\" for writing");
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  std::string cfg = net.cfg.to_json();
  put_u64(os, cfg.size());
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  ParamMap params;
  net.collect(params);
  put_u64(os, params.size());
  for (const auto& [name, t] : params) {
    put_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(os, t->data.size());
    for (double v : t->data) put_f64(os, v);
  }
  if (!os) throw ValueError("short write to \"" + path + "\"");
}

Network load_network(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValueError("cannot open \"" + path + "\"");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw ValueError("\"" + path + "\" is not a phasor checkpoint");
  uint32_t version = take_u32(is);
  if (version != kVersion)
    throw ValueError("checkpoint version " + std::to_string(version) + " is not supported");
  ModelConfig cfg = ModelConfig::from_json(take_str(is));
  Rng rng(0);
  Network net = make_network(rng, cfg);
  ParamMap params;
  net.collect(params);
  uint64_t count = take_u64(is);
  if (count != params.size())
    throw ValueError("checkpoint holds " + std::to_string(count) + " parameters, expected " +
                     std::to_string(params.size()));
  for (auto& [name, t] : params) {
    std::string got = take_str(is);
    if (got != name)
      throw ValueError("checkpoint parameter \"" + got + "\" where \"" + name + "\" expected");
    uint64_t numel = take_u64(is);
    if (numel != t->data.size())
      throw ValueError("checkpoint parameter \"" + name + "\" has " + std::to_string(numel) +
                       " values, expected " + std::to_string(t->data.size()));
    for (auto& v : t->data) v = take_f64(is);
  }
  return net;
}

}  // namespace phasor::nn
