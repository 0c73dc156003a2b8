// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Batch evaluation over a WAV-pair manifest. A bad row is recorded and
// skipped, never fatal; aggregates use compensated summation so the report
// does not depend on row count quirks.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "phasor/harness.hpp"

namespace phasor::harness {

namespace o = phasor::ops;
using namespace phasor::nn;

namespace {

struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

// Phase-distance metrics between two waveforms, weighted by the reference
// magnitude.
void spectral_metrics(const std::vector<double>& est, const std::vector<double>& ref,
                      const dsp::StftConfig& scfg, double* pd_deg, double* wopd) {
  auto to_spec = [&](const std::vector<double>& w) {
    auto padded = dsp::pad_to_hop(w, scfg);
    auto x = zeros(Shape{(int64_t)padded.size()});
    std::copy(padded.begin(), padded.end(), x->data.begin());
    return dsp::stft(x, scfg);
  };
  auto se = to_spec(est);
  auto sr = to_spec(ref);
  auto est_ang = o::atan2_op(se.im, se.re);
  auto ref_ang = o::atan2_op(sr.im, sr.re);
  auto mag = o::cmodulus(sr);
  *pd_deg = loss::pd_metric(est_ang, ref_ang, mag);
  *wopd = loss::wopd_metric(est_ang, ref_ang, mag);
}

}  // namespace

EvalReport run_eval(const std::string& manifest_path, const Network& net,
                    const dsp::StftConfig& scfg) {
  std::ifstream in(manifest_path);
  if (!in) throw ValueError("cannot open manifest: " + manifest_path);

  std::string header;
  if (!std::getline(in, header)) return EvalReport{};  // empty file: nothing to do
  auto cols = split_csv(header);
  int ci = -1, di = -1;
  for (size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "clean_path") ci = (int)i;
    if (cols[i] == "degraded_path") di = (int)i;
  }
  if (ci < 0 || di < 0)
    throw ValueError("manifest header needs clean_path and degraded_path columns");

  EvalReport rep;
  Kahan k_sdr, k_pd, k_wopd;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    EvalRow row;
    if ((int)cells.size() <= std::max(ci, di)) {
      row.clean = line;
      row.error = "short manifest row";
      rep.rows.push_back(row);
      continue;
    }
    row.clean = cells[ci];
    row.degraded = cells[di];
    try {
      auto clean = dsp::read_wav(row.clean);
      auto degraded = dsp::read_wav(row.degraded);
      if (clean.sample_rate != degraded.sample_rate)
        throw ValueError("sample rate mismatch between pair");
      const size_t n = std::min(degraded.samples.size(), clean.samples.size());
      auto deg = degraded.samples;
      deg.resize(n);
      auto ref = clean.samples;
      ref.resize(n);
      row.si_sdr_db = loss::si_sdr(deg, ref);
      spectral_metrics(deg, ref, scfg, &row.pd_deg, &row.wopd);
      auto est = enhance(net, deg, scfg);
      est.resize(std::min(est.size(), n));
      auto ref2 = ref;
      ref2.resize(est.size());
      row.si_sdr_enh_db = loss::si_sdr(est, ref2);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    if (row.ok) {
      k_sdr.add(row.si_sdr_db);
      k_pd.add(row.pd_deg);
      k_wopd.add(row.wopd);
      ++rep.n_ok;
    }
    rep.rows.push_back(row);
  }
  if (rep.n_ok > 0) {
    rep.mean_si_sdr_db = k_sdr.sum / (double)rep.n_ok;
    rep.mean_pd_deg = k_pd.sum / (double)rep.n_ok;
    rep.mean_wopd = k_wopd.sum / (double)rep.n_ok;
  }
  return rep;
}

}  // namespace phasor::harness
