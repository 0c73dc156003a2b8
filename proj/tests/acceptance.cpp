// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Release gate. Each numbered check prints exactly one PASS/FAIL line; the
// process exits nonzero if any check fails. Checks are self-contained and
// deterministic, so a failure here reproduces in isolation.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "phasor/harness.hpp"

using namespace phasor;
using namespace phasor::nn;
namespace hn = phasor::harness;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const char* label, bool pass, const std::string& detail) {
  std::printf("%s  %2d. %-28s %s\n", pass ? "PASS" : "FAIL", idx, label, detail.c_str());
  if (!pass) ++g_failures;
}

double now_s() {
  using C = std::chrono::steady_clock;
  return std::chrono::duration<double>(C::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

std::vector<double> harmonic_tone(size_t n) {
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i) {
    double t = (double)i / 16000.0;
    double a = 0.7, v = 0.0;
    for (int h = 1; h <= 3; ++h, a *= 0.55) v += a * std::sin(2 * kPi * 240 * h * t + 0.7 * h);
    w[i] = v;
  }
  return w;
}

double verdict_worst(const hn::EquivarianceReport& rep, const std::string& unit) {
  for (const auto& v : rep.verdicts)
    if (v.unit == unit) return v.worst;
  return 1e300;
}

}  // namespace

int main() {
  // 1. Equivariance across the theta grid at published widths, 16 frames.
  hn::RunConfig eq_cfg;
  eq_cfg.model = "small";
  eq_cfg.frames = 16;
  double t0 = now_s();
  auto clean = hn::run_equivcheck(eq_cfg);
  double dt1 = now_s() - t0;
  report(1, "equivariance suite", clean.suite_pass && dt1 < 60.0,
         fmt("all units within tolerance, %.1fs (budget 60s)", dt1));

  // 2. Each break mode defeats its own mechanism and nothing else.
  {
    bool all = true;
    std::string detail;
    for (const char* mode : {"mpicm", "attn", "ffn"}) {
      auto cfg = eq_cfg;
      cfg.break_mode = mode;
      auto rep = hn::run_equivcheck(cfg);
      all = all && rep.suite_pass;
      detail += fmt("%s=%s ", mode, rep.suite_pass ? "ok" : "BAD");
    }
    report(2, "ablation break modes", all, detail + "(targeted fail >= 1e-2, others pass)");
  }

  // 3. The real Hermitian inner product equals the two real dot products, and
  //    the fused attention scores ignore a global rotation.
  {
    Rng rng(314);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
      const int c = 2 + (int)rng.below(6);
      std::complex<double> herm(0.0, 0.0);
      double split = 0.0;
      for (int i = 0; i < c; ++i) {
        std::complex<double> q(rng.normal(), rng.normal());
        std::complex<double> k(rng.normal(), rng.normal());
        herm += q * std::conj(k);
        split += q.real() * k.real() + q.imag() * k.imag();
      }
      worst = std::max(worst, std::abs(herm.real() - split));
    }
    const double inv = verdict_worst(clean, "attention_scores");
    report(3, "hermitian score identity",
           worst <= 1e-12 && inv <= 1e-10,
           fmt("identity err %.2e (<=1e-12), score invariance %.2e (<=1e-10)", worst, inv));
  }

  // 4. The magnitude stream is blind to input phase rotations.
  {
    const double worst = verdict_worst(clean, "network_mag");
    report(4, "magnitude invariance", worst <= 1e-10, fmt("residual %.2e (<=1e-10)", worst));
  }

  // 5. Analytic gradients match central differences everywhere.
  {
    hn::RunConfig cfg;
    t0 = now_s();
    auto rep = hn::run_gradcheck(cfg);
    double dt = now_s() - t0;
    double worst = 0.0;
    for (const auto& e : rep.entries)
      if (e.name != "wrong_adjoint_caught") worst = std::max(worst, e.max_rel_err);
    report(5, "gradient correctness", rep.suite_pass && dt < 120.0,
           fmt("%zu entries, worst %.2e (<=1e-4), %.1fs (budget 120s)", rep.entries.size(),
               worst, dt));
  }

  // 6. Analysis/synthesis transform: 201 bins, better than 100 dB round trip.
  {
    dsp::StftConfig scfg;
    Rng rng(2026);
    std::vector<double> x(16000);
    for (auto& v : x) v = rng.normal();
    auto spec = dsp::stft(from_data(Shape{16000}, x), scfg);
    auto y = dsp::istft(spec, scfg);
    double ps = 0.0, pe = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      ps += x[i] * x[i];
      double d = x[i] - y->data[i];
      pe += d * d;
    }
    const double snr = pe == 0.0 ? 1e9 : 10.0 * std::log10(ps / pe);
    report(6, "stft fidelity", scfg.bins() == 201 && snr >= 100.0,
           fmt("F=%lld, round trip %.1f dB (>=100)", (long long)scfg.bins(), snr));
  }

  // 7. Random phase scores ~90 degrees on a 1e5-cell grid, and Griffin-Lim
  //    beats the zero-phase baseline on a harmonic tone.
  {
    Rng rng(99);
    const int64_t t = 400, f = 250;  // 1e5 weighted cells
    auto pred = zeros(Shape{t, f});
    auto ref = zeros(Shape{t, f});
    auto w = zeros(Shape{t, f});
    for (int64_t i = 0; i < t * f; ++i) {
      pred->data[(size_t)i] = rng.uniform(-kPi, kPi);
      ref->data[(size_t)i] = rng.uniform(-kPi, kPi);
      w->data[(size_t)i] = rng.uniform(0.1, 2.0);
    }
    const double pd = loss::pd_metric(pred, ref, w);

    auto wave = harmonic_tone(4000);
    dsp::StftConfig scfg;
    auto padded = dsp::pad_to_hop(wave, scfg);
    auto spec = dsp::stft(from_data(Shape{(int64_t)padded.size()}, padded), scfg);
    auto mag = ops::cmodulus(spec);
    auto angles = ops::atan2_op(spec.im, spec.re);
    const double zero_pd = loss::pd_metric(zeros(mag->shape), angles, mag);
    auto gl = dsp::griffin_lim(mag, scfg, 32);
    const double gl_pd = loss::pd_metric(ops::atan2_op(gl.im, gl.re), angles, mag);
    report(7, "phase distance anchor",
           pd >= 88.0 && pd <= 92.0 && gl_pd < zero_pd,
           fmt("random-phase PD %.2f deg in [88,92]; GL32 %.2f < zero-phase %.2f", pd, gl_pd,
               zero_pd));
  }

  // 8. Gradient descent halves the omni objective on one tone and improves
  //    the phase distance over the zero-phase initialization.
  {
    hn::RunConfig cfg;
    cfg.model = "skinny";
    t0 = now_s();
    auto rep = hn::run_phase_retrieval(cfg, harmonic_tone(4000));
    double dt = now_s() - t0;
    const bool halved = rep.final_omni <= 0.5 * rep.initial_omni;
    const bool pd_down = rep.final_pd_deg < rep.initial_pd_deg;
    report(8, "desk-scale phase retrieval", halved && pd_down && dt < 600.0,
           fmt("omni %.3f->%.3f in %d steps, pd %.1f->%.1f, %.0fs (budget 600s)",
               rep.initial_omni, rep.final_omni, rep.steps_run, rep.initial_pd_deg,
               rep.final_pd_deg, dt));
  }

  // 9. Parameter budget around the published 1.55 M, small strictly below.
  {
    Rng ra(0), rb(0);
    auto std_net = make_network(ra, ModelConfig::standard_preset());
    auto small_net = make_network(rb, ModelConfig{});
    const int64_t ns = std_net.param_count(), nm = small_net.param_count();
    const bool in_band = ns >= (int64_t)(0.75 * 1.55e6) && ns <= (int64_t)(1.25 * 1.55e6);
    report(9, "parameter count", in_band && nm < ns,
           fmt("standard %lld in [1.1625e6, 1.9375e6], small %lld < standard", (long long)ns,
               (long long)nm));
  }

  // 10. Byte-identical reports for every command family under a fixed seed.
  {
    auto fast = hn::RunConfig{};
    fast.model = "skinny";
    fast.frames = 4;
    bool same = hn::to_json(hn::run_equivcheck(fast)) == hn::to_json(hn::run_equivcheck(fast));

    hn::RunConfig gr;
    same = same && hn::to_json(hn::run_gradcheck(gr)) == hn::to_json(hn::run_gradcheck(gr));

    hn::RunConfig pr;
    pr.model = "skinny";
    pr.steps = 2;
    auto wave = harmonic_tone(2400);
    same = same && hn::to_json(hn::run_phase_retrieval(pr, wave)) ==
                       hn::to_json(hn::run_phase_retrieval(pr, wave));

    auto dir = fs::temp_directory_path() / "phasor_acceptance";
    fs::create_directories(dir);
    dsp::write_wav((dir / "ref.wav").string(), harmonic_tone(3200), 16000);
    {
      std::ofstream m(dir / "manifest.csv");
      m << "clean_path,degraded_path\n";
      m << (dir / "ref.wav").string() << "," << (dir / "ref.wav").string() << "\n";
    }
    Rng nr(5);
    auto net = make_network(nr, hn::named_model("skinny"));
    same = same && hn::to_json(hn::run_eval((dir / "manifest.csv").string(), net,
                                            dsp::StftConfig{})) ==
                       hn::to_json(hn::run_eval((dir / "manifest.csv").string(), net,
                                                dsp::StftConfig{}));

    report(10, "deterministic reports", same,
           "equivcheck/gradcheck/phase-retrieval/eval byte-identical across reruns");
  }

  if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
