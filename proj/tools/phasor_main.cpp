// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Every verb is deterministic given its flags, and
// the process exits 0 only when the checks that verb asserts all hold.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "phasor/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace phasor;
using namespace phasor::nn;
namespace hn = phasor::harness;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValueError("cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Model resolution order: explicit checkpoint, else JSON config file, else a
// named preset.
ModelConfig resolve_config(const std::string& config_path, const std::string& model) {
  if (!config_path.empty()) return ModelConfig::from_json(read_file(config_path));
  return hn::named_model(model);
}

Network resolve_network(const std::string& params_path, const std::string& config_path,
                        const std::string& model, uint64_t seed) {
  if (!params_path.empty()) return load_network(params_path);
  Rng rng(seed);
  return make_network(rng, resolve_config(config_path, model));
}

std::vector<double> load_wave(const std::string& path) {
  auto wav = dsp::read_wav(path);
  return wav.samples;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phasor: rotation-equivariant magnitude/phase speech enhancement toolkit"};
  app.require_subcommand(1);

  uint64_t seed = 42;
  std::string model = "small";
  std::string config_path, params_path, break_mode = "none";
  std::string out_dir = ".";
  std::string wav_path, manifest_path, spec_path, clean_dir;
  int64_t frames = 16, block = 0;
  int steps = 500;
  double lr = 1e-3;

  auto* eq = app.add_subcommand("equivcheck", "rotation-equivariance property suite");
  eq->add_option("--seed", seed, "rng seed");
  eq->add_option("--model", model, "small | standard | skinny");
  eq->add_option("--break-mode", break_mode, "none | mpicm | attn | ffn");
  eq->add_option("--frames", frames, "time frames for the network units");
  eq->add_option("--out", out_dir, "report directory");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  gc->add_option("--seed", seed, "rng seed");
  gc->add_option("--out", out_dir, "report directory");

  auto* pr = app.add_subcommand("phase-retrieval",
                                "overfit phase prediction of one utterance from its magnitude");
  pr->add_option("--wav", wav_path, "clean utterance, <= 2 s")->required();
  pr->add_option("--seed", seed, "rng seed");
  pr->add_option("--model", model, "small | standard | skinny");
  pr->add_option("--steps", steps, "gradient descent budget");
  pr->add_option("--lr", lr, "step size");
  pr->add_option("--out", out_dir, "report directory");

  auto* ev = app.add_subcommand("eval", "enhance and score WAV pairs from a manifest");
  ev->add_option("--manifest", manifest_path, "CSV with clean_path,degraded_path columns")
      ->required();
  ev->add_option("--params", params_path, "checkpoint; fresh weights when absent");
  ev->add_option("--config", config_path, "model config JSON (ignored with --params)");
  ev->add_option("--model", model, "named preset (ignored with --params/--config)");
  ev->add_option("--seed", seed, "rng seed for fresh weights");
  ev->add_option("--out", out_dir, "report directory");

  auto* ad = app.add_subcommand("attn-dump",
                                "export one frequency-attention map with its logit split");
  ad->add_option("--wav", wav_path, "input utterance")->required();
  ad->add_option("--params", params_path, "checkpoint; fresh weights when absent");
  ad->add_option("--config", config_path, "model config JSON (ignored with --params)");
  ad->add_option("--model", model, "named preset (ignored with --params/--config)");
  ad->add_option("--seed", seed, "rng seed for fresh weights");
  ad->add_option("--block", block, "dual-path block index");
  ad->add_option("--out", out_dir, "report directory");

  auto* dg = app.add_subcommand("degrade", "synthesize degraded copies of a folder of WAVs");
  dg->add_option("--spec", spec_path, "degradation spec JSON")->required();
  dg->add_option("--clean-dir", clean_dir, "folder of clean WAVs")->required();
  dg->add_option("--out-dir", out_dir, "destination for degraded WAVs and manifest.csv");
  dg->add_option("--seed", seed, "rng seed");

  auto* pc = app.add_subcommand("param-count", "print the trainable parameter count");
  pc->add_option("--config", config_path, "model config JSON");
  pc->add_option("--model", model, "named preset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eq->parsed()) {
      hn::RunConfig cfg;
      cfg.seed = seed;
      cfg.model = model;
      cfg.break_mode = break_mode;
      cfg.frames = frames;
      auto rep = hn::run_equivcheck(cfg);
      write_file(fs::path(out_dir) / "equivcheck.json", hn::to_json(rep));
      std::printf("equivcheck break_mode=%s: %s\n", cfg.break_mode.c_str(),
                  rep.suite_pass ? "pass" : "FAIL");
      return rep.suite_pass ? 0 : 1;
    }

    if (gc->parsed()) {
      hn::RunConfig cfg;
      cfg.seed = seed;
      auto rep = hn::run_gradcheck(cfg);
      write_file(fs::path(out_dir) / "gradcheck.json", hn::to_json(rep));
      std::printf("gradcheck: %s\n", rep.suite_pass ? "pass" : "FAIL");
      return rep.suite_pass ? 0 : 1;
    }

    if (pr->parsed()) {
      hn::RunConfig cfg;
      cfg.seed = seed;
      cfg.model = model;
      cfg.steps = steps;
      cfg.lr = lr;
      auto rep = hn::run_phase_retrieval(cfg, load_wave(wav_path));
      write_file(fs::path(out_dir) / "phase_retrieval.json", hn::to_json(rep));
      write_file(fs::path(out_dir) / "loss_curve.csv", hn::loss_curve_csv(rep.loss_curve));
      const bool halved = rep.final_omni <= 0.5 * rep.initial_omni;
      const bool pd_down = rep.final_pd_deg < rep.initial_pd_deg;
      std::printf("phase-retrieval: omni %.4f -> %.4f, pd %.2f -> %.2f (gl %.2f), %d steps: %s\n",
                  rep.initial_omni, rep.final_omni, rep.initial_pd_deg, rep.final_pd_deg,
                  rep.gl_pd_deg, rep.steps_run, halved && pd_down ? "pass" : "FAIL");
      return halved && pd_down ? 0 : 1;
    }

    if (ev->parsed()) {
      auto net = resolve_network(params_path, config_path, model, seed);
      dsp::StftConfig scfg;
      auto rep = hn::run_eval(manifest_path, net, scfg);
      write_file(fs::path(out_dir) / "eval.json", hn::to_json(rep));
      std::printf("eval: %lld/%zu rows ok\n", (long long)rep.n_ok, rep.rows.size());
      return 0;
    }

    if (ad->parsed()) {
      auto net = resolve_network(params_path, config_path, model, seed);
      auto wave = load_wave(wav_path);
      dsp::StftConfig scfg;
      auto padded = dsp::pad_to_hop(wave, scfg);
      auto x = zeros(Shape{(int64_t)padded.size()});
      std::copy(padded.begin(), padded.end(), x->data.begin());
      auto feats = featurize(dsp::stft(x, scfg), net.cfg.alpha);
      AttentionExport exp;
      AttnProbe probe{&exp, block, /*freq_axis=*/true};
      forward(net, feats, probe);
      write_file(fs::path(out_dir) / "attention.csv", hn::attention_csv(exp));
      // the checks this verb asserts: rows are a distribution, and the two
      // logit components explain the fused scores.
      double worst_row = 0.0, worst_rec = 0.0;
      for (int64_t h = 0; h < exp.heads; ++h)
        for (int64_t r = 0; r < exp.len; ++r) {
          double row_sum = 0.0, denom = 0.0;
          for (int64_t c = 0; c < exp.len; ++c) {
            row_sum += exp.at(exp.score, h, r, c);
            denom += std::exp(exp.at(exp.mag_part, h, r, c) + exp.at(exp.pha_part, h, r, c));
          }
          worst_row = std::max(worst_row, std::abs(row_sum - 1.0));
          for (int64_t c = 0; c < exp.len; ++c) {
            double rec =
                std::exp(exp.at(exp.mag_part, h, r, c) + exp.at(exp.pha_part, h, r, c)) / denom;
            worst_rec = std::max(worst_rec, std::abs(rec - exp.at(exp.score, h, r, c)));
          }
        }
      const bool ok = worst_row <= 1e-9 && worst_rec <= 1e-12;
      std::printf("attn-dump block=%lld: row-sum err %.3e, reconstruction err %.3e: %s\n",
                  (long long)block, worst_row, worst_rec, ok ? "pass" : "FAIL");
      return ok ? 0 : 1;
    }

    if (dg->parsed()) {
      auto spec_json = ordered_json::parse(read_file(spec_path));
      dsp::DegradeSpec spec;
      spec.kind = spec_json.value("kind", "DN");
      spec.snr_db = spec_json.value("snr_db", 0.0);
      spec.cutoff_hz = spec_json.value("cutoff_hz", 4000.0);
      const double t60 = spec_json.value("t60_s", 0.3);
      const double rir_len = spec_json.value("rir_len_s", 0.2);

      std::vector<fs::path> inputs;
      for (const auto& entry : fs::directory_iterator(clean_dir))
        if (entry.path().extension() == ".wav") inputs.push_back(entry.path());
      std::sort(inputs.begin(), inputs.end());

      Rng rng(seed);
      fs::create_directories(out_dir);
      std::string manifest = "clean_path,degraded_path,kind,snr_db,cutoff_hz\n";
      for (const auto& in : inputs) {
        auto wav = dsp::read_wav(in.string());
        auto per_file = spec;
        if (per_file.rir.empty() && per_file.kind.find("DR") != std::string::npos)
          per_file.rir = dsp::make_rir(rng, wav.sample_rate, t60, rir_len);
        auto noisy = dsp::degrade(wav.samples, per_file, rng);
        auto out_path = fs::path(out_dir) / (in.stem().string() + "_degraded.wav");
        dsp::write_wav(out_path.string(), noisy, wav.sample_rate);
        char tail[64];
        std::snprintf(tail, sizeof tail, ",%s,%.17g,%.17g\n", spec.kind.c_str(), spec.snr_db,
                      spec.cutoff_hz);
        manifest += in.string() + "," + out_path.string() + tail;
      }
      write_file(fs::path(out_dir) / "manifest.csv", manifest);
      std::printf("degrade: %zu files -> %s\n", inputs.size(),
                  (fs::path(out_dir) / "manifest.csv").c_str());
      return 0;
    }

    if (pc->parsed()) {
      auto cfg = resolve_config(config_path, model);
      Rng rng(seed);
      auto net = make_network(rng, cfg);
      ordered_json j;
      j["model"] = config_path.empty() ? model : config_path;
      j["params"] = net.param_count();
      std::printf("%s\n", j.dump().c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
