// Copyright 2026 the phasor authors
// SPDX-License-Identifier: Apache-2.0
//
// Report serialization. No timestamps, no environment probes: identical
// inputs must yield byte-identical output.

#include <cstdio>
#include <string>

#include "json.hpp"
#include "phasor/harness.hpp"

namespace phasor::harness {

using nlohmann::ordered_json;

std::string to_json(const EquivarianceReport& r) {
  ordered_json j;
  j["break_mode"] = r.break_mode;
  j["suite_pass"] = r.suite_pass;
  j["entries"] = ordered_json::array();
  for (const auto& e : r.entries) {
    ordered_json row;
    row["unit"] = e.unit;
    row["theta"] = e.theta;
    row["rel_error"] = e.rel_error;
    row["threshold"] = e.threshold;
    row["pass"] = e.pass;
    row["expected_fail"] = e.expected_fail;
    j["entries"].push_back(row);
  }
  j["verdicts"] = ordered_json::array();
  for (const auto& v : r.verdicts) {
    ordered_json row;
    row["unit"] = v.unit;
    row["worst"] = v.worst;
    row["expected_fail"] = v.expected_fail;
    row["ok"] = v.ok;
    j["verdicts"].push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string to_json(const GradCheckReport& r) {
  ordered_json j;
  j["suite_pass"] = r.suite_pass;
  j["entries"] = ordered_json::array();
  for (const auto& e : r.entries) {
    ordered_json row;
    row["name"] = e.name;
    row["max_rel_err"] = e.max_rel_err;
    row["tolerance"] = e.tolerance;
    row["pass"] = e.pass;
    j["entries"].push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string to_json(const PhaseRetrievalReport& r) {
  ordered_json j;
  j["initial_omni"] = r.initial_omni;
  j["final_omni"] = r.final_omni;
  j["initial_pd_deg"] = r.initial_pd_deg;
  j["final_pd_deg"] = r.final_pd_deg;
  j["initial_wopd"] = r.initial_wopd;
  j["final_wopd"] = r.final_wopd;
  j["gl_pd_deg"] = r.gl_pd_deg;
  j["steps_run"] = r.steps_run;
  return j.dump(2) + "\n";
}

std::string to_json(const EvalReport& r) {
  ordered_json j;
  j["rows"] = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json e;
    e["clean"] = row.clean;
    e["degraded"] = row.degraded;
    e["ok"] = row.ok;
    if (row.ok) {
      e["si_sdr_db"] = row.si_sdr_db;
      e["pd_deg"] = row.pd_deg;
      e["wopd"] = row.wopd;
      e["si_sdr_enh_db"] = row.si_sdr_enh_db;
    } else {
      e["error"] = row.error;
    }
    j["rows"].push_back(e);
  }
  ordered_json agg;
  agg["n_ok"] = r.n_ok;
  agg["si_sdr_db"] = r.mean_si_sdr_db;
  agg["pd_deg"] = r.mean_pd_deg;
  agg["wopd"] = r.mean_wopd;
  j["aggregate"] = agg;
  return j.dump(2) + "\n";
}

namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string loss_curve_csv(const std::vector<double>& curve) {
  std::string out = "step,l_omni\n";
  for (size_t i = 0; i < curve.size(); ++i)
    out += std::to_string(i) + "," + fmt_g(curve[i]) + "\n";
  return out;
}

std::string attention_csv(const nn::AttentionExport& e) {
  std::string out = "head,row,col,score,mag_component,pha_component\n";
  for (int64_t h = 0; h < e.heads; ++h)
    for (int64_t r = 0; r < e.len; ++r)
      for (int64_t c = 0; c < e.len; ++c) {
        out += std::to_string(h) + "," + std::to_string(r) + "," + std::to_string(c) + "," +
               fmt_g(e.at(e.score, h, r, c)) + "," + fmt_g(e.at(e.mag_part, h, r, c)) + "," +
               fmt_g(e.at(e.pha_part, h, r, c)) + "\n";
      }
  return out;
}

}  // namespace phasor::harness
