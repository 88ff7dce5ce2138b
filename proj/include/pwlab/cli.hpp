#pragma once
// Pipeline drivers behind the command line: resolve a scenario, run one
// pipeline, emit reports.
//
// Output contract:
//   - identical config, identical bytes: fixed grids, fixed seeds, sorted
//     JSON keys, no timestamps
//   - every top-level data key of a report appears in exactly one provenance
//     stage's `emits` list, and every CSV is named in the `files` map with
//     its producing stage, so each emitted number traces to a stage
//   - verification output is sampled evidence at a stated tolerance and says
//     so; nothing is labeled a proof

#include "pwlab/deviation.hpp"
#include "pwlab/flow.hpp"
#include "pwlab/ppwave.hpp"
#include "pwlab/rosen.hpp"
#include "pwlab/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace pwlab {

using json = nlohmann::json;

struct RunArtifacts {
  json report;
  std::string report_path;
  std::vector<std::string> files;  // everything written, report included
};

namespace detail {

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json mat_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json stage_json(const std::string& name, const std::vector<std::string>& emits,
                       const std::string& method) {
  json s;
  s["stage"] = name;
  s["emits"] = emits;
  s["method"] = method;
  return s;
}

inline json provenance_json(std::vector<json> stages) {
  json p;
  p["policy"] = "every top-level key outside {schema, scenario, provenance} is produced by "
                "exactly one stage below; csv files trace through the files map";
  p["inputs"] = json::array({"scenario"});
  p["stages"] = std::move(stages);
  return p;
}

inline json scenario_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["summary"] = s.summary;
  j["metric"] = {{"id", s.metric.id()}, {"dim", s.metric.dim()}};
  j["geodesic"] = {{"point", vec_json(s.x0)},
                   {"velocity", vec_json(s.v0)},
                   {"t0", s.t0},
                   {"span", json::array({s.a, s.b})}};
  j["conjugate_span"] = json::array({s.conj_a, s.conj_b});
  j["tolerance"] = s.tol;
  j["traits"] = s.traits;
  return j;
}

// Header t, A_11..A_rr; then one `epsilon` row carrying the frame signs on
// the diagonal columns; then one row per knot at full precision.
inline std::string profile_csv(const WaveProfile& p) {
  std::string out;
  out.reserve((p.ts.size() + 2) * (static_cast<std::size_t>(p.r) * p.r + 1) * 26);
  out += "t";
  for (int i = 0; i < p.r; ++i)
    for (int j = 0; j < p.r; ++j)
      out += ",A_" + std::to_string(i + 1) + std::to_string(j + 1);
  out += "\nepsilon";
  for (int i = 0; i < p.r; ++i)
    for (int j = 0; j < p.r; ++j) out += i == j ? "," + format_full(p.eps[i]) : ",0";
  out += "\n";
  for (std::size_t k = 0; k < p.ts.size(); ++k) {
    out += format_full(p.ts[k]);
    const Mat& A = p.samples[k];
    for (int i = 0; i < p.r; ++i)
      for (int j = 0; j < p.r; ++j) out += "," + format_full(A(i, j));
    out += "\n";
  }
  return out;
}

// Shape operator and wave profile side by side on the shared grid.
inline std::string paired_profile_csv(const WaveProfile& shape, const WaveProfile& wave) {
  const int r = shape.r;
  std::string out = "t";
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      out += ",AZ_" + std::to_string(i + 1) + std::to_string(j + 1);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      out += ",A_" + std::to_string(i + 1) + std::to_string(j + 1);
  out += "\nepsilon";
  for (int pass = 0; pass < 2; ++pass)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) out += i == j ? "," + format_full(shape.eps[i]) : ",0";
  out += "\n";
  for (std::size_t k = 0; k < shape.ts.size(); ++k) {
    out += format_full(shape.ts[k]);
    for (const WaveProfile* p : {&shape, &wave}) {
      const Mat& A = p->samples[k];
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) out += "," + format_full(A(i, j));
    }
    out += "\n";
  }
  return out;
}

inline std::string out_path(const Scenario& s, const std::string& fname) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(s.out_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory " + s.out_dir + ": " + ec.message());
  return (fs::path(s.out_dir) / fname).string();
}

inline void emit_report(RunArtifacts& art, const Scenario& s, const std::string& fname) {
  art.report_path = out_path(s, fname);
  write_text_file(art.report_path, art.report.dump(2) + "\n");
  art.files.push_back(art.report_path);
}

}  // namespace detail

// True when every top-level key outside {schema, scenario, provenance} is
// listed by exactly one provenance stage.
inline bool provenance_covers(const json& report) {
  if (!report.contains("provenance") || !report["provenance"].contains("stages")) return false;
  std::map<std::string, int> counts;
  for (const json& st : report["provenance"]["stages"])
    for (const json& k : st["emits"]) counts[k.get<std::string>()] += 1;
  for (auto it = report.begin(); it != report.end(); ++it) {
    const std::string& key = it.key();
    if (key == "schema" || key == "scenario" || key == "provenance") continue;
    if (counts[key] != 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// limit: profile CSV plus assembled-metric report

inline RunArtifacts run_limit(const Scenario& s) {
  RunArtifacts art;
  const LimitResult lr = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0);

  const std::string csv_path = detail::out_path(s, "profile.csv");
  write_text_file(csv_path, detail::profile_csv(lr.profile));
  art.files.push_back(csv_path);

  json j;
  j["schema"] = "pwlab/limit-v1";
  j["scenario"] = detail::scenario_json(s);
  j["geodesic"] = {{"causal_character", to_string(lr.geodesic.character)},
                   {"g_vv", lr.geodesic.g_vv},
                   {"energy_drift", lr.geodesic.energy_drift},
                   {"span", json::array({s.a, s.b})}};
  j["frame"] = {{"rank", lr.profile.r},
                {"epsilon", lr.profile.eps},
                {"gram_drift", lr.transported.gram_drift}};
  j["profile"] = {{"knots", lr.profile.ts.size()},
                  {"step", lr.profile.dt},
                  {"trace_residual", lr.profile.trace_residual},
                  {"table", "profile.csv"}};
  j["limit_metric"] = {
      {"id", lr.limit_metric.id()},
      {"dim", lr.limit_metric.dim()},
      {"coordinates", "x1 wave-affine, x2 parameter, x3.. transverse"},
      {"form", "2 dx1 dx2 + (sum_ij A_ij(x2) x^(i+2) x^(j+2)) dx2^2 + sum_i (dx^(i+2))^2"},
      {"signature_index", 1},
      {"profile_table", "profile.csv"}};
  j["files"] = {{"profile.csv", "profile-extraction"}, {"limit.json", "report-emission"}};
  j["provenance"] = detail::provenance_json(
      {detail::stage_json("geodesic-integration", {"geodesic"},
                          "adaptive runge-kutta with dense output"),
       detail::stage_json("frame-transport", {"frame"},
                          "parallel transport of the initial normal frame"),
       detail::stage_json("profile-extraction", {"profile"},
                          "curvature slots contracted against the frame on a fixed grid"),
       detail::stage_json("wave-assembly", {"limit_metric"},
                          "quadratic-form wave metric built from the tabulated profile"),
       detail::stage_json("report-emission", {"files"}, "fixed-precision serialization")});
  art.report = j;
  detail::emit_report(art, s, "limit.json");
  return art;
}

// ---------------------------------------------------------------------------
// classify: curvature flags of the limit wave

inline RunArtifacts run_classify(const Scenario& s) {
  RunArtifacts art;
  const LimitResult lr = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0);
  const PpClassification c = classify_profile(lr.profile, s.tol);

  json flags;
  const auto put = [&flags](const char* name, const FlagResult& f) {
    json e = {{"applicable", f.applicable},
              {"value", f.value},
              {"residual", f.residual},
              {"tolerance", f.tolerance}};
    if (!f.note.empty()) e["note"] = f.note;
    flags[name] = e;
  };
  put("flat", c.flat);
  put("conformally_flat", c.conformally_flat);
  put("ricci_flat", c.ricci_flat);
  put("scalar_flat", c.scalar_flat);
  put("locally_symmetric", c.locally_symmetric);
  put("harmonic_curvature", c.harmonic_curvature);
  put("parallel_ricci", c.parallel_ricci);

  json j;
  j["schema"] = "pwlab/classify-v1";
  j["scenario"] = detail::scenario_json(s);
  j["profile"] = {{"knots", lr.profile.ts.size()},
                  {"rank", lr.profile.r},
                  {"epsilon", lr.profile.eps},
                  {"trace_residual", lr.profile.trace_residual}};
  j["flags"] = flags;
  j["files"] = {{"classify.json", "report-emission"}};
  j["provenance"] = detail::provenance_json(
      {detail::stage_json("wave-pipeline", {"profile"},
                          "geodesic integration, frame transport, profile extraction"),
       detail::stage_json("classification", {"flags"},
                          "matrix conditions sampled over the tabulated profile"),
       detail::stage_json("report-emission", {"files"}, "fixed-precision serialization")});
  art.report = j;
  detail::emit_report(art, s, "classify.json");
  return art;
}

// ---------------------------------------------------------------------------
// conjugate: rank-drop report plus a smallest-singular-value trace

inline RunArtifacts run_conjugate(const Scenario& s) {
  RunArtifacts art;
  const LimitResult lr = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0);
  const ConjugateReport rep = conjugate_points(lr.profile, s.conj_a, s.conj_b);
  const MorseCheck mc = morse_bound(rep);

  const JacobiSystem base_sys(lr.profile, JacobiSide::base);
  const JacobiSystem limit_sys(lr.profile, JacobiSide::limit);
  const FundamentalSolution fb = fundamental_matrix(base_sys, s.conj_a, s.conj_b);
  const FundamentalSolution fl = fundamental_matrix(limit_sys, s.conj_a, s.conj_b);
  const int N = detail::conjugate_grid_size(s.conj_b - s.conj_a);
  std::string csv = "t,sigma_min_base,sigma_min_limit\n";
  csv.reserve(static_cast<std::size_t>(N) * 66);
  for (int k = 0; k < N; ++k) {
    const double t = s.conj_a + (s.conj_b - s.conj_a) * k / (N - 1);
    const double sb = Eigen::JacobiSVD<Mat>(fb.phi(t)).singularValues().minCoeff();
    const double sl = Eigen::JacobiSVD<Mat>(fl.phi(t)).singularValues().minCoeff();
    csv += format_full(t) + "," + format_full(sb) + "," + format_full(sl) + "\n";
  }
  const std::string csv_path = detail::out_path(s, "sigma.csv");
  write_text_file(csv_path, csv);
  art.files.push_back(csv_path);

  const auto points_json = [](const std::vector<ConjugatePoint>& pts) {
    json a = json::array();
    for (const ConjugatePoint& cp : pts)
      a.push_back({{"t", cp.t}, {"multiplicity", cp.multiplicity}, {"sigma", cp.sigma}});
    return a;
  };

  json j;
  j["schema"] = "pwlab/conjugate-v1";
  j["scenario"] = detail::scenario_json(s);
  j["window"] = json::array({s.conj_a, s.conj_b});
  j["points"] = points_json(rep.points);
  j["total"] = rep.total;
  j["limit_points"] = points_json(rep.limit_points);
  j["limit_total"] = rep.limit_total;
  j["index_bound"] = rep.index_bound;
  j["morse"] = {{"base_count", mc.base_count},
                {"limit_index", mc.limit_index},
                {"bound", mc.bound},
                {"satisfied", mc.satisfied}};
  j["residuals"] = {{"independence", rep.independence_residual},
                    {"wronskian_drift", rep.wronskian_drift},
                    {"sigma_scale", rep.sigma_scale},
                    {"trace", lr.profile.trace_residual}};
  j["files"] = {{"sigma.csv", "fundamental-integration"},
                {"conjugate.json", "report-emission"}};
  j["provenance"] = detail::provenance_json(
      {detail::stage_json("conjugate-search",
                          {"window", "points", "total", "limit_points", "limit_total",
                           "index_bound"},
                          "singular values of the fundamental blocks, grid scan plus "
                          "bisection refinement"),
       detail::stage_json("morse-aggregation", {"morse"},
                          "source-side count against twice the wave-side count"),
       detail::stage_json("fundamental-integration", {"residuals"},
                          "pairwise-product drift and independence slots of the reduced "
                          "systems"),
       detail::stage_json("report-emission", {"files"}, "fixed-precision serialization")});
  art.report = j;
  detail::emit_report(art, s, "conjugate.json");
  return art;
}

// ---------------------------------------------------------------------------
// verify: sampled evidence for the structure statements

namespace detail {

struct VerifySample {
  Vec x0, v0;
  bool covered = false;
  double reached = 0.0;
  bool has_profile = false;
  LimitResult lr;
};

inline std::vector<VerifySample> draw_samples(const Scenario& s) {
  std::mt19937_64 rng(s.seed);
  std::vector<VerifySample> out;
  const double va = s.t0, vb = s.t0 + s.verify_span;
  for (int k = 0; k < s.geodesics; ++k) {
    VerifySample vs;
    std::tie(vs.x0, vs.v0) = sample_initial_data(s, rng);
    const GeodesicRecord rec = integrate_geodesic(s.metric, vs.x0, vs.v0, va, vb, va);
    vs.covered = !rec.incomplete;
    vs.reached = vs.covered ? vb - va : rec.escape_time - va;
    if (vs.covered) {
      try {
        vs.lr = limit_of(s.metric, vs.x0, vs.v0, va, vb, va);
        vs.has_profile = true;
      } catch (const NumericalError&) {
        // geodesic covers the window but the wave pipeline did not; the
        // domain item reports this as a mismatch
      }
    }
    out.push_back(std::move(vs));
  }
  return out;
}

inline json skipped_row(std::size_t k, const VerifySample& vs) {
  return {{"draw", k},
          {"skipped", true},
          {"note", "geodesic data ends at parameter distance " + format_full(vs.reached)}};
}

struct ItemSpec {
  std::string id;
  std::string statement;
  std::string trait;  // empty: no declared hypothesis needed
  FlagResult PpClassification::* flag = nullptr;
};

inline const std::vector<ItemSpec>& flag_items() {
  static const std::vector<ItemSpec> items = {
      {"i", "a flat metric forces a vanishing wave profile", "flat",
       &PpClassification::flat},
      {"ii", "constant sectional curvature forces a conformally flat wave limit",
       "constant-curvature", &PpClassification::conformally_flat},
      {"iii", "a ricci-flat metric forces a trace-free wave profile", "ricci-flat",
       &PpClassification::ricci_flat},
      {"iv", "constant tangential ricci curvature forces a parameter-independent profile "
             "trace",
       "einstein", &PpClassification::parallel_ricci},
      {"v", "parallel curvature forces a parameter-independent wave profile",
       "parallel-curvature", &PpClassification::locally_symmetric},
  };
  return items;
}

inline json evaluate_flag_item(const Scenario& s, const std::vector<VerifySample>& samples,
                               const ItemSpec& spec, bool& counted, bool& pass) {
  json row;
  row["item"] = spec.id;
  row["statement"] = spec.statement;
  row["hypothesis_trait"] = spec.trait;
  const bool declared = has_trait(s, spec.trait);
  row["hypothesis_declared"] = declared;
  if (!declared) {
    row["note"] = "scenario does not declare the hypothesis; forward direction not exercised";
    counted = false;
    pass = true;
    return row;
  }
  json rows = json::array();
  double max_res = 0.0;
  int used = 0;
  bool all = true, applicable = true;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const VerifySample& vs = samples[k];
    if (!vs.has_profile) {
      rows.push_back(skipped_row(k, vs));
      continue;
    }
    ++used;
    const PpClassification c = classify_profile(vs.lr.profile, s.tol);
    const FlagResult& f = c.*(spec.flag);
    if (!f.applicable) {
      if (spec.id == "ii" && vs.lr.profile.r < 2) {
        // one transverse direction: no off-diagonal or spread constraints
        // remain, so the conformal-flatness criterion holds vacuously
        row["note"] = "single transverse direction; the criterion is vacuous and counts "
                      "as satisfied";
        rows.push_back({{"draw", k},
                        {"point", vec_json(vs.x0)},
                        {"velocity", vec_json(vs.v0)},
                        {"residual", 0.0},
                        {"tolerance", f.tolerance},
                        {"pass", true}});
        continue;
      }
      applicable = false;
      row["note"] = f.note;
      break;
    }
    rows.push_back({{"draw", k},
                    {"point", vec_json(vs.x0)},
                    {"velocity", vec_json(vs.v0)},
                    {"residual", f.residual},
                    {"tolerance", f.tolerance},
                    {"pass", f.value}});
    max_res = std::max(max_res, f.residual);
    all = all && f.value;
  }
  if (used == 0) {
    applicable = false;
    row["note"] = "no sampled geodesic produced wave data over the window";
  }
  row["applicable"] = applicable;
  if (!applicable) {
    counted = false;
    pass = true;
    return row;
  }
  row["geodesics"] = rows;
  row["used"] = used;
  row["max_residual"] = max_res;
  row["pass"] = all;
  counted = true;
  pass = all;
  return row;
}

inline json evaluate_trace_item(const Scenario& s, const std::vector<VerifySample>& samples,
                                bool& counted, bool& pass) {
  json row;
  row["item"] = "vi";
  row["statement"] = "the profile trace balances the tangential ricci curvature, knot by knot";
  row["hypothesis_declared"] = true;  // identity; nothing to declare
  json rows = json::array();
  double max_res = 0.0;
  int used = 0;
  bool all = true;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const VerifySample& vs = samples[k];
    if (!vs.has_profile) {
      rows.push_back(skipped_row(k, vs));
      continue;
    }
    ++used;
    const WaveProfile& p = vs.lr.profile;
    double scale = 1.0;
    for (const Mat& A : p.samples) scale = std::max(scale, std::abs(A.trace()));
    const double tolerance = s.tol * scale;
    // sign agreement of -tr A against the tangential ricci contraction
    int mismatches = 0;
    for (int q = 0; q <= 16; ++q) {
      const double t = p.t0 + (p.t1 - p.t0) * q / 16.0;
      const Vec x = vs.lr.geodesic.position(t);
      const Vec v = vs.lr.geodesic.velocity(t);
      const double ric = ricci_contract(curvature_at(s.metric, x), v, v);
      const double neg_tr = -p.at(t).trace();
      const double cut = s.tol * std::max({1.0, std::abs(ric), std::abs(neg_tr)});
      const int sr = ric > cut ? 1 : (ric < -cut ? -1 : 0);
      const int st = neg_tr > cut ? 1 : (neg_tr < -cut ? -1 : 0);
      if (sr != st) ++mismatches;
    }
    const bool ok = p.trace_residual <= tolerance && mismatches == 0;
    rows.push_back({{"draw", k},
                    {"point", vec_json(vs.x0)},
                    {"velocity", vec_json(vs.v0)},
                    {"residual", p.trace_residual},
                    {"tolerance", tolerance},
                    {"sign_mismatches", mismatches},
                    {"pass", ok}});
    max_res = std::max(max_res, p.trace_residual);
    all = all && ok;
  }
  if (used == 0) {
    row["applicable"] = false;
    row["note"] = "no sampled geodesic produced wave data over the window";
    counted = false;
    pass = true;
    return row;
  }
  row["applicable"] = true;
  row["geodesics"] = rows;
  row["used"] = used;
  row["max_residual"] = max_res;
  row["pass"] = all;
  counted = true;
  pass = all;
  return row;
}

// Domain check: the wave profile must be tabulated over the window exactly
// when the source geodesic covers it.  A geodesic that stops early is data
// (the wave data stops with it), not a failure; a geodesic that covers the
// window while the wave pipeline does not is a genuine mismatch.  Nothing
// here decides completeness beyond the sampled window.
inline json evaluate_domain_item(const Scenario& s, const std::vector<VerifySample>& samples,
                                 bool& counted, bool& pass) {
  json row;
  row["item"] = "vii";
  row["statement"] = "wave data extends exactly as far as the source geodesic does";
  row["note"] = "domain check over the sampled window; completeness beyond it is not "
                "decided numerically";
  const double va = s.t0, vb = s.t0 + s.verify_span;
  json rows = json::array();
  bool all = true;
  double max_res = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const VerifySample& vs = samples[k];
    json r = {{"draw", k},
              {"point", vec_json(vs.x0)},
              {"velocity", vec_json(vs.v0)},
              {"covered", vs.covered},
              {"reached", vs.reached}};
    double residual = 0.0;
    bool ok = true;
    if (!vs.covered) {
      r["note"] = "geodesic stops inside the window; wave data stops with it";
    } else if (!vs.has_profile) {
      ok = false;
      r["note"] = "geodesic covers the window but the wave pipeline stopped early";
    } else {
      residual = std::max(std::abs(vs.lr.profile.t0 - va), std::abs(vs.lr.profile.t1 - vb));
      ok = residual <= 1e-9;
    }
    r["residual"] = residual;
    r["pass"] = ok;
    rows.push_back(std::move(r));
    all = all && ok;
    max_res = std::max(max_res, residual);
  }
  row["applicable"] = true;
  row["geodesics"] = rows;
  row["max_residual"] = max_res;
  row["pass"] = all;
  counted = true;
  pass = all;
  return row;
}

inline json evaluate_focusing_item(const Scenario& s, bool& counted, bool& pass) {
  const LimitResult lr = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0);
  const double T = 0.95 * std::min(s.t0 - s.a, s.b - s.t0);
  if (!(T > 0.0))
    throw ConfigError("focusing evidence needs the geodesic window to extend on both sides "
                      "of t0");
  const FocusingReport fr = focusing_check(lr.profile, T);
  json row;
  row["item"] = "focusing";
  row["statement"] = "nonnegative tangential ricci curvature without conjugate points forces "
                     "vanishing transverse curvature; the run reports which alternative the "
                     "data exhibits";
  row["horizon"] = T;
  row["verdict"] = fr.verdict;
  row["ric_min"] = fr.ric_min;
  row["pair_found"] = fr.pair_found;
  if (fr.pair_found) {
    row["pair"] = json::array({fr.pair_a, fr.pair_b});
    row["multiplicity"] = fr.multiplicity;
  }
  if (!fr.note.empty()) row["note"] = fr.note;
  counted = true;
  pass = fr.verdict != "horizon too small";
  row["pass"] = pass;
  return row;
}

inline json evaluate_morse_item(const Scenario& s, bool& counted, bool& pass) {
  const LimitResult lr = limit_of(s.metric, s.x0, s.v0, s.a, s.b, s.t0);
  const ConjugateReport rep = conjugate_points(lr.profile, s.conj_a, s.conj_b);
  const MorseCheck mc = morse_bound(rep);
  json row;
  row["item"] = "morse";
  row["statement"] = "conjugate multiplicity along the source geodesic is capped by twice "
                     "the wave-side count";
  row["window"] = json::array({s.conj_a, s.conj_b});
  row["base_count"] = mc.base_count;
  row["limit_index"] = mc.limit_index;
  row["bound"] = mc.bound;
  row["pass"] = mc.satisfied;
  counted = true;
  pass = mc.satisfied;
  return row;
}

}  // namespace detail

inline RunArtifacts run_verify(const Scenario& s) {
  static const std::vector<std::string> numbered = {"i", "ii", "iii", "iv", "v", "vi", "vii"};
  std::vector<std::string> requested;
  if (s.verify_item == "all") {
    requested = numbered;
  } else if (std::find(numbered.begin(), numbered.end(), s.verify_item) != numbered.end() ||
             s.verify_item == "focusing" || s.verify_item == "morse") {
    requested = {s.verify_item};
  } else {
    throw ConfigError("verify.item must be one of i..vii, focusing, morse, all");
  }

  bool need_samples = false;
  for (const std::string& it : requested)
    if (it != "focusing" && it != "morse") need_samples = true;

  RunArtifacts art;
  std::vector<detail::VerifySample> samples;
  if (need_samples) samples = detail::draw_samples(s);

  json items = json::array();
  bool overall = true;
  for (const std::string& it : requested) {
    bool counted = false, pass = true;
    if (it == "vi") {
      items.push_back(detail::evaluate_trace_item(s, samples, counted, pass));
    } else if (it == "vii") {
      items.push_back(detail::evaluate_domain_item(s, samples, counted, pass));
    } else if (it == "focusing") {
      items.push_back(detail::evaluate_focusing_item(s, counted, pass));
    } else if (it == "morse") {
      items.push_back(detail::evaluate_morse_item(s, counted, pass));
    } else {
      for (const detail::ItemSpec& spec : detail::flag_items())
        if (spec.id == it)
          items.push_back(detail::evaluate_flag_item(s, samples, spec, counted, pass));
    }
    if (counted) overall = overall && pass;
  }

  json j;
  j["schema"] = "pwlab/verify-v1";
  j["scenario"] = detail::scenario_json(s);
  j["kind"] = "evidence";
  j["note"] = "sampled geodesics at finite tolerance; evidence, not a proof";
  j["samples"] = {{"count", need_samples ? static_cast<int>(samples.size()) : 0},
                  {"seed", s.seed},
                  {"start", s.t0},
                  {"span", s.verify_span}};
  j["items"] = items;
  j["pass"] = overall;
  j["files"] = {{"verify.json", "report-emission"}};
  j["provenance"] = detail::provenance_json(
      {detail::stage_json("geodesic-sampling", {"samples"},
                          "seeded draws around the scenario base point"),
       detail::stage_json("wave-pipeline", {"items"},
                          "geodesic integration, frame transport, profile extraction, and "
                          "per-item matrix conditions"),
       detail::stage_json("report-emission", {"kind", "note", "pass", "files"},
                          "aggregation and fixed-precision serialization")});
  art.report = j;
  detail::emit_report(art, s, "verify.json");
  return art;
}

// ---------------------------------------------------------------------------
// rosen2brinkmann: comoving blocks to profile form

inline RunArtifacts run_rosen2brinkmann(const Scenario& s) {
  if (s.rosen_r < 1)
    throw ConfigError("scenario carries no comoving metric blocks; add a [rosen] table");
  RunArtifacts art;
  const RosenConversion rc = rosen_to_brinkmann(s.rosen_g, s.rosen_r, s.rosen_a, s.rosen_b);

  const std::string csv_path = detail::out_path(s, "rosen-profile.csv");
  write_text_file(csv_path, detail::profile_csv(rc.profile));
  art.files.push_back(csv_path);

  json j;
  j["schema"] = "pwlab/rosen-v1";
  j["scenario"] = detail::scenario_json(s);
  j["window"] = json::array({s.rosen_a, s.rosen_b});
  j["dim"] = rc.r;
  j["profile"] = {{"knots", rc.profile.ts.size()},
                  {"step", rc.profile.dt},
                  {"table", "rosen-profile.csv"}};
  j["initial_frame"] = detail::mat_json(rc.F0);
  j["monitors"] = {{"symmetry", rc.symmetry_monitor},
                   {"orthonormality_drift", rc.orthonormality_drift}};
  j["files"] = {{"rosen-profile.csv", "frame-ode"}, {"rosen.json", "report-emission"}};
  j["provenance"] = detail::provenance_json(
      {detail::stage_json("frame-ode", {"window", "dim", "profile", "initial_frame"},
                          "second-order linear frame system integrated from the initial "
                          "block factorization"),
       detail::stage_json("consistency-monitors", {"monitors"},
                          "symmetry and orthonormality drift sampled over the window"),
       detail::stage_json("report-emission", {"files"}, "fixed-precision serialization")});
  art.report = j;
  detail::emit_report(art, s, "rosen.json");
  return art;
}

// ---------------------------------------------------------------------------
// flowprofile: congruence shape operator against the wave profile

inline RunArtifacts run_flowprofile(const Scenario& s) {
  if (s.flow_field.empty())
    throw ConfigError("scenario carries no vector field; add a [flow] table");
  RunArtifacts art;
  const NormalFrame fr0 = initial_normal_frame(s.metric, s.x0, s.v0);
  const TransportedFrame tf = transport_frame(s.metric, s.x0, s.v0, fr0, s.a, s.b, s.t0);
  const FlowProfileResult fp = flow_profile(s.metric, s.flow_field, tf);

  const std::string csv_path = detail::out_path(s, "flow.csv");
  write_text_file(csv_path, detail::paired_profile_csv(fp.shape, fp.wave));
  art.files.push_back(csv_path);

  json j;
  j["schema"] = "pwlab/flow-v1";
  j["scenario"] = detail::scenario_json(s);
  j["shape"] = {{"knots", fp.shape.ts.size()},
                {"rank", fp.shape.r},
                {"epsilon", fp.shape.eps},
                {"table", "flow.csv"}};
  j["residuals"] = {{"riccati", fp.riccati_residual},
                    {"alignment", fp.alignment_residual}};
  j["files"] = {{"flow.csv", "congruence-derivative"}, {"flow.json", "report-emission"}};
  j["provenance"] = detail::provenance_json(
      {detail::stage_json("congruence-derivative", {"shape"},
                          "covariant derivative of the field contracted against the "
                          "transported frame"),
       detail::stage_json("comparison", {"residuals"},
                          "wave profile plus shape derivative minus shape squared, sampled "
                          "on interior knots"),
       detail::stage_json("report-emission", {"files"}, "fixed-precision serialization")});
  art.report = j;
  detail::emit_report(art, s, "flow.json");
  return art;
}

// ---------------------------------------------------------------------------
// command-line front end

namespace detail {

struct CliSelection {
  std::string command;
  std::string config_path, scenario_name, out_dir, span;
  double tol = -1.0;
};

inline void apply_cli_overrides(Scenario& s, const CliSelection& sel) {
  if (!sel.out_dir.empty()) s.out_dir = sel.out_dir;
  if (sel.tol >= 0.0) {
    if (!(sel.tol > 0.0 && sel.tol < 1.0)) throw ConfigError("--tol must be in (0, 1)");
    s.tol = sel.tol;
  }
  if (sel.span.empty()) return;
  const std::size_t colon = sel.span.find(':');
  double A = 0.0, B = 0.0;
  if (colon == std::string::npos || !parse_number(sel.span.substr(0, colon), A) ||
      !parse_number(sel.span.substr(colon + 1), B) || !(A < B))
    throw ConfigError("--span must be A:B with A < B");
  if (sel.command == "conjugate") {
    s.conj_a = A;
    s.conj_b = B;
  } else if (sel.command == "rosen2brinkmann") {
    s.rosen_a = A;
    s.rosen_b = B;
  } else {
    s.a = A;
    s.b = B;
    if (s.t0 < A || s.t0 > B) s.t0 = A;
    s.conj_a = std::max(s.conj_a, A);
    s.conj_b = std::min(s.conj_b, B);
    if (!(s.conj_a < s.conj_b)) {
      s.conj_a = A;
      s.conj_b = B;
    }
    s.verify_span = std::min(s.verify_span, B - s.t0);
    if (!(s.verify_span > 0.0)) s.verify_span = B - A;
  }
}

inline std::string yesno(bool b) { return b ? "yes" : "no"; }

inline void print_summary(const std::string& cmd, const json& rep) {
  if (cmd == "limit") {
    const json& p = rep["profile"];
    std::cout << "profile: rank " << rep["frame"]["rank"].get<int>() << ", "
              << p["knots"].get<std::size_t>() << " knots, trace residual "
              << format_full(p["trace_residual"].get<double>()) << "\n";
  } else if (cmd == "classify") {
    for (const auto& [name, f] : rep["flags"].items()) {
      if (!f["applicable"].get<bool>()) {
        std::cout << name << ": not applicable\n";
        continue;
      }
      std::cout << name << ": " << yesno(f["value"].get<bool>()) << " (residual "
                << format_full(f["residual"].get<double>()) << ")\n";
    }
  } else if (cmd == "conjugate") {
    std::cout << "source-side conjugate points (total multiplicity " << rep["total"].get<int>()
              << "):\n";
    for (const json& pt : rep["points"])
      std::cout << "  t = " << format_full(pt["t"].get<double>()) << ", multiplicity "
                << pt["multiplicity"].get<int>() << "\n";
    const json& mc = rep["morse"];
    std::cout << "wave-side total " << rep["limit_total"].get<int>() << "; bound "
              << mc["base_count"].get<int>() << " <= " << mc["bound"].get<int>() << ": "
              << (mc["satisfied"].get<bool>() ? "holds" : "violated") << "\n";
  } else if (cmd == "verify") {
    for (const json& item : rep["items"]) {
      std::cout << "item " << item["item"].get<std::string>() << ": ";
      if (item.contains("applicable") && !item["applicable"].get<bool>()) {
        std::cout << "not applicable\n";
      } else if (!item.value("hypothesis_declared", true)) {
        std::cout << "skipped (hypothesis not declared)\n";
      } else if (item.contains("verdict")) {
        std::cout << item["verdict"].get<std::string>() << "\n";
      } else if (item.contains("max_residual")) {
        std::cout << (item["pass"].get<bool>() ? "pass" : "FAIL") << " (max residual "
                  << format_full(item["max_residual"].get<double>()) << ")\n";
      } else {
        std::cout << (item["pass"].get<bool>() ? "pass" : "FAIL") << "\n";
      }
    }
    std::cout << "evidence " << (rep["pass"].get<bool>() ? "pass" : "FAIL")
              << " (sampled, not a proof)\n";
  } else if (cmd == "rosen2brinkmann") {
    const json& m = rep["monitors"];
    std::cout << "profile: " << rep["profile"]["knots"].get<std::size_t>()
              << " knots; symmetry monitor "
              << format_full(m["symmetry"].get<double>()) << ", orthonormality drift "
              << format_full(m["orthonormality_drift"].get<double>()) << "\n";
  } else if (cmd == "flowprofile") {
    const json& r = rep["residuals"];
    std::cout << "riccati residual " << format_full(r["riccati"].get<double>())
              << ", alignment residual " << format_full(r["alignment"].get<double>()) << "\n";
  }
}

}  // namespace detail

inline RunArtifacts run_command(const std::string& cmd, const Scenario& s) {
  if (cmd == "limit") return run_limit(s);
  if (cmd == "classify") return run_classify(s);
  if (cmd == "conjugate") return run_conjugate(s);
  if (cmd == "verify") return run_verify(s);
  if (cmd == "rosen2brinkmann") return run_rosen2brinkmann(s);
  if (cmd == "flowprofile") return run_flowprofile(s);
  throw ConfigError("unknown command " + cmd);
}

inline int cli_main(int argc, const char* const* argv);

inline int cli_main(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("pwlab");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"wave-limit laboratory: extract wave profiles along geodesics, assemble the "
               "limit metric, and analyze conjugate points and curvature structure"};
  app.require_subcommand(1);
  detail::CliSelection sel;

  const auto add_common = [&sel](CLI::App* cmd) {
    cmd->add_option("--config", sel.config_path,
                    "scenario config file (one scenario per file)");
    cmd->add_option("--scenario", sel.scenario_name, "built-in scenario name");
    cmd->add_option("--out", sel.out_dir, "output directory");
    cmd->add_option("--tol", sel.tol, "override the scenario tolerance");
    cmd->add_option("--span", sel.span, "override the relevant parameter window, as A:B");
  };
  add_common(app.add_subcommand("limit",
                                "extract the wave profile and assemble the limit metric"));
  add_common(app.add_subcommand("classify", "curvature flags of the limit wave"));
  add_common(app.add_subcommand("conjugate",
                                "conjugate points of the source and wave-side systems"));
  add_common(app.add_subcommand("verify",
                                "sampled evidence reports for the structure statements"));
  add_common(app.add_subcommand("rosen2brinkmann",
                                "convert comoving wave blocks to profile form"));
  add_common(app.add_subcommand("flowprofile",
                                "congruence shape operator against the wave profile"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  sel.command = app.get_subcommands().front()->get_name();

  try {
    Scenario s;
    if (!sel.config_path.empty() && !sel.scenario_name.empty())
      throw ConfigError("--config and --scenario are mutually exclusive");
    if (!sel.config_path.empty())
      s = scenario_from_config(Config::parse_file(sel.config_path));
    else if (!sel.scenario_name.empty())
      s = builtin_scenario(sel.scenario_name);
    else
      throw ConfigError("pick a scenario: --config FILE or --scenario NAME");
    detail::apply_cli_overrides(s, sel);

    const RunArtifacts art = run_command(sel.command, s);
    for (const std::string& f : art.files) std::cout << "wrote " << f << "\n";
    detail::print_summary(sel.command, art.report);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "domain refusal: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace pwlab
