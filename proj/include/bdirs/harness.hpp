#pragma once

// Scenario sampling, parameter sweeps, and deterministic result emission.
// Scenario geometry is drawn from a substream of (seed, scenario index), so
// the same seed gives the same geometry no matter which axis value or scheme
// is being evaluated, and parallel execution cannot change any output byte.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bdirs/baselines.hpp"
#include "bdirs/channel.hpp"
#include "bdirs/config.hpp"
#include "bdirs/rng.hpp"
#include "bdirs/solver.hpp"

#include <json.hpp>

namespace bdirs {

// Deterministic geometry draw: d1 fixed by config, d2 ~ U[d2_min, d2_max],
// all angles ~ U[-pi/2, pi/2]; the first N_r users reflect.
inline Geometry sample_scenario(const SystemConfig& cfg, uint64_t seed) {
  cfg.validate();
  SplitMix64 gen(substream(seed, 0x6E0));
  Geometry geo;
  geo.d1 = cfg.d1_m;
  geo.phi_tx = gen.uniform(-M_PI / 2, M_PI / 2);
  geo.phi_rx = gen.uniform(-M_PI / 2, M_PI / 2);
  geo.d2.resize(cfg.n_users);
  geo.phi.resize(cfg.n_users);
  geo.group.resize(cfg.n_users);
  for (int n = 0; n < cfg.n_users; ++n) {
    geo.d2[n] = gen.uniform(cfg.d2_min_m, cfg.d2_max_m);
    geo.phi[n] = gen.uniform(-M_PI / 2, M_PI / 2);
    geo.group[n] = n < cfg.n_reflective ? Group::reflective : Group::transmissive;
  }
  return geo;
}

enum class SweepAxis { k_elements, m_antennas, p_max, f_c, iterations };

inline std::string axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::k_elements: return "K";
    case SweepAxis::m_antennas: return "M";
    case SweepAxis::p_max: return "P_max";
    case SweepAxis::f_c: return "f_c";
    case SweepAxis::iterations: return "iterations";
  }
  throw std::invalid_argument("unknown axis");
}

inline SweepAxis axis_from_name(const std::string& s) {
  if (s == "K") return SweepAxis::k_elements;
  if (s == "M") return SweepAxis::m_antennas;
  if (s == "P_max") return SweepAxis::p_max;
  if (s == "f_c") return SweepAxis::f_c;
  if (s == "iterations") return SweepAxis::iterations;
  throw std::invalid_argument("unknown sweep axis '" + s + "'");
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::p_max;
  std::vector<double> values;       // axis values; for "iterations" a single outer cap
  std::vector<Scheme> schemes;
  std::vector<uint64_t> seeds;

  void validate() const {
    if (values.empty()) throw std::invalid_argument("sweep spec: values must be nonempty");
    if (schemes.empty()) throw std::invalid_argument("sweep spec: schemes must be nonempty");
    if (seeds.empty()) throw std::invalid_argument("sweep spec: seeds must be nonempty");
  }
};

// key = value file: axis, values (comma separated), schemes, seeds
inline SweepSpec parse_sweep_spec(std::istream& in) {
  auto kv = detail::parse_kv(in, "sweep spec");
  SweepSpec spec;
  auto split_list = [](const std::string& s) {
    std::vector<std::string> items;
    std::string cur;
    for (char c : s) {
      if (c == ',') { items.push_back(detail::trim(cur)); cur.clear(); }
      else cur += c;
    }
    if (!detail::trim(cur).empty()) items.push_back(detail::trim(cur));
    return items;
  };
  for (const auto& [key, val] : kv) {
    if (key == "axis") spec.axis = axis_from_name(val);
    else if (key == "values") {
      for (const auto& v : split_list(val)) spec.values.push_back(detail::to_double("values", v));
    } else if (key == "schemes") {
      for (const auto& v : split_list(val)) spec.schemes.push_back(scheme_from_name(v));
    } else if (key == "seeds") {
      for (const auto& v : split_list(val))
        spec.seeds.push_back(static_cast<uint64_t>(detail::to_double("seeds", v)));
    } else {
      throw std::invalid_argument("sweep spec: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

inline SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("sweep spec: cannot open '" + path + "'");
  return parse_sweep_spec(in);
}

struct ResultRow {
  std::string axis;
  double value = 0.0;
  uint64_t seed = 0;
  std::string scheme;
  double rate_bps_hz = 0.0;
  int outer_iters = 0;
  double wall_ms = 0.0;   // kept out of the persisted files: outputs are byte-deterministic
  std::string flags;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

inline SystemConfig apply_axis(const SystemConfig& base, SweepAxis axis, double value) {
  SystemConfig cfg = base;
  switch (axis) {
    case SweepAxis::k_elements: cfg.k_elements = static_cast<int>(value); break;
    case SweepAxis::m_antennas: cfg.m_antennas = static_cast<int>(value); break;
    case SweepAxis::p_max: cfg.p_max_dbm = value; break;
    case SweepAxis::f_c: cfg.f_c_hz = value; break;
    case SweepAxis::iterations: cfg.max_outer = static_cast<int>(value); break;
  }
  cfg.validate();
  return cfg;
}

namespace detail {

struct SweepPoint {
  double value;
  uint64_t seed;
  Scheme scheme;
};

inline std::vector<ResultRow> run_point(const SystemConfig& base, const AbsorptionTable& table,
                                        SweepAxis axis, const SweepPoint& pt) {
  std::vector<ResultRow> rows;
  ResultRow row;
  row.axis = axis_name(axis);
  row.value = pt.value;
  row.seed = pt.seed;
  row.scheme = scheme_name(pt.scheme);
  try {
    const SystemConfig cfg = apply_axis(base, axis, pt.value);
    // geometry depends only on the seed and the base config, so sweeps are
    // paired across axis values
    const Geometry geo = sample_scenario(cfg, pt.seed);
    const ChannelSet channels = synthesize_channels(cfg, geo, table);
    SolveOptions opts = SolveOptions::from_config(cfg);
    opts.seed = substream(pt.seed, 0xB0D);
    const auto t0 = std::chrono::steady_clock::now();
    const BaselineResult res = run_scheme(pt.scheme, channels, geo.group, cfg, opts);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    int outers = 0;
    bool all_converged = true;
    for (const auto& s : res.solves) {
      outers = std::max(outers, static_cast<int>(s.trace.outer.size()) - 1);
      all_converged = all_converged && s.converged;
    }
    if (axis == SweepAxis::iterations) {
      // one row per outer iteration: the effective-rate trajectory
      size_t longest = 0;
      for (const auto& s : res.solves) longest = std::max(longest, s.trace.outer.size());
      for (size_t it = 0; it < longest; ++it) {
        ResultRow r = row;
        r.value = static_cast<double>(it);
        r.rate_bps_hz = 0.0;
        for (size_t si = 0; si < res.solves.size(); ++si) {
          const auto& tr = res.solves[si].trace.outer;
          const double v = tr[std::min(it, tr.size() - 1)].surrogate;
          r.rate_bps_hz += res.weights[si] * v;
        }
        r.outer_iters = static_cast<int>(it);
        r.wall_ms = ms;
        r.flags = "trace";
        rows.push_back(std::move(r));
      }
    } else {
      row.rate_bps_hz = res.effective_rate;
      row.outer_iters = outers;
      row.wall_ms = ms;
      row.flags = all_converged ? "" : "max_outer";
      rows.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    row.rate_bps_hz = std::nan("");
    row.flags = std::string("error:") + e.what();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

// Runs every (value x seed x scheme) point; points execute in parallel but
// rows are ordered by (value, seed, scheme) regardless of completion order.
inline ResultTable run_sweep(const SweepSpec& spec, const SystemConfig& base,
                             const AbsorptionTable& table, int threads = 0) {
  spec.validate();
  base.validate();
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;

  std::vector<detail::SweepPoint> points;
  for (double v : spec.values)
    for (uint64_t s : spec.seeds)
      for (Scheme sch : spec.schemes) points.push_back({v, s, sch});

  std::vector<std::vector<ResultRow>> results(points.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      results[i] = detail::run_point(base, table, spec.axis, points[i]);
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(threads, static_cast<int>(points.size()));
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  ResultTable table_out;
  for (auto& rows : results)
    for (auto& r : rows) table_out.rows.push_back(std::move(r));
  return table_out;
}

inline ResultTable run_sweep(const SweepSpec& spec, const SystemConfig& base, int threads = 0) {
  const AbsorptionTable table = base.absorption_table.empty()
                                    ? AbsorptionTable::builtin()
                                    : AbsorptionTable::from_file(base.absorption_table);
  return run_sweep(spec, base, table, threads);
}

enum class EmitFormat { csv, json };

namespace detail {

// shortest round-trip decimal; '.' decimal point independent of locale
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string csv_line(const ResultRow& r) {
  std::string line;
  line += r.axis;
  line += ',';
  line += fmt_double(r.value);
  line += ',';
  line += std::to_string(r.seed);
  line += ',';
  line += r.scheme;
  line += ',';
  line += fmt_double(r.rate_bps_hz);
  line += ',';
  line += std::to_string(r.outer_iters);
  line += ",0,";  // wall_ms suppressed so reruns are byte-identical
  line += r.flags;
  line += '\n';
  return line;
}

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

inline Aggregate aggregate_rates(const std::vector<const ResultRow*>& rows) {
  Aggregate a;
  double sum = 0.0;
  for (const auto* r : rows)
    if (!std::isnan(r->rate_bps_hz)) { sum += r->rate_bps_hz; ++a.count; }
  if (a.count == 0) return a;
  a.mean = sum / a.count;
  double ss = 0.0;
  for (const auto* r : rows)
    if (!std::isnan(r->rate_bps_hz)) ss += (r->rate_bps_hz - a.mean) * (r->rate_bps_hz - a.mean);
  a.stddev = a.count > 1 ? std::sqrt(ss / (a.count - 1)) : 0.0;
  return a;
}

}  // namespace detail

inline const char* kCsvHeader = "axis,value,seed,scheme,rate_bps_hz,outer_iters,wall_ms,flags";

// Writes results.csv (or results.json) plus summary.txt with per-axis-value
// aggregates. UTF-8, LF line endings, '.' decimal separator, no locale.
inline void emit_results(const ResultTable& table, const std::string& dir, EmitFormat format) {
  const std::string csv_path = dir + "/results.csv";
  const std::string json_path = dir + "/results.json";
  const std::string summary_path = dir + "/summary.txt";

  if (format == EmitFormat::csv) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_results: cannot write '" + csv_path + "'");
    out << kCsvHeader << '\n';
    for (const auto& r : table.rows) out << detail::csv_line(r);
  } else {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : table.rows) {
      nlohmann::ordered_json j;
      j["axis"] = r.axis;
      j["value"] = r.value;
      j["seed"] = r.seed;
      j["scheme"] = r.scheme;
      if (std::isnan(r.rate_bps_hz)) j["rate_bps_hz"] = nullptr;
      else j["rate_bps_hz"] = r.rate_bps_hz;
      j["outer_iters"] = r.outer_iters;
      j["wall_ms"] = 0;
      j["flags"] = r.flags;
      rows.push_back(std::move(j));
    }
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_results: cannot write '" + json_path + "'");
    out << rows.dump(2) << '\n';
  }

  // per (axis value, scheme) aggregates over seeds
  std::ofstream sum(summary_path, std::ios::binary);
  if (!sum) throw std::runtime_error("emit_results: cannot write '" + summary_path + "'");
  sum << "axis value scheme mean_rate stddev count\n";
  std::vector<std::pair<double, std::string>> keys;
  for (const auto& r : table.rows) {
    std::pair<double, std::string> key{r.value, r.scheme};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [value, scheme] : keys) {
    std::vector<const ResultRow*> rows;
    for (const auto& r : table.rows)
      if (r.value == value && r.scheme == scheme) rows.push_back(&r);
    const auto agg = detail::aggregate_rates(rows);
    sum << rows.front()->axis << ' ' << detail::fmt_double(value) << ' ' << scheme << ' '
        << detail::fmt_double(agg.mean) << ' ' << detail::fmt_double(agg.stddev) << ' '
        << agg.count << '\n';
  }
}

}  // namespace bdirs
