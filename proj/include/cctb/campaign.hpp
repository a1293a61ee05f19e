#pragma once

// Campaign orchestration: grid x repeats dispatch over worker threads, aggregation,
// boundary refinement, scoring, and grid emission (CSV, ANSI heatmap, JSON record).

#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cctb/ad_tables_io.hpp"
#include "cctb/config.hpp"
#include "cctb/generator.hpp"
#include "cctb/oracle.hpp"
#include "cctb/scoring.hpp"
#include "cctb/simulator.hpp"

namespace cctb {

inline constexpr const char* kToolVersion = "0.3.0";

/// splitmix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Per-run seed: splitmix64(splitmix64(base ^ splitmix64(cell)) ^ repeat).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t repeat) {
  return splitmix64(splitmix64(base ^ splitmix64(cell)) ^ repeat);
}

struct CellRecord {
  double x_a = kAbsent;
  double x_f = kAbsent;
  std::vector<std::string> verdicts;  // per repeat, in repeat order
  std::vector<double> scores;         // Sc per repeat
  CellResult result;
  double mean_sc = 0.0;

  bool operator==(const CellRecord&) const = default;
};

struct GridRecord {
  double v_e = 0.0;
  double x_e = 0.0;
  CriticalValues critical;
  std::vector<double> x_a_values;
  std::vector<double> x_f_values;
  std::vector<CellRecord> cells;  // row-major, x_a rows

  const CellRecord& at(std::size_t row, std::size_t col) const { return cells.at(row * x_f_values.size() + col); }
  bool operator==(const GridRecord&) const = default;
};

struct RefinementRecord {
  double v_e = 0.0;
  Axis axis = Axis::XA;
  double fixed = 0.0;  // value of the other axis
  RefineStatus status = RefineStatus::Bracketed;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::pair<double, std::string>> probes;

  bool operator==(const RefinementRecord&) const = default;
};

struct RuntimeInfo {
  int jobs = 1;
  double wall_seconds = 0.0;
};

struct CampaignRecord {
  nlohmann::json config;  // full snapshot, defaults included
  std::uint64_t seed = 0;
  std::string version = kToolVersion;
  bool complete = true;
  std::string error;
  std::vector<GridRecord> grids;
  std::vector<RefinementRecord> refinements;
  RuntimeInfo runtime;  // excluded from equality

  bool operator==(const CampaignRecord& o) const {
    return config == o.config && seed == o.seed && version == o.version && complete == o.complete &&
           error == o.error && grids == o.grids && refinements == o.refinements;
  }
};

/// One classified run: verdict plus its incident ledger.
struct RunOutcome {
  Verdict verdict;
  IncidentLedger ledger;
};

inline RunOutcome run_case(const TestCase& tc, const DynamicsProfile& dyn, const PolicySpec& policy,
                           const CriticalValues& analysis, SimConfig sim, std::uint64_t seed) {
  sim.seed = seed;
  const Trace tr = run_scenario(tc, dyn, policy, sim);
  const Verdict v = classify(tr, tc, analysis, sim);
  return RunOutcome{v, ledger_from_trace(tr, v, sim.t_max)};
}

namespace detail {

// Walk an axis in ascending order and return the first caution -> progress step.
inline std::optional<std::pair<double, double>> first_transition(const std::vector<double>& values,
                                                                 const std::vector<const CellRecord*>& cells) {
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const Category a = parse_verdict(cells[i]->result.dominant).category;
    const Category b = parse_verdict(cells[i + 1]->result.dominant).category;
    if (is_caution_class(a) && is_progress_class(b)) return std::make_pair(values[i], values[i + 1]);
  }
  return std::nullopt;
}

}  // namespace detail

/// Refinement along `axis` with the other axis held at `fixed`; single runs seeded from the base seed.
inline RefinementRecord refine_cell_boundary(const CampaignConfig& cfg, const DynamicsProfile& dyn, double v_e,
                                             Axis axis, double fixed, double lo, double hi) {
  const ContextParams ctx = cfg.context_params();
  const CriticalValues cv = critical_values(ctx, dyn, v_e);
  const double x_e = cv.x_e_hat;
  std::uint64_t probe_index = 0;
  const RefineRunner run = [&](double value) {
    const TestCase tc{ctx, v_e, x_e, axis == Axis::XA ? value : fixed, axis == Axis::XF ? value : fixed};
    return run_case(tc, dyn, cfg.policy, cv, cfg.sim, mix_seed(cfg.seed, ~0ULL, probe_index++)).verdict;
  };
  const RefineResult r = refine_boundary(run, lo, hi, cfg.refine.tol);
  RefinementRecord rec{v_e, axis, fixed, r.status, r.lo, r.hi, {}};
  for (const Probe& p : r.probes) rec.probes.emplace_back(p.value, to_string(p.verdict));
  return rec;
}

/// Runs every cell x repeat, partitioned statically over `jobs` workers; each worker owns its
/// policy and engine instances and writes into its own result slots. Aggregation runs after join.
inline CampaignRecord run_campaign(const CampaignConfig& cfg, std::optional<int> jobs_override = std::nullopt) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();
  const int jobs = std::max(1, jobs_override.value_or(cfg.jobs));
  const ContextParams ctx = cfg.context_params();
  const DynamicsProfile dyn = cfg.profile();

  CampaignRecord rec;
  rec.config = config_to_json(cfg);
  rec.seed = cfg.seed;
  rec.runtime.jobs = jobs;

  std::vector<Grid> grids;
  for (double v_e : cfg.v_e_values) grids.push_back(build_grid(ctx, dyn, v_e, cfg.grid));

  struct Task {
    std::size_t grid;
    std::size_t cell;
    std::uint64_t global_cell;
    int repeat;
  };
  std::vector<Task> tasks;
  std::uint64_t global = 0;
  for (std::size_t g = 0; g < grids.size(); ++g) {
    for (std::size_t c = 0; c < grids[g].cases.size(); ++c, ++global) {
      for (int r = 0; r < cfg.grid.repeats; ++r) tasks.push_back({g, c, global, r});
    }
  }

  std::vector<std::optional<RunOutcome>> outcomes(tasks.size());
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&](int w) {
    for (std::size_t i = static_cast<std::size_t>(w); i < tasks.size(); i += static_cast<std::size_t>(jobs)) {
      const Task& t = tasks[i];
      try {
        const Grid& g = grids[t.grid];
        outcomes[i] = run_case(g.cases[t.cell], dyn, cfg.policy, g.critical, cfg.sim,
                               mix_seed(cfg.seed, t.global_cell, static_cast<std::uint64_t>(t.repeat)));
      } catch (const std::exception& e) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
        return;
      }
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
    for (std::thread& th : pool) th.join();
  }
  if (!first_error.empty()) {
    rec.complete = false;
    rec.error = first_error;
  }

  std::size_t ti = 0;
  for (const Grid& g : grids) {
    GridRecord gr{g.v_e, g.x_e, g.critical, g.x_a_values, g.x_f_values, {}};
    for (const TestCase& tc : g.cases) {
      CellRecord cell{tc.x_a, tc.x_f, {}, {}, {}, 0.0};
      std::vector<Verdict> verdicts;
      for (int r = 0; r < cfg.grid.repeats; ++r, ++ti) {
        if (!outcomes[ti]) continue;
        verdicts.push_back(outcomes[ti]->verdict);
        cell.verdicts.push_back(to_string(outcomes[ti]->verdict));
        const ScoreOptions opt{cfg.scoring.exclude_not_at_fault};
        cell.scores.push_back(score(outcomes[ti]->ledger, cfg.scoring.table, opt).Sc);
      }
      if (!verdicts.empty()) {
        cell.result = aggregate_cell(verdicts);
        double sum = 0.0;
        for (double s : cell.scores) sum += s;
        cell.mean_sc = sum / static_cast<double>(cell.scores.size());
      }
      gr.cells.push_back(std::move(cell));
    }
    rec.grids.push_back(std::move(gr));
  }

  if (cfg.refine.enabled && rec.complete) {
    for (const GridRecord& g : rec.grids) {
      if (cfg.refine.axis == Axis::XA) {
        if (!ctx.has_arriving()) continue;
        for (std::size_t col = 0; col < g.x_f_values.size(); ++col) {
          std::vector<const CellRecord*> line;
          for (std::size_t row = 0; row < g.x_a_values.size(); ++row) line.push_back(&g.at(row, col));
          if (const auto tr = detail::first_transition(g.x_a_values, line)) {
            rec.refinements.push_back(
                refine_cell_boundary(cfg, dyn, g.v_e, Axis::XA, g.x_f_values[col], tr->first, tr->second));
          }
        }
      } else {
        for (std::size_t row = 0; row < g.x_a_values.size(); ++row) {
          std::vector<const CellRecord*> line;
          for (std::size_t col = 0; col < g.x_f_values.size(); ++col) line.push_back(&g.at(row, col));
          if (const auto tr = detail::first_transition(g.x_f_values, line)) {
            rec.refinements.push_back(
                refine_cell_boundary(cfg, dyn, g.v_e, Axis::XF, g.x_a_values[row], tr->first, tr->second));
          }
        }
      }
    }
  }

  rec.runtime.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

/// True when any recorded run ended with a verdict outside CS, CO and PS.
inline bool has_unsafe_verdict(const CampaignRecord& rec) {
  for (const GridRecord& g : rec.grids) {
    for (const CellRecord& c : g.cells) {
      for (const std::string& v : c.verdicts) {
        if (!is_safe(parse_verdict(v).category)) return true;
      }
    }
  }
  return false;
}

inline ComparisonReport compare_record(const CampaignRecord& rec, double threshold) {
  ComparisonReport rep;
  rep.threshold = threshold;
  double total = 0.0;
  for (const GridRecord& g : rec.grids) {
    for (const CellRecord& c : g.cells) {
      if (c.result.n == 0) continue;
      CellComparison cc{c.result.dominant, c.mean_sc, !is_safe(parse_verdict(c.result.dominant).category)};
      if (cc.mean_sc >= threshold && cc.unsafe) ++rep.masked;
      if (cc.mean_sc < threshold && !cc.unsafe) ++rep.overpenalized;
      total += cc.mean_sc;
      rep.cells.push_back(cc);
    }
  }
  rep.mean_sc = rep.cells.empty() ? 0.0 : total / static_cast<double>(rep.cells.size());
  return rep;
}

// --- JSON ------------------------------------------------------------------------------

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

// kAbsent is written as null so the JSON reads as "no vehicle".
inline nlohmann::json distance_json(double x) { return x >= kAbsent ? nlohmann::json(nullptr) : nlohmann::json(x); }
inline double distance_from(const nlohmann::json& j) { return j.is_null() ? kAbsent : j.get<double>(); }

}  // namespace detail

inline nlohmann::json record_to_json(const CampaignRecord& rec, bool include_runtime = true) {
  using nlohmann::json;
  json grids = json::array();
  for (const GridRecord& g : rec.grids) {
    json cells = json::array();
    for (const CellRecord& c : g.cells) {
      cells.push_back(json{{"x_a", detail::distance_json(c.x_a)},
                           {"x_f", detail::distance_json(c.x_f)},
                           {"verdicts", c.verdicts},
                           {"scores", c.scores},
                           {"counts", c.result.counts},
                           {"n", c.result.n},
                           {"dominant", c.result.dominant},
                           {"mean_sc", c.mean_sc}});
    }
    json xa = json::array();
    for (double v : g.x_a_values) xa.push_back(detail::distance_json(v));
    grids.push_back(json{{"v_e", g.v_e},
                         {"x_e", g.x_e},
                         {"critical",
                          {{"x_e_hat", g.critical.x_e_hat},
                           {"x_a_hat", detail::optional_json(g.critical.x_a_hat)},
                           {"x_f_hat", detail::optional_json(g.critical.x_f_hat)},
                           {"feasible", g.critical.feasible}}},
                         {"x_a_values", xa},
                         {"x_f_values", g.x_f_values},
                         {"cells", cells}});
  }
  json refinements = json::array();
  for (const RefinementRecord& r : rec.refinements) {
    json probes = json::array();
    for (const auto& [value, verdict] : r.probes) probes.push_back(json{{"value", value}, {"verdict", verdict}});
    refinements.push_back(json{{"v_e", r.v_e},
                               {"axis", to_string(r.axis)},
                               {"fixed", detail::distance_json(r.fixed)},
                               {"status", to_string(r.status)},
                               {"lo", r.lo},
                               {"hi", r.hi},
                               {"probes", probes}});
  }
  json j{{"tool", "cctb"},      {"version", rec.version}, {"seed", rec.seed},     {"complete", rec.complete},
         {"config", rec.config}, {"grids", grids},        {"refinements", refinements}};
  if (!rec.error.empty()) j["error"] = rec.error;
  if (include_runtime) j["runtime"] = json{{"jobs", rec.runtime.jobs}, {"wall_seconds", rec.runtime.wall_seconds}};
  return j;
}

inline RefineStatus parse_refine_status(const std::string& s) {
  for (RefineStatus r : {RefineStatus::Bracketed, RefineStatus::Unstable, RefineStatus::PreconditionViolated}) {
    if (s == to_string(r)) return r;
  }
  throw ConfigError("unknown refinement status '" + s + "'");
}

inline CampaignRecord record_from_json(const nlohmann::json& j) {
  try {
    CampaignRecord rec;
    rec.version = j.at("version").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.complete = j.at("complete").get<bool>();
    rec.config = j.at("config");
    if (j.contains("error")) rec.error = j.at("error").get<std::string>();
    for (const auto& g : j.at("grids")) {
      GridRecord gr;
      gr.v_e = g.at("v_e").get<double>();
      gr.x_e = g.at("x_e").get<double>();
      const auto& cv = g.at("critical");
      gr.critical.x_e_hat = cv.at("x_e_hat").get<double>();
      gr.critical.x_a_hat = detail::optional_from(cv.at("x_a_hat"));
      gr.critical.x_f_hat = detail::optional_from(cv.at("x_f_hat"));
      gr.critical.feasible = cv.at("feasible").get<bool>();
      for (const auto& v : g.at("x_a_values")) gr.x_a_values.push_back(detail::distance_from(v));
      gr.x_f_values = g.at("x_f_values").get<std::vector<double>>();
      for (const auto& c : g.at("cells")) {
        CellRecord cell;
        cell.x_a = detail::distance_from(c.at("x_a"));
        cell.x_f = detail::distance_from(c.at("x_f"));
        cell.verdicts = c.at("verdicts").get<std::vector<std::string>>();
        cell.scores = c.at("scores").get<std::vector<double>>();
        cell.result.counts = c.at("counts").get<std::map<std::string, int>>();
        cell.result.n = c.at("n").get<int>();
        cell.result.dominant = c.at("dominant").get<std::string>();
        cell.mean_sc = c.at("mean_sc").get<double>();
        gr.cells.push_back(std::move(cell));
      }
      rec.grids.push_back(std::move(gr));
    }
    for (const auto& r : j.at("refinements")) {
      RefinementRecord rr;
      rr.v_e = r.at("v_e").get<double>();
      rr.axis = parse_axis(r.at("axis").get<std::string>());
      rr.fixed = detail::distance_from(r.at("fixed"));
      rr.status = parse_refine_status(r.at("status").get<std::string>());
      rr.lo = r.at("lo").get<double>();
      rr.hi = r.at("hi").get<double>();
      for (const auto& p : r.at("probes")) rr.probes.emplace_back(p.at("value").get<double>(), p.at("verdict").get<std::string>());
      rec.refinements.push_back(std::move(rr));
    }
    if (j.contains("runtime")) {
      rec.runtime.jobs = j.at("runtime").at("jobs").get<int>();
      rec.runtime.wall_seconds = j.at("runtime").at("wall_seconds").get<double>();
    }
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed campaign record: ") + e.what());
  }
}

// --- Grid emission ------------------------------------------------------------------------

namespace detail {

inline std::string axis_label(double v) { return v >= kAbsent ? "none" : format_number(v); }

inline std::string snapshot_comment(const CampaignRecord& rec) {
  return "# seed=" + std::to_string(rec.seed) + " config=" + rec.config.dump() + "\n";
}

}  // namespace detail

/// First row: x_f values; first column: x_a values; cells `VERDICT(k/n)` joined by ';'.
/// The config snapshot follows the grid as a '#' comment line.
inline std::string grid_to_csv(const CampaignRecord& rec, const GridRecord& g) {
  std::ostringstream os;
  os << "x_a\\x_f";
  for (double xf : g.x_f_values) os << ',' << format_number(xf);
  os << '\n';
  for (std::size_t r = 0; r < g.x_a_values.size(); ++r) {
    os << detail::axis_label(g.x_a_values[r]);
    for (std::size_t c = 0; c < g.x_f_values.size(); ++c) {
      const CellRecord& cell = g.at(r, c);
      os << ',' << (cell.result.n > 0 ? encode_cell(cell.result) : "");
    }
    os << '\n';
  }
  os << "# v_e=" << format_number(g.v_e) << " x_e=" << format_number(g.x_e) << '\n' << detail::snapshot_comment(rec);
  return os.str();
}

/// 256-color background for a dominant verdict.
inline int palette_color(Category c) {
  switch (c) {
    case Category::PS: return 34;                    // safe: green
    case Category::CS:
    case Category::CO: return 33;                    // caution: blue
    case Category::PU:
    case Category::CU: return 208;                   // property violation: orange
    case Category::Ae:
    case Category::Aa:
    case Category::Af: return 160;                   // accident: red
    case Category::RouteFault: return 91;            // route fault: purple
    case Category::Blk: return 244;                  // blockage: gray
  }
  return 0;
}

inline std::string grid_to_ansi(const CampaignRecord& rec, const GridRecord& g) {
  std::ostringstream os;
  constexpr int kWidth = 9;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() > w) s = s.substr(0, w);
    return std::string(w - s.size(), ' ') + s;
  };
  os << "v_e=" << format_number(g.v_e) << " x_e=" << format_number(g.x_e) << " seed=" << rec.seed << '\n';
  os << pad("xa\\xf", kWidth);
  for (double xf : g.x_f_values) os << pad(format_number(xf), kWidth);
  os << '\n';
  for (std::size_t r = 0; r < g.x_a_values.size(); ++r) {
    os << pad(detail::axis_label(g.x_a_values[r]), kWidth);
    for (std::size_t c = 0; c < g.x_f_values.size(); ++c) {
      const CellRecord& cell = g.at(r, c);
      if (cell.result.n == 0) {
        os << pad("-", kWidth);
        continue;
      }
      const Category cat = parse_verdict(cell.result.dominant).category;
      std::string label = cell.result.dominant;
      if (cell.result.counts.size() > 1) label += "*";
      os << "\x1b[48;5;" << palette_color(cat) << "m\x1b[97m" << pad(label, kWidth) << "\x1b[0m";
    }
    os << '\n';
  }
  os << "(* mixed cell)\n";
  return os.str();
}

}  // namespace cctb
