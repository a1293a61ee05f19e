// cctb: command-line front end for critical-configuration campaigns.
//
// Exit codes: 0 success, 1 usage, 2 config error, 3 unsafe verdict recorded, 4 internal error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cctb/cctb.hpp"

namespace fs = std::filesystem;
using namespace cctb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitUnsafe = 3;
constexpr int kExitInternal = 4;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  std::optional<int> jobs;
  std::string out;
  std::string format;
};

CampaignConfig load(const Globals& g) {
  CampaignConfig cfg = g.config.empty() ? CampaignConfig{} : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.repeats) cfg.grid.repeats = *g.repeats;
  if (g.jobs) {
    cfg.jobs = *g.jobs;
  } else if (const char* env = std::getenv("CCTB_JOBS"); env && *env) {
    try {
      cfg.jobs = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError("CCTB_JOBS must be an integer", "jobs");
    }
  }
  if (!g.out.empty()) cfg.output.dir = g.out;
  if (!g.format.empty()) cfg.output.format = g.format;
  validate(cfg);
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what(), path);
  }
}

std::string fixed3(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << v;
  return os.str();
}

std::string distance_label(double v) { return v >= kAbsent ? "none" : format_number(v); }

void render(const CampaignRecord& rec, const std::string& format, const std::string& out_dir) {
  if (format == "json") {
    const std::string text = record_to_json(rec).dump(2) + "\n";
    if (out_dir.empty()) {
      std::cout << text;
    } else {
      write_file(fs::path(out_dir) / "record.json", text);
    }
    return;
  }
  for (const GridRecord& g : rec.grids) {
    const std::string text = format == "ansi" ? grid_to_ansi(rec, g) : grid_to_csv(rec, g);
    std::cout << text;
    if (!out_dir.empty()) {
      write_file(fs::path(out_dir) / ("grid_ve" + format_number(g.v_e) + (format == "ansi" ? ".ansi" : ".csv")), text);
    }
  }
}

int cmd_estimate(const Globals& g, const std::vector<double>& vs, const std::vector<double>& xs, double scan_step) {
  const CampaignConfig cfg = load(g);
  const DynamicsProfile dyn = cfg.profile();
  const AdTables t = estimate_tables(reference_braking_runner(dyn, cfg.sim.dt), reference_accel_runner(dyn, cfg.sim.dt),
                                     vs, xs, scan_step);
  const std::string csv = ad_tables_to_csv(t);
  if (g.out.empty()) {
    std::cout << csv;
  } else {
    write_file(fs::path(g.out) / "ad_tables.csv", csv);
    std::cout << "wrote " << (fs::path(g.out) / "ad_tables.csv").string() << "\n";
  }
  return kExitOk;
}

int cmd_generate(const Globals& g) {
  const CampaignConfig cfg = load(g);
  const ContextParams ctx = cfg.context_params();
  const DynamicsProfile dyn = cfg.profile();
  for (double v_e : cfg.v_e_values) {
    const Grid grid = build_grid(ctx, dyn, v_e, cfg.grid);
    const CriticalValues& cv = grid.critical;
    std::cout << "context=" << to_string(ctx.config_type) << " v_e=" << format_number(v_e)
              << " x_e_hat=" << fixed3(cv.x_e_hat)
              << " x_a_hat=" << (cv.x_a_hat ? fixed3(*cv.x_a_hat) : std::string("none"))
              << " x_f_hat=" << (cv.x_f_hat ? fixed3(*cv.x_f_hat) : std::string("none"))
              << " feasible=" << (cv.feasible ? "true" : "false") << "\n";
    std::cout << "  x_a:";
    for (double v : grid.x_a_values) std::cout << ' ' << distance_label(v);
    std::cout << "\n  x_f:";
    for (double v : grid.x_f_values) std::cout << ' ' << format_number(v);
    std::cout << "\n  cases: " << grid.cases.size() << " x " << grid.repeats << " repeats\n";
  }
  return kExitOk;
}

int cmd_run(const Globals& g, double v_e, std::optional<double> x_a, std::optional<double> x_f) {
  const CampaignConfig cfg = load(g);
  const ContextParams ctx = cfg.context_params();
  const DynamicsProfile dyn = cfg.profile();
  const CriticalValues cv = critical_values(ctx, dyn, v_e);
  const TestCase tc = make_test_case(ctx, dyn, v_e, x_a.value_or(kAbsent), x_f.value_or(kAbsent));
  SimConfig sim = cfg.sim;
  sim.seed = mix_seed(cfg.seed, 0, 0);
  const Trace tr = run_scenario(tc, dyn, cfg.policy, sim);
  const Verdict v = classify(tr, tc, cv, sim);
  const IncidentLedger ledger = ledger_from_trace(tr, v, sim.t_max);
  std::cout << "verdict: " << to_string(v) << "\n";
  if (!v.props.empty()) std::cout << "props: " << v.props.str() << "\n";
  std::cout << "steps: " << tr.snapshots.size() << " t_end=" << format_number(tr.snapshots.back().t) << "\n";
  for (const Event& e : tr.events) {
    std::cout << "  " << format_number(e.t) << " " << to_string(e.kind) << " " << to_string(e.vehicle) << "\n";
  }
  std::cout << "score: " << score_report(ledger, cfg.scoring.table, {cfg.scoring.exclude_not_at_fault}).dump() << "\n";
  if (!g.out.empty()) {
    const bool json = cfg.output.format == "json";
    const fs::path path = fs::path(g.out) / (json ? "trace.json" : "trace.csv");
    write_file(path, json ? trace_to_json(tr).dump(2) + "\n" : trace_to_csv(tr));
    std::cout << "wrote " << path.string() << "\n";
  }
  return is_safe(v.category) ? kExitOk : kExitUnsafe;
}

int cmd_grid(const Globals& g) {
  const CampaignConfig cfg = load(g);
  const CampaignRecord rec = run_campaign(cfg);
  const std::string out_dir = cfg.output.dir;
  write_file(fs::path(out_dir) / "record.json", record_to_json(rec).dump(2) + "\n");
  if (cfg.output.format != "json") render(rec, cfg.output.format, out_dir);
  const ComparisonReport cmp = compare_record(rec, cfg.scoring.threshold);
  std::cout << "cells: " << cmp.cells.size() << " mean Sc: " << fixed3(cmp.mean_sc) << " masked: " << cmp.masked
            << " over-penalized: " << cmp.overpenalized << "\n";
  std::cout << "record: " << (fs::path(out_dir) / "record.json").string() << "\n";
  if (!rec.complete) {
    std::cerr << "campaign incomplete: " << rec.error << "\n";
    return kExitInternal;
  }
  return has_unsafe_verdict(rec) ? kExitUnsafe : kExitOk;
}

int cmd_refine(const Globals& g, std::optional<double> v_e, std::optional<std::string> axis_name,
               std::optional<double> fixed, std::optional<double> lo, std::optional<double> hi,
               std::optional<double> tol) {
  CampaignConfig cfg = load(g);
  if (tol) cfg.refine.tol = *tol;
  const Axis axis = axis_name ? parse_axis(*axis_name) : cfg.refine.axis;
  const ContextParams ctx = cfg.context_params();
  const DynamicsProfile dyn = cfg.profile();
  if (axis == Axis::XA && !ctx.has_arriving()) throw ConfigError("context has no arriving vehicle", "refine.axis");
  const std::vector<double>& values = axis == Axis::XA ? cfg.grid.x_a_values : cfg.grid.x_f_values;
  const std::vector<double>& others = axis == Axis::XA ? cfg.grid.x_f_values : cfg.grid.x_a_values;
  const double other_default = others.empty() || !ctx.has_arriving() ? kAbsent : sorted_unique(others).back();
  const RefinementRecord r = refine_cell_boundary(cfg, dyn, v_e.value_or(cfg.v_e_values.front()), axis,
                                                  fixed.value_or(other_default), lo.value_or(sorted_unique(values).front()),
                                                  hi.value_or(sorted_unique(values).back()));
  for (const auto& [value, verdict] : r.probes) std::cout << "probe " << format_number(value) << " " << verdict << "\n";
  std::cout << "status: " << to_string(r.status) << " bracket: [" << format_number(r.lo) << ", " << format_number(r.hi)
            << "] probes: " << r.probes.size() << "\n";
  if (!g.out.empty()) {
    nlohmann::json j{{"axis", to_string(r.axis)}, {"v_e", r.v_e}, {"status", to_string(r.status)},
                     {"lo", r.lo}, {"hi", r.hi}, {"seed", cfg.seed}, {"config", config_to_json(cfg)}};
    for (const auto& [value, verdict] : r.probes) j["probes"].push_back({{"value", value}, {"verdict", verdict}});
    write_file(fs::path(g.out) / "refine.json", j.dump(2) + "\n");
  }
  return r.status == RefineStatus::Bracketed ? kExitOk : kExitUnsafe;
}

int cmd_score(const Globals& g, const std::string& ledger_path, const std::string& record_path, bool exclude) {
  const CampaignConfig cfg = load(g);
  const ScoreOptions opt{exclude || cfg.scoring.exclude_not_at_fault};
  if (!ledger_path.empty()) {
    const nlohmann::json j = read_json(ledger_path);
    if (j.is_array()) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& item : j) out.push_back(score_report(ledger_from_json(item), cfg.scoring.table, opt));
      std::cout << out.dump(2) << "\n";
    } else {
      std::cout << score_report(ledger_from_json(j), cfg.scoring.table, opt).dump(2) << "\n";
    }
    return kExitOk;
  }
  if (record_path.empty()) throw CLI::ValidationError("score needs --ledger or --record");
  const CampaignRecord rec = record_from_json(read_json(record_path));
  const ComparisonReport cmp = compare_record(rec, cfg.scoring.threshold);
  nlohmann::json cells = nlohmann::json::array();
  for (const CellComparison& c : cmp.cells) {
    cells.push_back({{"dominant", c.dominant}, {"mean_sc", c.mean_sc}, {"unsafe", c.unsafe}});
  }
  std::cout << nlohmann::json{{"mean_sc", cmp.mean_sc},
                              {"masked", cmp.masked},
                              {"overpenalized", cmp.overpenalized},
                              {"threshold", cmp.threshold},
                              {"cells", cells}}
                   .dump(2)
            << "\n";
  return kExitOk;
}

int cmd_report(const Globals& g, const std::string& record_path) {
  const CampaignRecord rec = record_from_json(read_json(record_path));
  const std::string format = g.format.empty() ? "ansi" : g.format;
  if (format != "csv" && format != "ansi" && format != "json") throw ConfigError("must be csv, ansi or json", "format");
  render(rec, format, g.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical-configuration test campaigns for automated driving policies"};
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config, "Campaign configuration file");
  app.add_option("--seed", g.seed, "Base seed");
  app.add_option("--repeats", g.repeats, "Runs per grid cell")->check(CLI::PositiveNumber);
  app.add_option("--jobs", g.jobs, "Worker threads (default: CCTB_JOBS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--format", g.format, "csv | ansi | json")->check(CLI::IsMember({"csv", "ansi", "json"}));

  auto* estimate = app.add_subcommand("estimate", "Estimate A/D tables from the configured vehicle");
  std::vector<double> est_v{0, 1, 2, 3, 4, 5};
  std::vector<double> est_x{0, 1, 2, 3, 4, 5, 6};
  double scan_step = 0.1;
  estimate->add_option("--v", est_v, "Initial speeds")->delimiter(',');
  estimate->add_option("--x", est_x, "Accelerating distances")->delimiter(',');
  estimate->add_option("--scan-step", scan_step, "Obstacle scan increment");

  auto* generate = app.add_subcommand("generate", "Print critical values and the test grid");

  auto* run = app.add_subcommand("run", "Run one test case and classify it");
  double run_ve = 0.0;
  std::optional<double> run_xa, run_xf;
  run->add_option("--ve", run_ve, "Ego initial speed");
  run->add_option("--xa", run_xa, "Arriving vehicle distance (absent if omitted)");
  run->add_option("--xf", run_xf, "Front vehicle distance past the zone (absent if omitted)");

  auto* grid = app.add_subcommand("grid", "Run the full campaign");

  auto* refine = app.add_subcommand("refine", "Refine the caution/progress boundary along one axis");
  std::optional<double> ref_ve, ref_fixed, ref_lo, ref_hi, ref_tol;
  std::optional<std::string> ref_axis;
  refine->add_option("--ve", ref_ve, "Ego initial speed");
  refine->add_option("--axis", ref_axis, "xa | xf")->check(CLI::IsMember({"xa", "xf"}));
  refine->add_option("--fixed", ref_fixed, "Value of the other axis");
  refine->add_option("--lo", ref_lo, "Caution-side value");
  refine->add_option("--hi", ref_hi, "Progress-side value");
  refine->add_option("--tol", ref_tol, "Bracket width");

  auto* score = app.add_subcommand("score", "Score a ledger or compare a campaign record");
  std::string ledger_path, score_record;
  bool exclude = false;
  score->add_option("--ledger", ledger_path, "Ledger JSON (object or array)");
  score->add_option("--record", score_record, "Campaign record JSON");
  score->add_flag("--exclude-not-at-fault", exclude, "Drop incidents caused by other agents");

  auto* report = app.add_subcommand("report", "Re-render a campaign record");
  std::string report_record;
  report->add_option("--record", report_record, "Campaign record JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*estimate) return cmd_estimate(g, est_v, est_x, scan_step);
    if (*generate) return cmd_generate(g);
    if (*run) return cmd_run(g, run_ve, run_xa, run_xf);
    if (*grid) return cmd_grid(g);
    if (*refine) return cmd_refine(g, ref_ve, ref_axis, ref_fixed, ref_lo, ref_hi, ref_tol);
    if (*score) return cmd_score(g, ledger_path, score_record, exclude);
    if (*report) return cmd_report(g, report_record);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
