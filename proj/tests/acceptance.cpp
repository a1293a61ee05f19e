// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cctb/cctb.hpp"
#include "fixtures.hpp"

using namespace cctb;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::ostringstream t;
  t.setf(std::ios::fixed);
  t.precision(2);
  t << secs;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << name << " [" << t.str() << " s] "
            << o.detail << std::endl;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DynamicsProfile reference() { return DynamicsProfile::closed_form(2.0, 4.0, 6.5); }

DynamicsProfile shipped(const std::string& name, std::optional<double> v_max = std::nullopt) {
  DynamicsSource src;
  src.model = "table";
  src.table = name;
  src.v_max = v_max;
  return build_profile(src);
}

Outcome calibration_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = reference();
  const auto brake = reference_braking_runner(p);
  const auto accel = reference_accel_runner(p);
  double worst_b = 0.0, worst_t = 0.0;
  bool ok = true;
  for (double v = 1.0; v <= 6.0; v += 1.0) {
    const double err = std::abs(estimate_braking(brake, v, 0.1) - v * v / 8.0);
    worst_b = std::max(worst_b, err / (0.01 + v * 0.05));
    ok = ok && err <= 0.01 + v * 0.05;
  }
  for (double v = 0.0; v <= 6.0; v += 1.0) {
    for (double x = 1.0; x <= 40.0; x += 3.0) {
      const double x_acc = (6.5 * 6.5 - v * v) / 4.0;
      const double t = x <= x_acc ? (std::sqrt(v * v + 4.0 * x) - v) / 2.0 : (6.5 - v) / 2.0 + (x - x_acc) / 6.5;
      const double err = std::abs(estimate_accel_profile(accel, v, x).time - t);
      worst_t = std::max(worst_t, err);
      ok = ok && err <= kDefaultDt + 1e-9;
    }
  }
  const double secs = elapsed_since(t0);
  std::ostringstream d;
  d << "worst braking error/tolerance=" << worst_b << " worst AT error=" << worst_t << " s";
  return {ok && secs < 10.0, d.str()};
}

Outcome shipped_tables() {
  const auto pid = shipped("pid_autopilots");
  const double b = brake_distance(pid, 5.0), av = accel_speed(pid, 0.0, 1.0), at = accel_time(pid, 2.0, 3.0);
  std::ostringstream d;
  d << "B(5)=" << b << " AV(0,1)=" << av << " AT(2,3)=" << at;
  return {b == 2.3 && av == 2.3 && at == 1.0, d.str()};
}

Outcome generator_soundness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dyn = reference();
  const SimConfig sim;
  PolicySpec forced;
  forced.force_commit = true;
  int pairs = 0, bad = 0;
  std::string first_bad;
  auto verdict = [&](const TestCase& tc, const CriticalValues& cv, const PolicySpec& p) {
    return classify(run_scenario(tc, dyn, p, sim), tc, cv, sim);
  };
  for (ConfigType type : {ConfigType::Merging, ConfigType::LaneChange, ConfigType::CrossYield, ConfigType::CrossLight}) {
    const auto ctx = make_context(type);
    for (double ve : {0.0, 2.0, 4.0}) {
      const CriticalValues cv = critical_values(ctx, dyn, ve);
      if (!cv.feasible) {
        ++bad;
        if (first_bad.empty()) first_bad = std::string(to_string(type)) + " infeasible";
        continue;
      }
      const double xa = cv.x_a_hat.value_or(kAbsent);
      const double xf = *cv.x_f_hat;
      const Verdict safe = verdict(make_test_case(ctx, dyn, ve, xa, xf), cv, PolicySpec{});
      const bool safe_ok = safe.category == Category::PS && safe.props.empty();
      std::vector<TestCase> probes{make_test_case(ctx, dyn, ve, xa, xf - 0.5)};
      if (ctx.has_arriving()) probes.push_back(make_test_case(ctx, dyn, ve, xa - 0.5, xf));
      for (const TestCase& tc : probes) {
        const Verdict v = verdict(tc, cv, forced);
        const bool unsafe = !is_safe(v.category);
        ++pairs;
        if (!safe_ok || !unsafe) {
          ++bad;
          if (first_bad.empty()) {
            first_bad = std::string(to_string(type)) + " v_e=" + format_number(ve) + " safe=" + to_string(safe) +
                        " probe=" + to_string(v);
          }
        }
      }
    }
  }
  const double secs = elapsed_since(t0);
  std::ostringstream d;
  d << pairs << " boundary pairs, " << bad << " mismatches" << (first_bad.empty() ? "" : " first: " + first_bad);
  return {bad == 0 && pairs >= 16 && secs < 60.0, d.str()};
}

Outcome dominance() {
  const auto dyn = reference();
  int counterexamples = 0, checked = 0;
  for (ConfigType type : {ConfigType::Merging, ConfigType::LaneChange, ConfigType::CrossYield, ConfigType::CrossLight}) {
    CampaignConfig c;
    c.context.type = type;
    c.grid.x_a_values = range_values(20.0, 65.0, 5.0);
    c.grid.x_f_values = range_values(0.0, 13.5, 1.5);
    c.grid.repeats = 1;
    c.grid.include_critical = false;
    c.v_e_values = {0.0, 4.0};
    c.jobs = 4;
    const CampaignRecord rec = run_campaign(c);
    if (!rec.complete) throw std::runtime_error(rec.error);
    for (const GridRecord& g : rec.grids) {
      auto safe = [&](std::size_t r, std::size_t col) {
        for (const std::string& v : g.at(r, col).verdicts) {
          if (!is_safe(parse_verdict(v).category)) return false;
        }
        return true;
      };
      for (std::size_t r = 0; r < g.x_a_values.size(); ++r) {
        for (std::size_t col = 0; col < g.x_f_values.size(); ++col) {
          if (!safe(r, col)) continue;
          for (std::size_t r2 = r; r2 < g.x_a_values.size(); ++r2) {
            for (std::size_t c2 = col; c2 < g.x_f_values.size(); ++c2) {
              ++checked;
              if (!safe(r2, c2)) ++counterexamples;
            }
          }
        }
      }
    }
  }
  std::ostringstream d;
  d << checked << " dominated pairs checked, " << counterexamples << " counterexamples";
  return {counterexamples == 0, d.str()};
}

Outcome transfuser_infeasibility() {
  const auto dyn = shipped("pid_autopilots", 4.0);
  const auto ctx = make_context(ConfigType::CrossLight, {{"cd", 20.0}, {"ty", 3.0}, {"tar", 2.0}});
  int feasible = 0;
  const std::vector<double> ves{0.0, 1.0, 2.0, 3.0, 4.0};
  for (double ve : ves) {
    for (double xf = 0.0; xf <= 1000.0; xf += 10.0) {
      if (progress_feasible(ctx, dyn, ve, brake_distance(dyn, ve), kAbsent, xf)) ++feasible;
    }
    if (progress_feasible(ctx, dyn, ve, brake_distance(dyn, ve), kAbsent, kAbsent)) ++feasible;
  }
  CampaignConfig c;
  c.dynamics.model = "table";
  c.dynamics.table = "pid_autopilots";
  c.dynamics.v_max = 4.0;
  c.context.type = ConfigType::CrossLight;
  c.v_e_values = ves;
  c.jobs = 4;
  const CampaignRecord rec = run_campaign(c);
  std::set<std::string> seen;
  for (const GridRecord& g : rec.grids) {
    for (const CellRecord& cell : g.cells) seen.insert(cell.verdicts.begin(), cell.verdicts.end());
  }
  std::string verdicts;
  for (const std::string& s : seen) verdicts += (verdicts.empty() ? "" : ",") + s;
  std::ostringstream d;
  d << feasible << " feasible (v_e, x_f) pairs; campaign verdicts {" << verdicts << "}";
  return {feasible == 0 && rec.complete && seen == std::set<std::string>{"CS"}, d.str()};
}

Outcome oracle_fixtures() {
  const auto all = fixtures::all();
  int ok = 0;
  std::string wrong;
  for (const auto& f : all) {
    const std::string got = to_string(classify(f.trace, f.tc, f.analysis, fixtures::fixture_sim()));
    if (got == f.label) {
      ++ok;
    } else {
      wrong += " " + f.label + "->" + got;
    }
  }
  std::ostringstream d;
  d << ok << "/" << all.size() << " fixtures classified as labelled" << wrong;
  return {ok == static_cast<int>(all.size()) && all.size() >= 12, d.str()};
}

Outcome scoring_arithmetic() {
  const PenaltyTable table = PenaltyTable::defaults();
  IncidentLedger empty;
  empty.R = 0.37;
  const bool empty_ok = std::abs(score(empty, table).Sc - 37.0) < 1e-9;
  IncidentLedger l;
  l.R = 0.85;
  l.incidents[kPedestrianCollision] = 1;
  l.incidents[kRedLight] = 2;
  const double sc = score(l, table).Sc;
  const bool example_ok = std::abs(sc - 20.825) <= 1e-9;
  const std::vector<std::pair<std::string, double>> coeff{
      {kPedestrianCollision, 0.50}, {kVehicleCollision, 0.60}, {kStaticLayoutCollision, 0.65}, {kRedLight, 0.70},
      {kStopSign, 0.80}};
  std::mt19937 gen(2024);
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    IncidentLedger r;
    r.R = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    double direct = 1.0;
    for (const auto& [type, c] : coeff) {
      const int n = static_cast<int>(gen() % 4);
      r.incidents[type] = n;
      for (int k = 0; k < n; ++k) direct *= c;
    }
    if (std::abs(score(r, table).Sc - 100.0 * r.R * direct) > 1e-9) ++mismatches;
  }
  std::ostringstream d;
  d.precision(12);
  d << "Sc(example)=" << sc << ", " << mismatches << "/100 random ledgers off the direct product";
  return {empty_ok && example_ok && mismatches == 0, d.str()};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::filesystem::path config = std::filesystem::path(CCTB_SOURCE_DIR) / "configs" / "merging_noisy.toml";
  CampaignConfig cfg = load_config(config);
  cfg.grid.repeats = 5;
  const CampaignRecord a = run_campaign(cfg, 1);
  const CampaignRecord b = run_campaign(cfg, 8);
  const GridRecord& g = a.grids.front();
  bool shape_ok = g.x_a_values.size() <= 12 && g.x_f_values.size() <= 15;
  int mixed = 0;
  for (const GridRecord& gr : a.grids) {
    for (const CellRecord& c : gr.cells) mixed += c.result.counts.size() >= 2;
  }
  // Where and how a record is written is not part of its results.
  auto results = [](nlohmann::json j) {
    j["config"].erase("output");
    return j.dump();
  };
  const std::string ja = results(record_to_json(a, false));
  const bool in_process = a == b && ja == results(record_to_json(b, false));

  // Two separate processes of the command-line tool with different worker counts.
  bool cross_process = false;
  const std::filesystem::path tmp = std::filesystem::temp_directory_path() / "cctb_acceptance";
  std::filesystem::remove_all(tmp);
  std::vector<std::string> dumps;
  for (int jobs : {1, 8}) {
    const std::filesystem::path out = tmp / ("jobs" + std::to_string(jobs));
    const std::string cmd = std::string("\"") + CCTB_CLI_PATH + "\" grid --config \"" + config.string() +
                            "\" --repeats 5 --format json --jobs " + std::to_string(jobs) + " --out \"" +
                            out.string() + "\" > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    (void)rc;  // exit 3 just reports unsafe verdicts
    const auto j = nlohmann::json::parse(read_file(out / "record.json"));
    dumps.push_back(results(record_to_json(record_from_json(j), false)));
  }
  cross_process = dumps.size() == 2 && dumps[0] == dumps[1] && dumps[0] == ja;
  std::filesystem::remove_all(tmp);
  const double secs = elapsed_since(t0);
  std::ostringstream d;
  d << "grid " << g.x_a_values.size() << "x" << g.x_f_values.size() << ", jobs 1 vs 8 "
    << (in_process ? "identical" : "DIFFER") << ", separate processes " << (cross_process ? "identical" : "DIFFER")
    << ", " << mixed << " mixed cells";
  return {shape_ok && in_process && cross_process && mixed >= 1 && secs < 120.0, d.str()};
}

Outcome refinement() {
  const auto dyn = reference();
  CampaignConfig cfg;
  cfg.refine.tol = 0.1;
  bool ok = true;
  std::ostringstream d;
  for (double ve : {0.0, 2.0, 4.0}) {
    const double x_a_hat = *critical_values(cfg.context_params(), dyn, ve).x_a_hat;
    const RefinementRecord r = refine_cell_boundary(cfg, dyn, ve, Axis::XA, kAbsent, x_a_hat - 5.0, x_a_hat + 5.0);
    const bool good = r.status == RefineStatus::Bracketed && r.probes.size() <= 12 && r.hi - r.lo <= 0.1 + 1e-12 &&
                      r.lo - 0.1 <= x_a_hat && x_a_hat <= r.hi + 0.1;
    ok = ok && good;
    d << "v_e=" << ve << " [" << r.lo << ", " << r.hi << "] vs " << x_a_hat << " in " << r.probes.size()
      << " probes; ";
  }
  return {ok, d.str()};
}

}  // namespace

int main() {
  criterion(1, "calibration fidelity", calibration_fidelity);
  criterion(2, "shipped-table fidelity", shipped_tables);
  criterion(3, "generator soundness", generator_soundness);
  criterion(4, "criticality dominance", dominance);
  criterion(5, "tabulated-profile infeasibility at a signalized crossing", transfuser_infeasibility);
  criterion(6, "oracle fixtures", oracle_fixtures);
  criterion(7, "scoring arithmetic", scoring_arithmetic);
  criterion(8, "determinism and parallelism", determinism);
  criterion(9, "boundary refinement", refinement);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
