#pragma once

// Leaderboard-style quantitative scoring: Sc = 100 R P with P the product of
// per-incident penalty coefficients raised to their counts.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cctb/errors.hpp"
#include "cctb/oracle.hpp"
#include "cctb/simulator.hpp"
#include "cctb/verdict.hpp"

namespace cctb {

inline constexpr const char* kPedestrianCollision = "pedestrian-collision";
inline constexpr const char* kVehicleCollision = "vehicle-collision";
inline constexpr const char* kStaticLayoutCollision = "static-layout-collision";
inline constexpr const char* kRedLight = "red-light";
inline constexpr const char* kStopSign = "stop-sign";

/// Canonical incident name; accepts the short forms `pedestrian`, `vehicle`, `static`, `stop`.
inline std::string canonical_incident(const std::string& name) {
  static const std::map<std::string, std::string> aliases{
      {"pedestrian", kPedestrianCollision}, {"vehicle", kVehicleCollision}, {"static", kStaticLayoutCollision},
      {"static-layout", kStaticLayoutCollision}, {"stop", kStopSign}, {"red", kRedLight}};
  const auto it = aliases.find(name);
  return it == aliases.end() ? name : it->second;
}

struct PenaltyTable {
  std::map<std::string, double> coefficients;

  static PenaltyTable defaults() {
    return PenaltyTable{{{kPedestrianCollision, 0.50},
                         {kVehicleCollision, 0.60},
                         {kStaticLayoutCollision, 0.65},
                         {kRedLight, 0.70},
                         {kStopSign, 0.80}}};
  }

  bool operator==(const PenaltyTable&) const = default;
};

enum class CompletionFailure { None, RouteChange, Blockage, Timeout };

inline const char* to_string(CompletionFailure f) {
  switch (f) {
    case CompletionFailure::None: return "none";
    case CompletionFailure::RouteChange: return "route-change";
    case CompletionFailure::Blockage: return "blockage";
    case CompletionFailure::Timeout: return "timeout";
  }
  return "?";
}

inline CompletionFailure parse_completion_failure(const std::string& s) {
  if (s == "none") return CompletionFailure::None;
  if (s == "route-change") return CompletionFailure::RouteChange;
  if (s == "blockage") return CompletionFailure::Blockage;
  if (s == "timeout") return CompletionFailure::Timeout;
  throw ScoringError("unknown completion failure '" + s + "'");
}

struct IncidentLedger {
  std::map<std::string, int> incidents;
  // Subset of `incidents` caused by another agent; dropped when scoring with responsibility exclusion.
  std::map<std::string, int> not_at_fault;
  double R = 1.0;
  CompletionFailure failure = CompletionFailure::None;

  bool operator==(const IncidentLedger&) const = default;
};

/// Union of two ledgers: counts add, R and failure come from the first.
inline IncidentLedger merge_ledgers(IncidentLedger a, const IncidentLedger& b) {
  for (const auto& [k, n] : b.incidents) a.incidents[k] += n;
  for (const auto& [k, n] : b.not_at_fault) a.not_at_fault[k] += n;
  return a;
}

struct ScoreOptions {
  bool exclude_not_at_fault = false;
};

inline double penalty(const IncidentLedger& ledger, const PenaltyTable& table, ScoreOptions opt = {}) {
  double p = 1.0;
  for (const auto& [type, count] : ledger.incidents) {
    const auto it = table.coefficients.find(type);
    if (it == table.coefficients.end()) throw ScoringError("unknown incident type '" + type + "'");
    if (count < 0) throw ScoringError("negative incident count for '" + type + "'");
    int n = count;
    if (opt.exclude_not_at_fault) {
      const auto nf = ledger.not_at_fault.find(type);
      if (nf != ledger.not_at_fault.end()) n = std::max(0, n - nf->second);
    }
    p *= std::pow(it->second, n);
  }
  return p;
}

struct Score {
  double Sc = 0.0;
  double R = 0.0;
  double P = 1.0;

  bool operator==(const Score&) const = default;
};

inline Score score(const IncidentLedger& ledger, const PenaltyTable& table, ScoreOptions opt = {}) {
  if (!(ledger.R >= 0.0 && ledger.R <= 1.0)) throw ScoringError("route completion R must be in [0, 1]");
  const double p = penalty(ledger, table, opt);
  return Score{100.0 * ledger.R * p, ledger.R, p};
}

/// Incident ledger for a classified run. R is the ego's distance travelled over the
/// distance to the end of the run-out.
inline IncidentLedger ledger_from_trace(const Trace& trace, const Verdict& verdict,
                                        std::optional<double> t_max = std::nullopt) {
  IncidentLedger led;
  const WorldLayout& l = trace.layout;
  const double s_final = trace.snapshots.empty() ? -l.x_e : trace.snapshots.back().state.ego.s;
  const double total = l.x_e + l.ctx.cd + l.runout;
  led.R = total > 0.0 ? std::clamp((s_final + l.x_e) / total, 0.0, 1.0) : 1.0;
  switch (verdict.category) {
    case Category::Ae:
    case Category::Af: led.incidents[kVehicleCollision] = 1; break;
    case Category::Aa:
      led.incidents[kVehicleCollision] = 1;
      led.not_at_fault[kVehicleCollision] = 1;
      break;
    case Category::Blk: led.failure = CompletionFailure::Blockage; break;
    case Category::RouteFault:
      if (verdict.route_kind != RouteKind::DeviatedRoad) led.failure = CompletionFailure::RouteChange;
      break;
    default: break;
  }
  if (verdict.props.contains(SafetyProp::P3)) led.incidents[kRedLight] = 1;
  if (led.failure == CompletionFailure::None && t_max && !trace.snapshots.empty() &&
      trace.snapshots.back().t >= *t_max - 0.5 * trace.dt && !trace.has_event(EventKind::ZoneExit, Role::Ego)) {
    led.failure = CompletionFailure::Timeout;
  }
  return led;
}

// --- JSON ----------------------------------------------------------------------------

inline nlohmann::json ledger_to_json(const IncidentLedger& l) {
  nlohmann::json j;
  j["R"] = l.R;
  j["failure"] = l.failure == CompletionFailure::None ? nlohmann::json(nullptr) : nlohmann::json(to_string(l.failure));
  j["incidents"] = l.incidents;
  if (!l.not_at_fault.empty()) j["not_at_fault"] = l.not_at_fault;
  return j;
}

inline IncidentLedger ledger_from_json(const nlohmann::json& j) {
  try {
    IncidentLedger l;
    l.R = j.at("R").get<double>();
    if (j.contains("failure") && !j.at("failure").is_null()) {
      l.failure = parse_completion_failure(j.at("failure").get<std::string>());
    }
    if (j.contains("incidents")) {
      for (const auto& [k, v] : j.at("incidents").items()) l.incidents[canonical_incident(k)] += v.get<int>();
    }
    if (j.contains("not_at_fault")) {
      for (const auto& [k, v] : j.at("not_at_fault").items()) l.not_at_fault[canonical_incident(k)] += v.get<int>();
    }
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw ScoringError(std::string("malformed ledger: ") + e.what());
  }
}

inline nlohmann::json score_report(const IncidentLedger& l, const PenaltyTable& table, ScoreOptions opt = {}) {
  const Score s = score(l, table, opt);
  nlohmann::json j{{"Sc", s.Sc}, {"R", s.R}, {"P", s.P}};
  nlohmann::json contrib = nlohmann::json::object();
  for (const auto& [type, count] : l.incidents) {
    IncidentLedger one;
    one.incidents[type] = count;
    if (const auto nf = l.not_at_fault.find(type); nf != l.not_at_fault.end()) one.not_at_fault[type] = nf->second;
    contrib[type] = penalty(one, table, opt);
  }
  j["contributions"] = contrib;
  j["failure"] = l.failure == CompletionFailure::None ? nlohmann::json(nullptr) : nlohmann::json(to_string(l.failure));
  return j;
}

// --- Qualitative vs quantitative comparison ---------------------------------------------

struct ScoredCell {
  CellResult verdicts;
  std::vector<IncidentLedger> ledgers;  // one per run
};

struct CellComparison {
  std::string dominant;
  double mean_sc = 0.0;
  bool unsafe = false;
};

struct ComparisonReport {
  std::vector<CellComparison> cells;
  double mean_sc = 0.0;
  int masked = 0;       // Sc at or above threshold while the dominant verdict is unsafe
  int overpenalized = 0;  // Sc below threshold while the dominant verdict is safe
  double threshold = 70.0;
};

inline ComparisonReport compare_evaluations(const std::vector<ScoredCell>& grid, const PenaltyTable& table,
                                            double threshold = 70.0, ScoreOptions opt = {}) {
  ComparisonReport rep;
  rep.threshold = threshold;
  double total = 0.0;
  for (const ScoredCell& cell : grid) {
    CellComparison c;
    c.dominant = cell.verdicts.dominant;
    c.unsafe = !is_safe(parse_verdict(c.dominant).category);
    double sum = 0.0;
    for (const IncidentLedger& l : cell.ledgers) sum += score(l, table, opt).Sc;
    c.mean_sc = cell.ledgers.empty() ? 0.0 : sum / static_cast<double>(cell.ledgers.size());
    if (c.mean_sc >= threshold && c.unsafe) ++rep.masked;
    if (c.mean_sc < threshold && !c.unsafe) ++rep.overpenalized;
    total += c.mean_sc;
    rep.cells.push_back(c);
  }
  rep.mean_sc = grid.empty() ? 0.0 : total / static_cast<double>(grid.size());
  return rep;
}

}  // namespace cctb
