#pragma once

// Safety properties p1-p4 and the verdict decision ladder.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cctb/errors.hpp"
#include "cctb/generator.hpp"
#include "cctb/simulator.hpp"
#include "cctb/verdict.hpp"
#include "cctb/world.hpp"

namespace cctb {

namespace detail {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Time intervals during which a piecewise-linear trajectory lies in (lo, hi].
inline std::vector<Interval> occupancy(const std::vector<std::pair<double, double>>& ts, double lo, double hi) {
  std::vector<Interval> out;
  auto inside = [&](double s) { return s > lo && s <= hi; };
  bool open = false;
  double start = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto [t, s] = ts[i];
    if (i == 0) {
      open = inside(s);
      start = t;
      continue;
    }
    const auto [t0, s0] = ts[i - 1];
    auto cross = [&](double level) { return s == s0 ? t : t0 + (t - t0) * (level - s0) / (s - s0); };
    if (!open && inside(s)) {
      open = true;
      start = (s0 <= lo && s > lo) ? cross(lo) : t0;
    } else if (open && !inside(s)) {
      out.push_back({start, (s0 <= hi && s > hi) ? cross(hi) : (s <= lo && s0 > lo ? cross(lo) : t)});
      open = false;
    }
  }
  if (open) out.push_back({start, ts.back().first});
  return out;
}

inline bool overlaps(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  for (const Interval& x : a) {
    for (const Interval& y : b) {
      if (x.lo < y.hi && y.lo < x.hi) return true;
    }
  }
  return false;
}

inline void require_well_formed(const Trace& trace) {
  if (trace.snapshots.empty()) throw ClassificationError("trace has no snapshots");
  if (!(trace.dt > 0.0)) throw ClassificationError("trace dt must be positive");
  for (std::size_t i = 1; i < trace.snapshots.size(); ++i) {
    const double step = trace.snapshots[i].t - trace.snapshots[i - 1].t;
    if (!(step > 0.0) || std::abs(step - trace.dt) > 1e-6) {
      throw ClassificationError("snapshots must be uniformly spaced by dt");
    }
  }
}

}  // namespace detail

/// True when property p is violated. Zone occupancy for p1 is evaluated on the linear
/// interpolation between snapshots; in merge contexts the arriving vehicle occupies the
/// zone from the point where it can no longer stop before the entrance (claim lead).
inline bool check_property(SafetyProp p, const Trace& trace, const ContextParams& ctx) {
  if ((p == SafetyProp::P3 || p == SafetyProp::P4) && !ctx.has_light()) {
    throw ContractError("p3/p4 are only defined for traffic-light contexts");
  }
  const WorldLayout& l = trace.layout;
  switch (p) {
    case SafetyProp::P1: {
      std::vector<std::pair<double, double>> ego, arr;
      for (const Snapshot& s : trace.snapshots) {
        if (s.state.ego.branch == Branch::Assigned) ego.emplace_back(s.t, s.state.ego.s);
        if (s.state.arriving) arr.emplace_back(s.t, s.state.arriving->s);
      }
      if (ego.empty() || arr.empty()) return false;
      return detail::overlaps(detail::occupancy(ego, kZoneEps, ctx.cd),
                              detail::occupancy(arr, std::min(kZoneEps, -l.claim_lead), ctx.cd_a));
    }
    case SafetyProp::P2: {
      for (const Event& e : trace.events) {
        if (e.kind != EventKind::Stall || e.vehicle != Role::Ego) continue;
        bool inside = true;
        for (const Snapshot& s : trace.snapshots) {
          if (s.t >= e.t - 1e-9 && s.t <= e.t_end + 1e-9 && !in_zone(l, Role::Ego, s.state.ego)) inside = false;
        }
        if (inside) return true;
      }
      return false;
    }
    case SafetyProp::P3: {
      const Event* entry = nullptr;
      for (const Event& e : trace.events) {
        if (e.kind == EventKind::ZoneEntry && e.vehicle == Role::Ego) entry = &e;
      }
      if (!entry) return false;
      for (const Snapshot& s : trace.snapshots) {
        if (std::abs(s.t - entry->t) < 1e-9) {
          return s.light && (*s.light == LightPhase::AllRed || *s.light == LightPhase::SideGreen);
        }
      }
      return false;
    }
    case SafetyProp::P4:
      return std::any_of(trace.snapshots.begin(), trace.snapshots.end(), [&](const Snapshot& s) {
        return s.light && *s.light == LightPhase::SideGreen && in_zone(l, Role::Ego, s.state.ego);
      });
  }
  return false;
}

inline PropSet violated_properties(const Trace& trace, const ContextParams& ctx) {
  PropSet out;
  std::vector<SafetyProp> props{SafetyProp::P1, SafetyProp::P2};
  if (ctx.has_light()) props.insert(props.end(), {SafetyProp::P3, SafetyProp::P4});
  for (SafetyProp p : props) {
    if (check_property(p, trace, ctx)) out.insert(p);
  }
  return out;
}

/// Decision ladder, first match wins: collision, route fault, blockage, progress, caution.
inline Verdict classify(const Trace& trace, const TestCase& tc, const CriticalValues& analysis, const SimConfig& sim) {
  detail::require_well_formed(trace);
  const ContextParams& ctx = tc.ctx;
  const WorldLayout& l = trace.layout;

  if (const Event* c = trace.find_event(EventKind::Collision)) {
    if (c->vehicle == Role::Ego && c->other == Role::Front) return Verdict::of(Category::Af);
    if (c->vehicle == Role::Ego) return Verdict::of(Category::Ae);
    return Verdict::of(Category::Aa);
  }

  const PropSet props = violated_properties(trace, ctx);

  // Route faults, attributed per vehicle; an ego fault decides the kind when subjects differ.
  auto fault_of = [&](Role r) -> std::optional<RouteKind> {
    bool changed = false, deviated = false;
    for (const Event& e : trace.events) {
      if (e.vehicle != r) continue;
      if (e.kind == EventKind::BranchTaken && e.branch != Branch::Assigned) changed = true;
      if (e.kind == EventKind::LaneDeparture) deviated = true;
    }
    if (changed && deviated) return RouteKind::ChangedThenDeviated;
    if (changed) return RouteKind::ChangedRoute;
    if (deviated) return RouteKind::DeviatedRoad;
    return std::nullopt;
  };
  const auto ego_fault = fault_of(Role::Ego);
  const auto arr_fault = fault_of(Role::Arriving);
  if (ego_fault || arr_fault) {
    const Subject subject = ego_fault && arr_fault ? Subject::Both : ego_fault ? Subject::Ego : Subject::Arriving;
    return Verdict::route_fault(ego_fault ? *ego_fault : *arr_fault, subject, props);
  }

  const bool ego_exited = trace.has_event(EventKind::ZoneExit, Role::Ego);
  // Blockage needs an ego stuck inside the zone; an ego waiting at the entrance blocks nobody.
  if (!ego_exited && l.arriving_present() && trace.has_event(EventKind::ZoneEntry, Role::Ego)) {
    const auto ego_stalls = detect_stall(trace, Role::Ego, sim.t_stall);
    const auto arr_stalls = detect_stall(trace, Role::Arriving, sim.t_stall);
    for (const StallInterval& e : ego_stalls) {
      for (const StallInterval& a : arr_stalls) {
        const double overlap = std::min(e.t_end, a.t_end) - std::max(e.t_start, a.t_start);
        if (overlap < sim.t_stall - 1e-9) continue;
        // The arriving vehicle must be held at or before the zone during the mutual stall.
        for (const Snapshot& s : trace.snapshots) {
          if (s.t >= std::max(e.t_start, a.t_start) - 1e-9 && s.state.arriving && s.state.arriving->s <= ctx.cd_a) {
            return Verdict::of(Category::Blk, props);
          }
        }
      }
    }
  }

  if (ego_exited) return props.empty() ? Verdict::of(Category::PS) : Verdict::of(Category::PU, props);
  if (!props.empty()) return Verdict::of(Category::CU, props);
  const bool progress_was_safe = analysis.feasible && analysis.x_f_hat && detail::at_least(tc.x_f, *analysis.x_f_hat) &&
                                 (!analysis.x_a_hat || !ctx.has_arriving() || detail::at_least(tc.x_a, *analysis.x_a_hat));
  return Verdict::of(progress_was_safe ? Category::CO : Category::CS);
}

// --- Aggregation -----------------------------------------------------------------

struct CellResult {
  std::map<std::string, int> counts;
  int n = 0;
  std::string dominant;

  bool operator==(const CellResult&) const = default;
};

/// Severity comparison on encoded verdicts; ties within a category fall back to the encoding.
inline bool more_severe(const std::string& a, const std::string& b) {
  const int sa = severity(parse_verdict(a).category);
  const int sb = severity(parse_verdict(b).category);
  if (sa != sb) return sa > sb;
  return a < b;
}

inline CellResult aggregate_cell(const std::vector<Verdict>& verdicts) {
  if (verdicts.empty()) throw ClassificationError("cannot aggregate an empty verdict set");
  CellResult r;
  for (const Verdict& v : verdicts) ++r.counts[to_string(v)];
  r.n = static_cast<int>(verdicts.size());
  for (const auto& [k, c] : r.counts) {
    if (r.dominant.empty() || c > r.counts[r.dominant] || (c == r.counts[r.dominant] && more_severe(k, r.dominant))) {
      r.dominant = k;
    }
  }
  return r;
}

/// Entries ordered by severity, most severe first.
inline std::vector<std::pair<std::string, int>> ordered_counts(const CellResult& r) {
  std::vector<std::pair<std::string, int>> out(r.counts.begin(), r.counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return more_severe(a.first, b.first); });
  return out;
}

/// `Aa(2/5);PS(3/5)`.
inline std::string encode_cell(const CellResult& r) {
  std::string out;
  for (const auto& [k, c] : ordered_counts(r)) {
    if (!out.empty()) out += ';';
    out += k + "(" + std::to_string(c) + "/" + std::to_string(r.n) + ")";
  }
  return out;
}

}  // namespace cctb
