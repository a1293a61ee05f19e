#pragma once

// Fixed-step execution of one test case with event detection and trace recording.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "cctb/errors.hpp"
#include "cctb/generator.hpp"
#include "cctb/kinematics.hpp"
#include "cctb/policies.hpp"
#include "cctb/world.hpp"

namespace cctb {

inline constexpr double kStallSpeed = 0.05;

struct SimConfig {
  double dt = kDefaultDt;
  double t_max = 60.0;
  double t_stall = 5.0;
  double sensor_range = 200.0;
  std::uint64_t seed = 0;

  bool operator==(const SimConfig&) const = default;
};

inline void validate(const SimConfig& s) {
  if (!(s.dt > 0.0)) throw ConfigError("must be positive", "sim.dt");
  if (!(s.t_max > 0.0)) throw ConfigError("must be positive", "sim.t_max");
  if (!(s.t_stall > 0.0) || !(s.t_stall < s.t_max)) throw ConfigError("must be in (0, t_max)", "sim.t_stall");
  if (!(s.sensor_range > 0.0)) throw ConfigError("must be positive", "sim.sensor_range");
}

struct WorldState {
  VehicleState ego;
  std::optional<VehicleState> arriving;  // arriving-route coordinates
  std::optional<VehicleState> front;

  bool operator==(const WorldState&) const = default;
};

struct Snapshot {
  double t = 0.0;
  WorldState state;
  std::optional<LightPhase> light;

  bool operator==(const Snapshot&) const = default;
};

enum class EventKind { Collision, ZoneEntry, ZoneExit, Stall, BranchTaken, LaneDeparture, EmergencyBrake };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Collision: return "collision";
    case EventKind::ZoneEntry: return "zone_entry";
    case EventKind::ZoneExit: return "zone_exit";
    case EventKind::Stall: return "stall";
    case EventKind::BranchTaken: return "branch_taken";
    case EventKind::LaneDeparture: return "lane_departure";
    case EventKind::EmergencyBrake: return "emergency_brake";
  }
  return "?";
}

struct Event {
  EventKind kind = EventKind::ZoneEntry;
  Role vehicle = Role::Ego;  // striker for collisions
  double t = 0.0;
  Role other = Role::Ego;    // struck vehicle (collisions)
  double t_end = 0.0;        // stall end
  Branch branch = Branch::Assigned;

  bool operator==(const Event&) const = default;
};

struct Trace {
  double dt = kDefaultDt;
  WorldLayout layout;
  std::vector<Snapshot> snapshots;
  std::vector<Event> events;

  bool has_event(EventKind k, Role vehicle) const {
    return std::any_of(events.begin(), events.end(), [&](const Event& e) { return e.kind == k && e.vehicle == vehicle; });
  }
  const Event* find_event(EventKind k) const {
    for (const Event& e : events) {
      if (e.kind == k) return &e;
    }
    return nullptr;
  }

  bool operator==(const Trace&) const = default;
};

/// Layout for a test case: runout 1.2 B(v_max) + 5 past the zone, merge claim lead B(vl).
inline WorldLayout make_layout(const TestCase& tc, const DynamicsProfile& dyn) {
  WorldLayout l;
  l.ctx = tc.ctx;
  l.x_e = tc.x_e;
  l.x_a = tc.ctx.has_arriving() ? tc.x_a : kAbsent;
  l.x_f = tc.x_f;
  l.runout = 1.2 * brake_distance(dyn, dyn.v_max()) + 5.0;
  if (tc.ctx.conflict_kind == ConflictKind::Merge) l.claim_lead = brake_distance(dyn, tc.ctx.vl);
  if (tc.ctx.config_type == ConfigType::LaneChange) {
    l.inner_obstacle_s = tc.ctx.inner_front_gap.value_or(brake_distance(dyn, tc.v_e)) - tc.x_e;
  }
  return l;
}

// --- Collision and stall detection -------------------------------------------

struct Contact {
  Role striker = Role::Ego;
  Role struck = Role::Ego;

  bool operator==(const Contact&) const = default;
};

inline bool in_crossing_box(const WorldLayout& l, Role vehicle, const VehicleState& st) {
  const double w = l.ctx.lane_half_width;
  if (vehicle == Role::Ego) return st.branch == Branch::Assigned && std::abs(st.s - 0.5 * l.ctx.cd) <= w;
  return std::abs(st.s - 0.5 * l.ctx.cd_a) <= w;
}

/// Contact between two consecutive world states. Same-lane contact is a gap reaching zero or the
/// order of two vehicles flipping on the shared lane; the striker is the one that was behind
/// (ties go to the faster vehicle). Intersect contexts collide inside the crossing box, where the
/// later entrant strikes.
inline std::optional<Contact> detect_collision(const WorldLayout& l, const WorldState& prev, const WorldState& cur) {
  const VehicleState& ego = cur.ego;
  if (ego.branch == Branch::Assigned && cur.front && cur.front->s - ego.s <= 0.0) {
    return Contact{Role::Ego, Role::Front};
  }
  if (ego.branch == Branch::Alternate && l.inner_obstacle_s && *l.inner_obstacle_s - ego.s <= 0.0 &&
      prev.ego.s < *l.inner_obstacle_s) {
    return Contact{Role::Ego, Role::Front};
  }
  if (!cur.arriving || !prev.arriving) return std::nullopt;
  const VehicleState& arr = *cur.arriving;
  if (l.ctx.conflict_kind == ConflictKind::Merge) {
    const double wa = l.shared_coordinate(arr.s);
    if (cur.front && l.on_shared_lane(arr.s) && cur.front->s - wa <= 0.0) return Contact{Role::Arriving, Role::Front};
    if (ego.branch != Branch::Assigned || ego.s < l.ctx.cd || !l.on_shared_lane(arr.s)) return std::nullopt;
    const double d_prev = prev.ego.s - l.shared_coordinate(prev.arriving->s);
    const double d_cur = ego.s - wa;
    const bool flipped = (d_prev > 0.0 && d_cur < 0.0) || (d_prev < 0.0 && d_cur > 0.0);
    if (d_cur != 0.0 && !flipped) return std::nullopt;
    if (d_prev > 0.0) return Contact{Role::Arriving, Role::Ego};
    if (d_prev < 0.0) return Contact{Role::Ego, Role::Arriving};
    return ego.v >= arr.v ? Contact{Role::Ego, Role::Arriving} : Contact{Role::Arriving, Role::Ego};
  }
  if (l.ctx.conflict_kind == ConflictKind::Intersect) {
    if (!in_crossing_box(l, Role::Ego, ego) || !in_crossing_box(l, Role::Arriving, arr)) return std::nullopt;
    const bool ego_was = in_crossing_box(l, Role::Ego, prev.ego);
    const bool arr_was = in_crossing_box(l, Role::Arriving, *prev.arriving);
    if (ego_was && !arr_was) return Contact{Role::Arriving, Role::Ego};
    if (arr_was && !ego_was) return Contact{Role::Ego, Role::Arriving};
    return ego.v >= arr.v ? Contact{Role::Ego, Role::Arriving} : Contact{Role::Arriving, Role::Ego};
  }
  return std::nullopt;
}

struct StallInterval {
  double t_start = 0.0;
  double t_end = 0.0;

  bool operator==(const StallInterval&) const = default;
};

/// Maximal runs of samples below the stall speed lasting at least t_stall.
inline std::vector<StallInterval> detect_stall(const std::vector<std::pair<double, double>>& speed_samples,
                                               double t_stall) {
  std::vector<StallInterval> out;
  std::optional<double> start;
  double last = 0.0;
  auto close = [&] {
    if (start && last - *start >= t_stall - 1e-9) out.push_back({*start, last});
    start.reset();
  };
  for (const auto& [t, v] : speed_samples) {
    if (v < kStallSpeed) {
      if (!start) start = t;
      last = t;
    } else {
      close();
    }
  }
  close();
  return out;
}

inline std::vector<StallInterval> detect_stall(const Trace& trace, Role vehicle, double t_stall) {
  std::vector<std::pair<double, double>> samples;
  for (const Snapshot& s : trace.snapshots) {
    if (vehicle == Role::Ego) {
      samples.emplace_back(s.t, s.state.ego.v);
    } else if (vehicle == Role::Arriving && s.state.arriving) {
      samples.emplace_back(s.t, s.state.arriving->v);
    }
  }
  return detect_stall(samples, t_stall);
}

// --- Engine --------------------------------------------------------------------

namespace detail {

inline double arriving_decel(const DynamicsProfile& dyn, double vl) {
  const double b = brake_distance(dyn, vl);
  return b > 0.0 ? vl * vl / (2.0 * b) : 1e9;
}

inline double constant_decel_safe_speed(double b, double gap, double dt) {
  if (gap <= 0.0) return 0.0;
  const double bd = b * dt;
  return -bd + std::sqrt(bd * bd + 2.0 * b * gap);
}

}  // namespace detail

inline Observation observe(const WorldLayout& l, const DynamicsProfile& dyn, const SimConfig& sim, const WorldState& w,
                           double t, Branch route) {
  Observation o;
  o.own = w.ego;
  o.t = t;
  o.dt = sim.dt;
  o.ctx = &l.ctx;
  o.dyn = &dyn;
  o.dist_to_zone_entrance = -w.ego.s;
  o.dist_to_zone_exit = l.ctx.cd - w.ego.s;

  VehicleState me = w.ego;
  me.branch = route;
  auto consider = [&](std::optional<double> gap, bool moving) {
    if (gap && *gap <= sim.sensor_range && (!o.gap_front || *gap < *o.gap_front)) {
      o.gap_front = gap;
      o.leader_moving = moving;
    }
  };
  if (route == Branch::Assigned) {
    if (w.front) consider(gap_ahead(l, Role::Ego, me, Role::Front, *w.front), false);
    if (w.arriving) consider(gap_ahead(l, Role::Ego, me, Role::Arriving, *w.arriving), true);
  } else if (l.inner_obstacle_s && *l.inner_obstacle_s >= me.s) {
    consider(*l.inner_obstacle_s - me.s, false);
  }
  if (w.arriving && w.arriving->s <= l.ctx.cd_a && -w.arriving->s <= sim.sensor_range) {
    o.arriving = ArrivingObservation{-w.arriving->s, w.arriving->v};
  }
  if (l.ctx.has_light()) {
    const LightPhase p = light_phase(l.ctx, t, sim.dt);
    o.light = p;
    if (p == LightPhase::EgoGreen) {
      o.yellow_remaining = l.ctx.t_y;
    } else if (p == LightPhase::EgoYellow) {
      o.yellow_remaining = sim.dt + l.ctx.t_y - t;
    }
  }
  return o;
}

/// Runs one test case with a caller-owned policy instance.
inline Trace run_scenario(const TestCase& tc, const DynamicsProfile& dyn, Policy& policy, const SimConfig& sim) {
  validate(sim);
  if (tc.v_e < 0.0 || tc.v_e > dyn.v_max()) throw DomainError("v_e outside [0, v_max]");
  if (tc.x_e < 0.0 || tc.x_a < 0.0 || tc.x_f < 0.0) throw DomainError("distances must be non-negative");

  Trace tr;
  tr.dt = sim.dt;
  tr.layout = make_layout(tc, dyn);
  const WorldLayout& l = tr.layout;
  const ContextParams& ctx = l.ctx;
  const double b_arr = detail::arriving_decel(dyn, ctx.vl);

  WorldState w;
  w.ego = VehicleState{-tc.x_e, tc.v_e, 0.0, Branch::Assigned};
  if (l.arriving_present()) w.arriving = VehicleState{-tc.x_a, ctx.vl, 0.0, Branch::Assigned};
  if (l.front_present()) w.front = VehicleState{l.front_s(), 0.0, 0.0, Branch::Assigned};
  auto light_at = [&](double t) -> std::optional<LightPhase> {
    if (!ctx.has_light()) return std::nullopt;
    return light_phase(ctx, t, sim.dt);
  };
  tr.snapshots.push_back({0.0, w, light_at(0.0)});

  Rng rng(sim.seed);
  Branch route = Branch::Assigned;
  bool branch_decided = false;
  bool ego_entered = false, ego_exited = false, arr_entered = false, arr_exited = false;
  bool departed = false, arr_braking = false;

  const auto steps = static_cast<long>(std::llround(sim.t_max / sim.dt));
  for (long k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * sim.dt;
    const double t = static_cast<double>(k) * sim.dt;
    const WorldState prev = w;

    const Observation obs = observe(l, dyn, sim, prev, t_prev, branch_decided ? prev.ego.branch : route);
    Command cmd = decide(policy, obs, rng);
    if (cmd.branch_request && !branch_decided) route = *cmd.branch_request;
    cmd = clamp_command(dyn, prev.ego, cmd, sim.dt);
    w.ego = step_vehicle(dyn, prev.ego, cmd, sim.dt);
    if (!branch_decided && w.ego.s > 0.0) {
      branch_decided = true;
      w.ego.branch = route;
      tr.events.push_back(Event{EventKind::BranchTaken, Role::Ego, t, Role::Ego, 0.0, route});
    }

    if (prev.arriving) {
      const VehicleState& a = *prev.arriving;
      std::optional<double> gap;
      if (ctx.conflict_kind == ConflictKind::Merge) {
        if (prev.front) gap = gap_ahead(l, Role::Arriving, a, Role::Front, *prev.front);
        if (const auto g = gap_ahead(l, Role::Arriving, a, Role::Ego, prev.ego); g && (!gap || *g < *gap)) gap = g;
      } else if (in_crossing_box(l, Role::Ego, prev.ego) && prev.ego.v < kStallSpeed) {
        const double box_start = 0.5 * ctx.cd_a - ctx.lane_half_width;
        if (a.s < box_start) gap = box_start - a.s;
      }
      double target = ctx.vl;
      if (gap) {
        const double v_safe = detail::constant_decel_safe_speed(b_arr, *gap - detail::kStopMargin, sim.dt);
        target = std::min(target, v_safe < detail::kStopMargin ? 0.0 : v_safe);
      }
      const double v_next = std::clamp(target, std::max(0.0, a.v - b_arr * sim.dt), std::min(ctx.vl, a.v + b_arr * sim.dt));
      if (v_next < ctx.vl && !arr_braking) {
        arr_braking = true;
        tr.events.push_back(Event{EventKind::EmergencyBrake, Role::Arriving, t});
      }
      w.arriving = VehicleState{a.s + v_next * sim.dt, v_next, 0.0, Branch::Assigned};
    }

    const std::optional<LightPhase> light = light_at(t);
    const std::optional<Contact> contact = detect_collision(l, prev, w);

    const bool ego_in = in_zone(l, Role::Ego, w.ego);
    if (!ego_entered && ego_in) {
      ego_entered = true;
      tr.events.push_back(Event{EventKind::ZoneEntry, Role::Ego, t});
    }
    if (ego_entered && !ego_exited && w.ego.s > ctx.cd) {
      ego_exited = true;
      tr.events.push_back(Event{EventKind::ZoneExit, Role::Ego, t});
    }
    if (w.arriving) {
      if (!arr_entered && in_zone(l, Role::Arriving, *w.arriving)) {
        arr_entered = true;
        tr.events.push_back(Event{EventKind::ZoneEntry, Role::Arriving, t});
      }
      if (arr_entered && !arr_exited && w.arriving->s > ctx.cd_a) {
        arr_exited = true;
        tr.events.push_back(Event{EventKind::ZoneExit, Role::Arriving, t});
      }
    }
    if (!departed && std::abs(w.ego.lat) > ctx.lane_half_width) {
      departed = true;
      tr.events.push_back(Event{EventKind::LaneDeparture, Role::Ego, t});
    }
    tr.snapshots.push_back({t, w, light});

    if (contact) {
      tr.events.push_back(Event{EventKind::Collision, contact->striker, t, contact->struck});
      break;
    }
    const bool past_decision = w.ego.branch == Branch::Alternate || ego_exited;
    if (past_decision && w.ego.s >= ctx.cd + l.runout) break;
    // Stopped behind the front vehicle after the zone: nothing left to observe for the ego.
    if (ego_exited && w.ego.v == 0.0 && (!w.arriving || w.arriving->v == 0.0 || arr_exited)) break;
    if (!ego_entered && w.ego.branch == Branch::Assigned) {
      // The conflict resolved without the ego: caution held until the arriving vehicle cleared
      // the zone, or until the side light turned green with the ego at rest.
      if (w.arriving && w.arriving->s > ctx.cd_a) break;
      if (light && *light == LightPhase::SideGreen && w.ego.v == 0.0) break;
    }
  }

  for (Role r : {Role::Ego, Role::Arriving}) {
    for (const StallInterval& s : detect_stall(tr, r, sim.t_stall)) {
      tr.events.push_back(Event{EventKind::Stall, r, s.t_start, Role::Ego, s.t_end});
    }
  }
  std::stable_sort(tr.events.begin(), tr.events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return tr;
}

inline Trace run_scenario(const TestCase& tc, const DynamicsProfile& dyn, const PolicySpec& policy,
                          const SimConfig& sim) {
  const std::unique_ptr<Policy> p = make_policy(policy);
  return run_scenario(tc, dyn, *p, sim);
}

}  // namespace cctb
