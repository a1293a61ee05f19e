#pragma once

// Hand-built traces, one per verdict class. Positions come from simple scripts
// (piecewise constant speed), events are written out explicitly.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cctb/cctb.hpp"

namespace fixtures {

using cctb::Branch;
using cctb::Event;
using cctb::EventKind;
using cctb::Role;

struct Fixture {
  std::string label;
  cctb::TestCase tc;
  cctb::Trace trace;
  cctb::CriticalValues analysis;
};

using Script = std::function<double(double t)>;

/// Position that holds `s0` until t0, then moves at speed v (optionally stopping at s_stop).
inline Script move(double s0, double t0, double v, std::optional<double> s_stop = std::nullopt) {
  return [=](double t) {
    const double s = t <= t0 ? s0 : s0 + v * (t - t0);
    return s_stop ? std::min(s, *s_stop) : s;
  };
}

struct Builder {
  explicit Builder(cctb::ContextParams c) : ctx(std::move(c)) {}

  cctb::ContextParams ctx;
  double x_e = 0.0;
  double x_a = cctb::kAbsent;
  double x_f = cctb::kAbsent;
  double dt = 0.1;
  double duration = 10.0;
  Script ego;
  std::optional<Script> arriving;
  std::vector<Event> events;
  std::function<double(double)> lat = [](double) { return 0.0; };
  Branch branch = Branch::Assigned;

  cctb::Trace build() const {
    cctb::Trace tr;
    tr.dt = dt;
    tr.layout.ctx = ctx;
    tr.layout.x_e = x_e;
    tr.layout.x_a = x_a;
    tr.layout.x_f = x_f;
    tr.layout.runout = 10.0;
    const long n = std::lround(duration / dt);
    for (long k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) * dt;
      cctb::Snapshot s;
      s.t = t;
      const double es = ego(t);
      const double ev = k == 0 ? std::max(0.0, (ego(dt) - es) / dt) : (es - ego(t - dt)) / dt;
      s.state.ego = cctb::VehicleState{es, std::max(0.0, ev), lat(t), es > 0.0 ? branch : Branch::Assigned};
      if (arriving) {
        const double as = (*arriving)(t);
        const double av = k == 0 ? ((*arriving)(dt) - as) / dt : (as - (*arriving)(t - dt)) / dt;
        s.state.arriving = cctb::VehicleState{as, std::max(0.0, av), 0.0, Branch::Assigned};
      }
      if (x_f < cctb::kAbsent) s.state.front = cctb::VehicleState{ctx.cd + x_f, 0.0, 0.0, Branch::Assigned};
      if (ctx.has_light()) s.light = cctb::light_phase(ctx, t, dt);
      tr.snapshots.push_back(s);
    }
    tr.events = events;
    return tr;
  }
};

inline Event ev(EventKind kind, Role vehicle, double t) { return Event{kind, vehicle, t}; }

inline Event collision(Role striker, Role struck, double t) {
  Event e{EventKind::Collision, striker, t};
  e.other = struck;
  return e;
}

inline Event stall(Role vehicle, double t0, double t1) {
  Event e{EventKind::Stall, vehicle, t0};
  e.t_end = t1;
  return e;
}

inline Event branch_taken(Branch b, double t) {
  Event e{EventKind::BranchTaken, Role::Ego, t};
  e.branch = b;
  return e;
}

inline Fixture make(std::string label, const Builder& b, const cctb::DynamicsProfile& dyn, double v_e = 0.0) {
  Fixture f;
  f.label = std::move(label);
  f.tc = cctb::TestCase{b.ctx, v_e, b.x_e, b.x_a, b.x_f};
  f.trace = b.build();
  f.analysis = cctb::critical_values(b.ctx, dyn, v_e);
  return f;
}

inline cctb::DynamicsProfile reference_profile() { return cctb::DynamicsProfile::closed_form(2.0, 4.0, 6.5); }

/// Sim settings the fixtures are classified with (t_stall matters for Blk and p2).
inline cctb::SimConfig fixture_sim() {
  cctb::SimConfig s;
  s.dt = 0.1;
  s.t_stall = 3.0;
  return s;
}

inline std::vector<Fixture> all() {
  using cctb::ConfigType;
  const cctb::DynamicsProfile dyn = reference_profile();
  const cctb::ContextParams merge = cctb::make_context(ConfigType::Merging);
  const cctb::ContextParams yield = cctb::make_context(ConfigType::CrossYield);
  const cctb::ContextParams light = cctb::make_context(ConfigType::CrossLight, {{"cd", 5.0}});
  std::vector<Fixture> out;

  {  // Waits at the entrance while a close arriving vehicle passes.
    Builder b{merge};
    b.x_a = 30.0;
    b.ego = move(0.0, 0.0, 0.0);
    b.arriving = move(-30.0, 0.0, 8.0);
    b.duration = 7.0;
    b.events = {ev(EventKind::ZoneEntry, Role::Arriving, 3.8), ev(EventKind::ZoneExit, Role::Arriving, 6.3)};
    out.push_back(make("CS", b, dyn));
  }
  {  // Waits although the road is empty.
    Builder b{merge};
    b.ego = move(0.0, 0.0, 0.0);
    b.duration = 6.0;
    out.push_back(make("CO", b, dyn));
  }
  {  // Clean drive through the zone, nobody around.
    Builder b{merge};
    b.ego = move(0.0, 0.0, 5.0);
    b.events = {ev(EventKind::ZoneEntry, Role::Ego, 0.1), ev(EventKind::ZoneExit, Role::Ego, 4.1)};
    out.push_back(make("PS", b, dyn));
  }
  {  // Shares the zone with the arriving vehicle but gets through untouched.
    Builder b{merge};
    b.x_a = 30.0;
    b.ego = move(0.0, 0.0, 5.0);
    b.arriving = move(-30.0, 0.0, 8.0, 15.0);
    b.events = {ev(EventKind::ZoneEntry, Role::Ego, 0.1), ev(EventKind::ZoneEntry, Role::Arriving, 3.8),
                ev(EventKind::ZoneExit, Role::Ego, 4.1)};
    out.push_back(make("PU[p1]", b, dyn));
  }
  {  // Enters during all-red and leaves before the side road turns green.
    Builder b{light};
    b.x_e = 1.0;
    b.ego = move(-1.0, 3.5, 5.0);
    b.duration = 6.0;
    b.events = {ev(EventKind::ZoneEntry, Role::Ego, 3.8), ev(EventKind::ZoneExit, Role::Ego, 4.8)};
    out.push_back(make("PU[p3]", b, dyn));
  }
  {  // Stops inside the zone with nobody else around.
    Builder b{merge};
    b.ego = move(0.0, 0.0, 5.0, 5.0);
    b.events = {ev(EventKind::ZoneEntry, Role::Ego, 0.1), stall(Role::Ego, 1.1, 10.0)};
    out.push_back(make("CU[p2]", b, dyn));
  }
  {  // Runs into the arriving vehicle inside the crossing box.
    Builder b{yield};
    b.x_a = 10.0;
    b.ego = move(0.0, 0.0, 5.0, 10.0);
    b.arriving = move(-10.0, 0.0, 8.0, 10.0);
    b.duration = 2.5;
    b.events = {ev(EventKind::ZoneEntry, Role::Ego, 0.1), ev(EventKind::ZoneEntry, Role::Arriving, 1.3),
                collision(Role::Ego, Role::Arriving, 2.0)};
    out.push_back(make("Ae", b, dyn));
  }
  {  // Struck by the arriving vehicle.
    Builder b{yield};
    b.x_a = 14.0;
    b.ego = move(0.0, 0.0, 5.0, 10.0);
    b.arriving = move(-14.0, 0.0, 8.0, 10.0);
    b.duration = 3.0;
    b.events = {ev(EventKind::ZoneEntry, Role::Ego, 0.1), ev(EventKind::ZoneEntry, Role::Arriving, 1.8),
                collision(Role::Arriving, Role::Ego, 3.0)};
    out.push_back(make("Aa", b, dyn));
  }
  {  // Rear-ends the static front vehicle after the zone.
    Builder b{merge};
    b.x_f = 2.0;
    b.ego = move(0.0, 0.0, 5.0, 22.0);
    b.duration = 4.5;
    b.events = {ev(EventKind::ZoneEntry, Role::Ego, 0.1), ev(EventKind::ZoneExit, Role::Ego, 4.1),
                collision(Role::Ego, Role::Front, 4.4)};
    out.push_back(make("Af", b, dyn));
  }
  {  // Stuck in the zone while the arriving vehicle waits behind it.
    Builder b{merge};
    b.x_a = 20.0;
    b.ego = move(0.0, 0.0, 5.0, 5.0);
    b.arriving = move(-20.0, 0.0, 5.0, -5.0);
    b.events = {ev(EventKind::ZoneEntry, Role::Ego, 0.1), stall(Role::Ego, 1.1, 10.0),
                stall(Role::Arriving, 3.1, 10.0)};
    out.push_back(make("Blk", b, dyn));
  }
  {  // Takes the other branch at the decision point.
    Builder b{merge};
    b.ego = move(0.0, 0.0, 5.0);
    b.branch = Branch::Alternate;
    b.events = {branch_taken(Branch::Alternate, 0.1)};
    out.push_back(make("CRe", b, dyn));
  }
  {  // Leaves the lane after the zone.
    Builder b{merge};
    b.ego = move(0.0, 0.0, 5.0);
    b.lat = [](double t) { return t > 4.0 ? 1.5 * (t - 4.0) : 0.0; };
    b.events = {branch_taken(Branch::Assigned, 0.1), ev(EventKind::ZoneEntry, Role::Ego, 0.1),
                ev(EventKind::ZoneExit, Role::Ego, 4.1), ev(EventKind::LaneDeparture, Role::Ego, 5.2)};
    out.push_back(make("DRe", b, dyn));
  }
  {  // Takes the other branch and then leaves its lane.
    Builder b{merge};
    b.ego = move(0.0, 0.0, 5.0);
    b.branch = Branch::Alternate;
    b.lat = [](double t) { return t > 4.0 ? 1.5 * (t - 4.0) : 0.0; };
    b.events = {branch_taken(Branch::Alternate, 0.1), ev(EventKind::LaneDeparture, Role::Ego, 5.2)};
    out.push_back(make("CDRe", b, dyn));
  }
  return out;
}

}  // namespace fixtures
