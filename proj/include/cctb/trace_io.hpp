#pragma once

// Trace export: long-format CSV (one row per vehicle per step) and JSON.

#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cctb/ad_tables_io.hpp"
#include "cctb/simulator.hpp"

namespace cctb {

inline constexpr const char* kTraceHeader = "t,vehicle,s,v,lat,branch,light";

/// Rows `t,vehicle,s,v,lat,branch,light`, followed by `#LAYOUT` and `#EVENT` comment lines.
inline void write_trace_csv(std::ostream& out, const Trace& tr) {
  out << kTraceHeader << '\n';
  auto row = [&](double t, Role role, const VehicleState& v, const std::optional<LightPhase>& light) {
    out << format_number(t) << ',' << to_string(role) << ',' << format_number(v.s) << ',' << format_number(v.v) << ','
        << format_number(v.lat) << ',' << to_string(v.branch) << ',' << (light ? to_string(*light) : "") << '\n';
  };
  for (const Snapshot& s : tr.snapshots) {
    row(s.t, Role::Ego, s.state.ego, s.light);
    if (s.state.arriving) row(s.t, Role::Arriving, *s.state.arriving, s.light);
    if (s.state.front) row(s.t, Role::Front, *s.state.front, s.light);
  }
  const WorldLayout& l = tr.layout;
  out << "#LAYOUT,context=" << to_string(l.ctx.config_type) << ",cd=" << format_number(l.ctx.cd)
      << ",x_e=" << format_number(l.x_e) << ",x_a=" << (l.arriving_present() ? format_number(l.x_a) : "none")
      << ",x_f=" << (l.front_present() ? format_number(l.x_f) : "none") << ",runout=" << format_number(l.runout) << '\n';
  for (const Event& e : tr.events) {
    out << "#EVENT," << to_string(e.kind) << ',' << to_string(e.vehicle) << ",t=" << format_number(e.t);
    if (e.kind == EventKind::Collision) out << ",struck=" << to_string(e.other);
    if (e.kind == EventKind::Stall) out << ",t_end=" << format_number(e.t_end);
    if (e.kind == EventKind::BranchTaken) out << ",branch=" << to_string(e.branch);
    out << '\n';
  }
}

inline std::string trace_to_csv(const Trace& tr) {
  std::ostringstream os;
  write_trace_csv(os, tr);
  return os.str();
}

inline nlohmann::json trace_to_json(const Trace& tr) {
  using nlohmann::json;
  auto state = [](const VehicleState& v) {
    return json{{"s", v.s}, {"v", v.v}, {"lat", v.lat}, {"branch", to_string(v.branch)}};
  };
  json snaps = json::array();
  for (const Snapshot& s : tr.snapshots) {
    json j{{"t", s.t}, {"ego", state(s.state.ego)}};
    if (s.state.arriving) j["arriving"] = state(*s.state.arriving);
    if (s.state.front) j["front"] = state(*s.state.front);
    if (s.light) j["light"] = to_string(*s.light);
    snaps.push_back(std::move(j));
  }
  json events = json::array();
  for (const Event& e : tr.events) {
    json j{{"kind", to_string(e.kind)}, {"vehicle", to_string(e.vehicle)}, {"t", e.t}};
    if (e.kind == EventKind::Collision) j["struck"] = to_string(e.other);
    if (e.kind == EventKind::Stall) j["t_end"] = e.t_end;
    if (e.kind == EventKind::BranchTaken) j["branch"] = to_string(e.branch);
    events.push_back(std::move(j));
  }
  const WorldLayout& l = tr.layout;
  json layout{{"context", to_string(l.ctx.config_type)}, {"cd", l.ctx.cd}, {"x_e", l.x_e}, {"runout", l.runout}};
  layout["x_a"] = l.arriving_present() ? json(l.x_a) : json(nullptr);
  layout["x_f"] = l.front_present() ? json(l.x_f) : json(nullptr);
  return json{{"dt", tr.dt}, {"layout", layout}, {"snapshots", snaps}, {"events", events}};
}

}  // namespace cctb
