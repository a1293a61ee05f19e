#pragma once

// Conflict contexts, zone geometry in route coordinates and the traffic-light
// phase machine.

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "cctb/errors.hpp"
#include "cctb/kinematics.hpp"

namespace cctb {

/// Distance used for an absent arriving or front vehicle.
inline constexpr double kAbsent = 1e9;

enum class ConfigType { Merging, LaneChange, CrossYield, CrossLight };
enum class ConflictKind { Merge, Intersect, None };

inline const char* to_string(ConfigType t) {
  switch (t) {
    case ConfigType::Merging: return "merging";
    case ConfigType::LaneChange: return "lane_change";
    case ConfigType::CrossYield: return "cross_yield";
    case ConfigType::CrossLight: return "cross_light";
  }
  return "?";
}

inline const char* to_string(ConflictKind k) {
  switch (k) {
    case ConflictKind::Merge: return "merge";
    case ConflictKind::Intersect: return "intersect";
    case ConflictKind::None: return "none";
  }
  return "?";
}

inline ConfigType parse_config_type(const std::string& name) {
  if (name == "merging" || name == "merge") return ConfigType::Merging;
  if (name == "lane_change" || name == "lanechange") return ConfigType::LaneChange;
  if (name == "cross_yield" || name == "crossyield") return ConfigType::CrossYield;
  if (name == "cross_light" || name == "crosslight") return ConfigType::CrossLight;
  throw ConfigError("unknown context type '" + name + "'", "context.type");
}

struct ContextParams {
  ConfigType config_type = ConfigType::Merging;
  ConflictKind conflict_kind = ConflictKind::Merge;
  double cd = 20.0;
  double vl = 8.0;
  double cd_a = 20.0;
  double t_y = 3.0;
  double t_ar = 2.0;
  double lane_half_width = 1.75;
  // LaneChange only: distance from the ego start to the inner-lane obstacle.
  // Unset means B(v_e), resolved per test case.
  std::optional<double> inner_front_gap;

  bool has_arriving() const noexcept { return conflict_kind != ConflictKind::None; }
  bool has_light() const noexcept { return config_type == ConfigType::CrossLight; }

  bool operator==(const ContextParams&) const = default;
};

/// Context with defaults applied, then overridden by `overrides`.
/// Keys: cd, vl, ty, tar, cda, lane_half_width, inner_front_gap.
inline ContextParams make_context(ConfigType type, const std::map<std::string, double>& overrides = {}) {
  ContextParams c;
  c.config_type = type;
  switch (type) {
    case ConfigType::Merging: c.conflict_kind = ConflictKind::Merge; break;
    case ConfigType::LaneChange:
      c.conflict_kind = ConflictKind::Merge;
      c.cd = 13.5;
      break;
    case ConfigType::CrossYield: c.conflict_kind = ConflictKind::Intersect; break;
    case ConfigType::CrossLight: c.conflict_kind = ConflictKind::None; break;
  }
  bool cda_set = false;
  for (const auto& [key, value] : overrides) {
    const std::string field = "context." + key;
    if (key == "inner_front_gap") {
      if (!(value >= 0.0)) throw ConfigError("must be non-negative", field);
      c.inner_front_gap = value;
      continue;
    }
    if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError("must be positive", field);
    if (key == "cd") {
      c.cd = value;
    } else if (key == "vl") {
      c.vl = value;
    } else if (key == "ty") {
      c.t_y = value;
    } else if (key == "tar") {
      c.t_ar = value;
    } else if (key == "cda") {
      c.cd_a = value;
      cda_set = true;
    } else if (key == "lane_half_width") {
      c.lane_half_width = value;
    } else {
      throw ConfigError("unknown context key", field);
    }
  }
  if (!cda_set) c.cd_a = c.cd;
  return c;
}

enum class LightPhase { EgoGreen, EgoYellow, AllRed, SideGreen };

inline const char* to_string(LightPhase p) {
  switch (p) {
    case LightPhase::EgoGreen: return "green";
    case LightPhase::EgoYellow: return "yellow";
    case LightPhase::AllRed: return "all_red";
    case LightPhase::SideGreen: return "side_green";
  }
  return "?";
}

inline LightPhase parse_light_phase(const std::string& s) {
  if (s == "green") return LightPhase::EgoGreen;
  if (s == "yellow") return LightPhase::EgoYellow;
  if (s == "all_red") return LightPhase::AllRed;
  if (s == "side_green") return LightPhase::SideGreen;
  throw ConfigError("unknown light phase '" + s + "'", "light");
}

/// Green at t=0, yellow from the next step for t_y, then all-red for t_ar, then side green.
inline LightPhase light_phase(const ContextParams& ctx, double t, double dt) {
  if (!ctx.has_light()) throw ContractError("light_phase called for a context without a traffic light");
  if (t <= 0.0) return LightPhase::EgoGreen;
  if (t <= dt + ctx.t_y) return LightPhase::EgoYellow;
  if (t <= dt + ctx.t_y + ctx.t_ar) return LightPhase::AllRed;
  return LightPhase::SideGreen;
}

enum class Role { Ego, Arriving, Front };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::Ego: return "ego";
    case Role::Arriving: return "arriving";
    case Role::Front: return "front";
  }
  return "?";
}

inline Role parse_role(const std::string& s) {
  if (s == "ego") return Role::Ego;
  if (s == "arriving") return Role::Arriving;
  if (s == "front") return Role::Front;
  throw ConfigError("unknown vehicle '" + s + "'", "vehicle");
}

/// Geometry of one test case. Ego route: zone (0, cd], front at cd + x_f, ego starts at -x_e.
/// Arriving route: zone (0, cd_a], starts at -x_a; for merge contexts u maps to cd + (u - cd_a)
/// on the shared lane past the zone exit.
struct WorldLayout {
  ContextParams ctx;
  double x_e = 0.0;
  double x_a = kAbsent;
  double x_f = kAbsent;
  // Merge contexts: the arriving vehicle counts as occupying the zone from B(vl) before its entrance.
  double claim_lead = 0.0;
  double runout = 0.0;
  // LaneChange only: obstacle position on the alternate (non-changing) branch, ego coordinates.
  std::optional<double> inner_obstacle_s;

  bool arriving_present() const noexcept { return ctx.has_arriving() && x_a < kAbsent; }
  bool front_present() const noexcept { return x_f < kAbsent; }
  double front_s() const noexcept { return ctx.cd + x_f; }
  double shared_coordinate(double u) const noexcept { return ctx.cd + (u - ctx.cd_a); }
  bool on_shared_lane(double u) const noexcept {
    return ctx.conflict_kind == ConflictKind::Merge && u >= ctx.cd_a;
  }

  bool operator==(const WorldLayout&) const = default;
};

// Entry is open so a vehicle waiting exactly at the entrance is outside.
inline constexpr double kZoneEps = 1e-9;

inline bool in_zone(const WorldLayout& layout, Role vehicle, const VehicleState& state) {
  switch (vehicle) {
    case Role::Ego:
      return state.branch == Branch::Assigned && state.s > kZoneEps && state.s <= layout.ctx.cd;
    case Role::Arriving:
      return layout.ctx.has_arriving() && state.s > kZoneEps && state.s <= layout.ctx.cd_a;
    case Role::Front: return false;
  }
  return false;
}

/// Distance from follower to leader along their common lane, or none when they do not share one
/// or the leader is behind. Merge contexts: the leader must already be on the shared lane; the
/// follower may still be approaching the merge point.
inline std::optional<double> gap_ahead(const WorldLayout& layout, Role follower_role, const VehicleState& follower,
                                       Role leader_role, const VehicleState& leader) {
  if (follower_role == Role::Front || follower_role == leader_role) return std::nullopt;
  const ContextParams& c = layout.ctx;
  if (follower_role == Role::Ego && follower.branch != Branch::Assigned) return std::nullopt;
  if (leader_role == Role::Ego && leader.branch != Branch::Assigned) return std::nullopt;

  auto position = [&](Role role, const VehicleState& st) { return role == Role::Arriving ? layout.shared_coordinate(st.s) : st.s; };
  const bool involves_arriving = follower_role == Role::Arriving || leader_role == Role::Arriving;
  if (involves_arriving) {
    if (c.conflict_kind != ConflictKind::Merge) return std::nullopt;
    const bool leader_shared = leader_role == Role::Arriving ? layout.on_shared_lane(leader.s) : leader.s >= c.cd;
    if (!leader_shared) return std::nullopt;
  }
  const double gap = position(leader_role, leader) - position(follower_role, follower);
  if (gap < 0.0) return std::nullopt;
  return gap;
}

}  // namespace cctb
