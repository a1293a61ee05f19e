#pragma once

// Autopilot interface and the reference fleet of control policies.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "cctb/errors.hpp"
#include "cctb/kinematics.hpp"
#include "cctb/world.hpp"

namespace cctb {

/// Seeded random source with a platform-independent uniform draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

struct ArrivingObservation {
  double dist_to_zone = 0.0;  // distance to the entrance of its zone; negative once inside
  double speed = 0.0;
};

struct Observation {
  VehicleState own;
  double t = 0.0;
  double dt = kDefaultDt;
  double dist_to_zone_entrance = 0.0;  // signed
  double dist_to_zone_exit = 0.0;
  std::optional<double> gap_front;  // nearest leader on the ego's lane
  bool leader_moving = false;
  std::optional<ArrivingObservation> arriving;  // none beyond sensor range or once past the zone
  std::optional<LightPhase> light;
  double yellow_remaining = 0.0;  // time left before the light turns red
  const ContextParams* ctx = nullptr;
  const DynamicsProfile* dyn = nullptr;
};

// --- Feasibility -----------------------------------------------------------

/// Thresholds for committing to progress from a state at d_entry before the zone entrance
/// and d_exit before its exit, assuming full acceleration.
struct ProgressThresholds {
  bool reachable = false;
  double t_entry = 0.0;
  double t_exit = 0.0;
  double x_f_hat = 0.0;
  std::optional<double> x_a_hat;
};

inline ProgressThresholds progress_thresholds(const ContextParams& ctx, const DynamicsProfile& dyn, double v,
                                              double d_entry, double d_exit) {
  ProgressThresholds th;
  try {
    th.t_entry = accel_time(dyn, v, std::max(0.0, d_entry));
    th.t_exit = accel_time(dyn, v, std::max(0.0, d_exit));
    th.x_f_hat = brake_distance(dyn, accel_speed(dyn, v, std::max(0.0, d_exit)));
  } catch (const UnreachableError&) {
    return th;
  }
  th.reachable = true;
  if (ctx.conflict_kind == ConflictKind::Merge) {
    th.x_a_hat = brake_distance(dyn, ctx.vl) + ctx.vl * th.t_exit;
  } else if (ctx.conflict_kind == ConflictKind::Intersect) {
    th.x_a_hat = ctx.vl * th.t_exit;
  }
  return th;
}

inline bool light_times_ok(const ContextParams& ctx, const ProgressThresholds& th, double yellow_remaining) {
  return th.t_entry <= yellow_remaining && th.t_exit <= yellow_remaining + ctx.t_ar;
}

/// B(v_e) <= x_e: the vehicle can stop before the zone.
inline bool caution_feasible(const DynamicsProfile& dyn, double v_e, double x_e) {
  return brake_distance(dyn, v_e) <= x_e;
}

/// Whether full-acceleration progress through the zone is safe for the given initial distances.
inline bool progress_feasible(const ContextParams& ctx, const DynamicsProfile& dyn, double v_e, double x_e,
                              double x_a, double x_f) {
  if (v_e < 0.0 || x_e < 0.0 || x_a < 0.0 || x_f < 0.0) throw DomainError("distances must be non-negative");
  const ProgressThresholds th = progress_thresholds(ctx, dyn, v_e, x_e, x_e + ctx.cd);
  if (!th.reachable) return false;
  if (th.x_f_hat > x_f) return false;
  if (th.x_a_hat && *th.x_a_hat > x_a) return false;
  if (ctx.has_light() && !light_times_ok(ctx, th, ctx.t_y)) return false;
  return true;
}

/// Largest speed v1 such that after one step at v1 the remaining gap still covers B(v1).
inline double safe_speed(const DynamicsProfile& dyn, double gap, double dt) {
  if (gap <= 0.0) return 0.0;
  if (const auto* c = dyn.closed()) {
    const double bd = c->b_max * dt;
    return std::min(dyn.v_max(), -bd + std::sqrt(bd * bd + 2.0 * c->b_max * gap));
  }
  auto fits = [&](double v) { return brake_distance(dyn, v) + v * dt <= gap; };
  if (fits(dyn.v_max())) return dyn.v_max();
  double lo = 0.0;
  double hi = dyn.v_max();
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

// --- Policies ----------------------------------------------------------------

enum class PolicyKind { SafeTwoPhase, Aggressive, Overcautious, RedLightIgnorer, Drifter, Noisy };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::SafeTwoPhase: return "safe_two_phase";
    case PolicyKind::Aggressive: return "aggressive";
    case PolicyKind::Overcautious: return "overcautious";
    case PolicyKind::RedLightIgnorer: return "red_light_ignorer";
    case PolicyKind::Drifter: return "drifter";
    case PolicyKind::Noisy: return "noisy";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(const std::string& s) {
  for (PolicyKind k : {PolicyKind::SafeTwoPhase, PolicyKind::Aggressive, PolicyKind::Overcautious,
                       PolicyKind::RedLightIgnorer, PolicyKind::Drifter, PolicyKind::Noisy}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown policy '" + s + "'", "policy.name");
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::SafeTwoPhase;
  PolicyKind inner = PolicyKind::SafeTwoPhase;  // wrapped policy for Noisy
  double sigma = 0.0;                           // Noisy threshold perturbation bound
  double margin = 0.0;                          // commit margin m_c, m
  double g_min = 1.0;                           // standstill gap behind a moving leader, m
  double drift_rate = 1.5;                      // Drifter lateral rate after the zone, m/s
  bool alternate_branch = false;                // Drifter takes the alternate branch
  bool force_commit = false;                    // commit at t=0 and hold full throttle through the zone

  bool operator==(const PolicySpec&) const = default;
};

inline void validate(const PolicySpec& p) {
  if (p.kind == PolicyKind::Noisy && p.inner == PolicyKind::Noisy) {
    throw ConfigError("noisy must wrap a non-noisy policy", "policy.inner");
  }
  if (!(p.sigma >= 0.0) || p.sigma >= 1.0) throw ConfigError("must be in [0, 1)", "policy.sigma");
  if (!(p.margin >= 0.0)) throw ConfigError("must be non-negative", "policy.margin");
  if (!(p.g_min >= 0.0)) throw ConfigError("must be non-negative", "policy.gmin");
}

inline std::string describe(const PolicySpec& p) {
  std::string out = to_string(p.kind);
  if (p.kind == PolicyKind::Noisy) out += std::string("(") + to_string(p.inner) + ")";
  if (p.force_commit) out += "+force_commit";
  return out;
}

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Command decide(const Observation& obs, Rng& rng) = 0;
  virtual bool committed() const { return false; }
};

namespace detail {

inline constexpr double kFullThrottle = 1e9;
inline constexpr double kFullBrake = -1e9;
inline constexpr double kHoldDistance = 0.5;
// Room kept in front of a leader so that asymptotic creeping never rounds into contact.
inline constexpr double kStopMargin = 1e-3;

inline bool at_least(double value, double threshold) {
  return value >= threshold - 1e-9 * std::max(1.0, std::abs(threshold));
}

class AggressivePolicy final : public Policy {
 public:
  Command decide(const Observation&, Rng&) override { return Command{kFullThrottle, 0.0, {}}; }
  bool committed() const override { return true; }
};

// Caution until progress is provably safe, then commit for good.
class TwoPhasePolicy final : public Policy {
 public:
  struct Options {
    double margin = 0.0;
    double g_min = 1.0;
    bool ignore_light = false;
    bool never_commit = false;
    bool force_commit = false;
    double drift_rate = 0.0;
    bool alternate_branch = false;
    double sigma = 0.0;
    bool noisy = false;
  };

  explicit TwoPhasePolicy(Options o) : opt_(o) {}

  bool committed() const override { return committed_; }
  double threshold_scale() const { return scale_; }

  Command decide(const Observation& obs, Rng& rng) override {
    if (opt_.noisy && !drawn_) {
      scale_ = 1.0 + rng.uniform(-opt_.sigma, opt_.sigma);
      drawn_ = true;
    }
    const ContextParams& ctx = *obs.ctx;
    const VehicleState& st = obs.own;
    Command cmd;
    const bool drifting = opt_.drift_rate != 0.0 && st.s > ctx.cd && st.v > 0.0;
    if (opt_.alternate_branch) {
      // Leaves the assigned route at the decision point; no conflict zone on the other branch.
      if (st.s <= 0.0) cmd.branch_request = Branch::Alternate;
      cmd.accel = follow(obs);
      if (drifting) cmd.lat_rate = opt_.drift_rate;
      return cmd;
    }
    if (!committed_) {
      if (opt_.force_commit) {
        committed_ = true;
      } else if (!opt_.never_commit && st.s <= kZoneEps && should_commit(obs)) {
        committed_ = true;
      }
    }
    if (committed_) {
      // Forced commit drives the maximal progress policy: full throttle until the exit.
      cmd.accel = (opt_.force_commit && st.s <= ctx.cd) ? kFullThrottle : follow(obs);
    } else {
      cmd.accel = caution(obs);
    }
    if (drifting) cmd.lat_rate = opt_.drift_rate;
    return cmd;
  }

 private:
  bool should_commit(const Observation& obs) const {
    const ContextParams& ctx = *obs.ctx;
    const ProgressThresholds th =
        progress_thresholds(ctx, *obs.dyn, obs.own.v, obs.dist_to_zone_entrance, obs.dist_to_zone_exit);
    if (!th.reachable) return false;
    const double x_f_obs = obs.gap_front ? *obs.gap_front - obs.dist_to_zone_exit : kAbsent;
    if (!at_least(x_f_obs, scale_ * th.x_f_hat + opt_.margin)) return false;
    if (th.x_a_hat) {
      const double x_a_obs = obs.arriving ? obs.arriving->dist_to_zone : kAbsent;
      if (!at_least(x_a_obs, scale_ * *th.x_a_hat + opt_.margin)) return false;
    }
    if (obs.light && !opt_.ignore_light) {
      if (*obs.light != LightPhase::EgoGreen && *obs.light != LightPhase::EgoYellow) return false;
      if (!light_times_ok(ctx, th, obs.yellow_remaining)) return false;
    }
    return true;
  }

  double leader_room(const Observation& obs) const {
    if (!obs.gap_front) return kAbsent;
    return *obs.gap_front - (obs.leader_moving ? opt_.g_min : 0.0);
  }

  double track(const Observation& obs, double room) const {
    double target = safe_speed(*obs.dyn, room - kStopMargin, obs.dt);
    if (target < kStopMargin) target = 0.0;
    return (target - obs.own.v) / obs.dt;
  }

  double follow(const Observation& obs) const { return track(obs, leader_room(obs)); }

  // Stop at the zone entrance and hold there.
  double caution(const Observation& obs) const {
    const double d = obs.dist_to_zone_entrance;
    if (d < kHoldDistance) return kFullBrake;
    return track(obs, std::min(d, leader_room(obs)));
  }

  Options opt_;
  bool committed_ = false;
  bool drawn_ = false;
  double scale_ = 1.0;
};

}  // namespace detail

inline std::unique_ptr<Policy> make_policy(const PolicySpec& spec) {
  validate(spec);
  const bool noisy = spec.kind == PolicyKind::Noisy;
  const PolicyKind base = noisy ? spec.inner : spec.kind;
  if (base == PolicyKind::Aggressive) return std::make_unique<detail::AggressivePolicy>();
  detail::TwoPhasePolicy::Options o;
  o.margin = spec.margin;
  o.g_min = spec.g_min;
  o.force_commit = spec.force_commit;
  o.noisy = noisy;
  o.sigma = spec.sigma;
  switch (base) {
    case PolicyKind::Overcautious: o.never_commit = true; break;
    case PolicyKind::RedLightIgnorer: o.ignore_light = true; break;
    case PolicyKind::Drifter:
      o.drift_rate = spec.drift_rate;
      o.alternate_branch = spec.alternate_branch;
      break;
    default: break;
  }
  if (o.force_commit) o.ignore_light = true;
  return std::make_unique<detail::TwoPhasePolicy>(o);
}

/// One control decision; the caller clamps the command to the vehicle's limits.
inline Command decide(Policy& policy, const Observation& obs, Rng& rng) { return policy.decide(obs, rng); }

}  // namespace cctb
