#pragma once

// Empirical estimation of the A/D functions by running a vehicle through
// braking and acceleration scenarios.

#include <functional>
#include <vector>

#include "cctb/errors.hpp"
#include "cctb/kinematics.hpp"

namespace cctb {

/// Runs a vehicle starting at speed v with a static obstacle at distance x; true on collision.
using BrakingRunner = std::function<bool(double v, double x)>;

struct TrajectorySample {
  double t = 0.0;
  double s = 0.0;
  double v = 0.0;
};

/// Runs a vehicle from s=0 at speed v on a clear road until it has covered at least x
/// (or gives up); returns the sampled trajectory starting with the t=0 sample.
using AccelRunner = std::function<std::vector<TrajectorySample>(double v, double x)>;

struct AccelEstimate {
  double time = 0.0;
  double speed = 0.0;
};

/// Smallest obstacle distance (to within tol) at which the vehicle stops without collision.
/// Forward scan in scan_step increments, then bisection between last unsafe and first safe.
inline double estimate_braking(const BrakingRunner& run, double v, double scan_step, double tol = 0.01,
                               double cap = 500.0) {
  if (!(tol > 0.0) || !(scan_step > tol)) throw DomainError("estimate_braking needs scan_step > tol > 0");
  if (v < 0.0) throw DomainError("speed must be non-negative");
  if (v == 0.0) return 0.0;
  double unsafe = -1.0;
  double safe = -1.0;
  for (double x = 0.0; x <= cap; x += scan_step) {
    if (!run(v, x)) {
      safe = x;
      break;
    }
    unsafe = x;
  }
  if (safe < 0.0) throw ObstacleUnavoidableError("no collision-free obstacle distance below cap");
  if (unsafe < 0.0) return safe;
  while (safe - unsafe > tol) {
    const double mid = 0.5 * (safe + unsafe);
    if (run(v, mid)) {
      unsafe = mid;
    } else {
      safe = mid;
    }
  }
  return safe;
}

/// Elapsed time and speed at the first sample where the vehicle has covered x.
inline AccelEstimate estimate_accel_profile(const AccelRunner& run, double v, double x) {
  if (v < 0.0 || x < 0.0) throw DomainError("speed and distance must be non-negative");
  if (x == 0.0) return {0.0, v};
  for (const TrajectorySample& p : run(v, x)) {
    if (p.s >= x) return {p.t, p.v};
  }
  throw UnreachableError("distance not reached within the horizon");
}

/// Reference vehicle that brakes as hard as the profile allows from t=0.
inline BrakingRunner reference_braking_runner(const DynamicsProfile& profile, double dt = kDefaultDt,
                                              double horizon = 60.0) {
  return [profile, dt, horizon](double v, double x) {
    VehicleState st{0.0, std::min(v, profile.v_max()), 0.0, Branch::Assigned};
    for (double t = 0.0; t < horizon && st.v > 0.0; t += dt) {
      const Command cmd = clamp_command(profile, st, Command{-1e9, 0.0, {}}, dt);
      st = step_vehicle(profile, st, cmd, dt);
      if (st.s >= x) return true;
    }
    return false;
  };
}

/// Reference vehicle that accelerates as hard as the profile allows from t=0.
inline AccelRunner reference_accel_runner(const DynamicsProfile& profile, double dt = kDefaultDt,
                                          double horizon = 120.0) {
  return [profile, dt, horizon](double v, double x) {
    std::vector<TrajectorySample> out;
    VehicleState st{0.0, std::min(v, profile.v_max()), 0.0, Branch::Assigned};
    out.push_back({0.0, st.s, st.v});
    const auto steps = static_cast<long>(horizon / dt);
    for (long k = 1; k <= steps && st.s < x; ++k) {
      const Command cmd = clamp_command(profile, st, Command{1e9, 0.0, {}}, dt);
      st = step_vehicle(profile, st, cmd, dt);
      out.push_back({static_cast<double>(k) * dt, st.s, st.v});
    }
    return out;
  };
}

/// Builds a full A/D table set by calibration over the given speed and distance grids.
/// Both grids must start at 0.
inline AdTables estimate_tables(const BrakingRunner& brake_run, const AccelRunner& accel_run,
                                const std::vector<double>& v_values, const std::vector<double>& x_values,
                                double scan_step = 0.1, double tol = 0.01) {
  AdTables t;
  t.accel_v = v_values;
  t.accel_x = x_values;
  for (double v : v_values) {
    t.brake_v.push_back(v);
    t.brake_d.push_back(estimate_braking(brake_run, v, scan_step, tol));
    std::vector<AccelCell> row;
    for (double x : x_values) {
      const AccelEstimate e = estimate_accel_profile(accel_run, v, x);
      row.push_back({e.speed, e.time});
    }
    t.accel.push_back(std::move(row));
  }
  return t;
}

}  // namespace cctb
