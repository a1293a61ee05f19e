#pragma once

// Longitudinal vehicle dynamics: the braking / acceleration (A/D) functions
// B(v), AT(v, x), AV(v, x) in closed-form and tabulated variants, command
// clamping and fixed-step integration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cctb/errors.hpp"

namespace cctb {

inline constexpr double kDefaultDt = 0.05;

/// Constant acceleration / deceleration bounds.
struct ClosedForm {
  double a_max = 0.0;  // m/s^2
  double b_max = 0.0;  // m/s^2, positive magnitude

  bool operator==(const ClosedForm&) const = default;
};

/// One cell of the acceleration grid: speed reached and time taken.
struct AccelCell {
  double speed = 0.0;  // AV, m/s
  double time = 0.0;   // AT, s

  bool operator==(const AccelCell&) const = default;
};

/// Measured A/D tables. Rows of `accel` follow `accel_v`, columns follow `accel_x`.
struct AdTables {
  std::vector<double> brake_v;
  std::vector<double> brake_d;
  std::vector<double> accel_v;
  std::vector<double> accel_x;
  std::vector<std::vector<AccelCell>> accel;

  bool operator==(const AdTables&) const = default;
};

class DynamicsProfile {
 public:
  using Model = std::variant<ClosedForm, AdTables>;

  static DynamicsProfile closed_form(double a_max, double b_max, double v_max) {
    DynamicsProfile p(v_max, ClosedForm{a_max, b_max});
    p.validate();
    return p;
  }

  static DynamicsProfile tabulated(AdTables tables, double v_max) {
    DynamicsProfile p(v_max, std::move(tables));
    p.validate();
    return p;
  }

  double v_max() const noexcept { return v_max_; }
  const Model& model() const noexcept { return model_; }
  const ClosedForm* closed() const noexcept { return std::get_if<ClosedForm>(&model_); }
  const AdTables* tables() const noexcept { return std::get_if<AdTables>(&model_); }
  bool is_tabulated() const noexcept { return tables() != nullptr; }

  bool operator==(const DynamicsProfile&) const = default;

 private:
  DynamicsProfile(double v_max, Model model) : v_max_(v_max), model_(std::move(model)) {}

  void validate() const;

  double v_max_;
  Model model_;
};

enum class Branch { Assigned, Alternate };

inline const char* to_string(Branch b) { return b == Branch::Assigned ? "assigned" : "alternate"; }

struct VehicleState {
  double s = 0.0;    // route coordinate, m
  double v = 0.0;    // m/s, never negative
  double lat = 0.0;  // lateral offset from lane center, m
  Branch branch = Branch::Assigned;

  bool operator==(const VehicleState&) const = default;
};

struct Command {
  double accel = 0.0;     // m/s^2, signed
  double lat_rate = 0.0;  // m/s
  std::optional<Branch> branch_request;

  bool operator==(const Command&) const = default;
};

namespace detail {

inline double lerp(double a, double b, double w) { return a + (b - a) * w; }

// Piecewise-linear lookup, clamped at both ends.
inline double interp_clamped(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - xs.begin()) - 1;
  return lerp(ys[j], ys[j + 1], (x - xs[j]) / (xs[j + 1] - xs[j]));
}

// Evaluates one acceleration row at distance x. Once the row's speed reaches
// v_max the vehicle cruises at v_max; past the last column it cruises at the
// last tabulated speed.
inline AccelCell eval_row(const AdTables& t, std::size_t r, double x, double v_max) {
  const auto& xs = t.accel_x;
  const auto& row = t.accel[r];
  if (x <= 0.0) return {std::min(row.front().speed, v_max), 0.0};
  if (row.front().speed >= v_max) return {v_max, x / v_max};
  for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
    const AccelCell& c0 = row[j];
    const AccelCell& c1 = row[j + 1];
    const double x0 = xs[j];
    const double x1 = xs[j + 1];
    if (c1.speed > v_max) {
      const double f = (v_max - c0.speed) / (c1.speed - c0.speed);
      const double xc = lerp(x0, x1, f);
      const double tc = lerp(c0.time, c1.time, f);
      if (x <= xc) {
        const double w = (x - x0) / (x1 - x0);
        return {lerp(c0.speed, c1.speed, w), lerp(c0.time, c1.time, w)};
      }
      return {v_max, tc + (x - xc) / v_max};
    }
    if (x <= x1) {
      const double w = (x - x0) / (x1 - x0);
      return {lerp(c0.speed, c1.speed, w), lerp(c0.time, c1.time, w)};
    }
  }
  const AccelCell& last = row.back();
  if (last.speed <= 0.0) throw UnreachableError("distance beyond table reach at zero speed");
  return {last.speed, last.time + (x - xs.back()) / last.speed};
}

inline AccelCell eval_tabulated(const AdTables& t, double v, double x, double v_max) {
  const auto& vs = t.accel_v;
  if (x > 0.0 && v <= 0.0 && t.accel.front()[1].speed <= 0.0) {
    throw UnreachableError("no acceleration capability from standstill");
  }
  if (v >= vs.back()) {
    // Above the measured rows: at least as fast as the top row, never slower than cruising.
    const AccelCell top = eval_row(t, vs.size() - 1, x, v_max);
    const double ve = std::min(v, v_max);
    if (x <= 0.0) return {ve, 0.0};
    return {std::min(v_max, std::max(ve, top.speed)), std::min(top.time, x / ve)};
  }
  const auto it = std::upper_bound(vs.begin(), vs.end(), v);
  const std::size_t r = static_cast<std::size_t>(it - vs.begin()) - 1;
  const double w = (v - vs[r]) / (vs[r + 1] - vs[r]);
  const AccelCell lo = eval_row(t, r, x, v_max);
  if (w == 0.0) return lo;
  const AccelCell hi = eval_row(t, r + 1, x, v_max);
  return {lerp(lo.speed, hi.speed, w), lerp(lo.time, hi.time, w)};
}

inline void require_non_negative(double value, const char* what) {
  if (!(value >= 0.0)) throw DomainError(std::string(what) + " must be non-negative");
}

}  // namespace detail

inline void DynamicsProfile::validate() const {
  if (!(v_max_ > 0.0)) throw DomainError("v_max must be positive");
  if (const auto* c = closed()) {
    if (!(c->a_max > 0.0) || !(c->b_max > 0.0)) throw DomainError("a_max and b_max must be positive");
    return;
  }
  const AdTables& t = *tables();
  if (t.brake_v.size() < 2 || t.brake_v.size() != t.brake_d.size()) {
    throw DomainError("braking table needs at least two (v, B) entries");
  }
  if (t.brake_v.front() != 0.0 || t.brake_d.front() != 0.0) throw DomainError("braking table must start at B(0)=0");
  // B is unknown above the last row, so speeds beyond it cannot be admitted.
  if (v_max_ > t.brake_v.back()) throw DomainError("v_max exceeds the last braking-table speed");
  for (std::size_t i = 1; i < t.brake_v.size(); ++i) {
    if (!(t.brake_v[i] > t.brake_v[i - 1])) throw DomainError("braking speeds must be strictly increasing");
    if (t.brake_d[i] < t.brake_d[i - 1]) throw DomainError("braking distances must be non-decreasing");
  }
  if (t.accel_v.empty() || t.accel_x.size() < 2) throw DomainError("acceleration grid is empty");
  if (t.accel_v.front() != 0.0 || t.accel_x.front() != 0.0) throw DomainError("acceleration grid must start at v=0, x=0");
  for (std::size_t i = 1; i < t.accel_v.size(); ++i) {
    if (!(t.accel_v[i] > t.accel_v[i - 1])) throw DomainError("acceleration rows must be strictly increasing in v");
  }
  for (std::size_t j = 1; j < t.accel_x.size(); ++j) {
    if (!(t.accel_x[j] > t.accel_x[j - 1])) throw DomainError("acceleration columns must be strictly increasing in x");
  }
  if (t.accel.size() != t.accel_v.size()) throw DomainError("acceleration grid row count mismatch");
  for (std::size_t r = 0; r < t.accel.size(); ++r) {
    const auto& row = t.accel[r];
    if (row.size() != t.accel_x.size()) throw DomainError("acceleration grid column count mismatch");
    if (row.front().speed != t.accel_v[r] || row.front().time != 0.0) {
      throw DomainError("acceleration rows must satisfy AV(v,0)=v and AT(v,0)=0");
    }
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (!(row[j].time > row[j - 1].time)) throw DomainError("AT must be strictly increasing in x");
    }
  }
}

/// B(v): distance needed to brake from v to standstill.
inline double brake_distance(const DynamicsProfile& p, double v) {
  detail::require_non_negative(v, "speed");
  if (const auto* c = p.closed()) return v * v / (2.0 * c->b_max);
  const AdTables& t = *p.tables();
  return detail::interp_clamped(t.brake_v, t.brake_d, v);
}

/// AV(v, x): speed reached after accelerating over distance x from speed v.
inline double accel_speed(const DynamicsProfile& p, double v, double x) {
  detail::require_non_negative(v, "speed");
  detail::require_non_negative(x, "distance");
  if (x == 0.0) return v;
  if (const auto* c = p.closed()) {
    const double ve = std::min(v, p.v_max());
    return std::min(p.v_max(), std::sqrt(ve * ve + 2.0 * c->a_max * x));
  }
  return detail::eval_tabulated(*p.tables(), v, x, p.v_max()).speed;
}

/// AT(v, x): time to cover distance x accelerating from speed v (cruising once at v_max).
inline double accel_time(const DynamicsProfile& p, double v, double x) {
  detail::require_non_negative(v, "speed");
  detail::require_non_negative(x, "distance");
  if (x == 0.0) return 0.0;
  if (const auto* c = p.closed()) {
    const double vm = p.v_max();
    const double ve = std::min(v, vm);
    if (ve >= vm) return x / vm;
    const double x_acc = (vm * vm - ve * ve) / (2.0 * c->a_max);
    if (x <= x_acc) return (std::sqrt(ve * ve + 2.0 * c->a_max * x) - ve) / c->a_max;
    return (vm - ve) / c->a_max + (x - x_acc) / vm;
  }
  return detail::eval_tabulated(*p.tables(), v, x, p.v_max()).time;
}

/// Largest admissible acceleration at speed v.
/// Tabulated: mean acceleration over the first grid step, (AV(v,h)^2 - v^2) / 2h.
inline double accel_bound(const DynamicsProfile& p, double v) {
  if (const auto* c = p.closed()) return c->a_max;
  const double h = p.tables()->accel_x[1];
  const double av = accel_speed(p, std::max(v, 0.0), h);
  return std::max(0.0, (av * av - v * v) / (2.0 * h));
}

/// Largest admissible deceleration magnitude at speed v over one step of dt.
/// Tabulated: the step that keeps the remaining stopping distance on the B table,
/// i.e. the speed v' solving B(v) - B(v') = v' * dt.
inline double brake_bound(const DynamicsProfile& p, double v, double dt) {
  if (const auto* c = p.closed()) return c->b_max;
  if (v <= 0.0) return 0.0;
  const double bv = brake_distance(p, v);
  double lo = 0.0;
  double hi = v;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (bv - brake_distance(p, mid) >= mid * dt) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  constexpr double kStopSnap = 1e-3;
  if (lo < kStopSnap) lo = 0.0;
  return (v - lo) / dt;
}

/// Clips a command to the profile's bounds and keeps v within [0, v_max] after one step.
inline Command clamp_command(const DynamicsProfile& p, const VehicleState& state, Command cmd,
                             double dt = kDefaultDt) {
  const double v = state.v;
  double a = std::min(cmd.accel, accel_bound(p, v));
  a = std::min(a, (p.v_max() - v) / dt);
  a = std::max(a, -brake_bound(p, v, dt));
  a = std::max(a, -v / dt);
  cmd.accel = a;
  return cmd;
}

/// Semi-implicit Euler step: v' = clamp(v + a dt, 0, v_max), s' = s + v' dt.
inline VehicleState step_vehicle(const DynamicsProfile& p, const VehicleState& state, const Command& cmd,
                                 double dt) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  VehicleState next = state;
  next.v = std::clamp(state.v + cmd.accel * dt, 0.0, p.v_max());
  next.s = state.s + next.v * dt;
  next.lat = state.lat + cmd.lat_rate * dt;
  return next;
}

/// Checks the monotonicity properties expected of a generated (not measured) profile
/// on a sample grid; measured tables may legitimately violate them.
inline bool is_monotone_profile(const DynamicsProfile& p, double v_step = 0.25, double x_max = 40.0,
                                double x_step = 0.5) {
  double prev_b = -1.0;
  for (double v = 0.0; v <= p.v_max() + 1e-12; v += v_step) {
    const double b = brake_distance(p, v);
    if (b < prev_b) return false;
    prev_b = b;
    double prev_t = 0.0;
    double prev_av = v;
    for (double x = x_step; x <= x_max + 1e-12; x += x_step) {
      const double t = accel_time(p, v, x);
      const double av = accel_speed(p, v, x);
      if (!(t > prev_t) || av < prev_av - 1e-12 || av > p.v_max() + 1e-12) return false;
      prev_t = t;
      prev_av = av;
    }
  }
  return true;
}

}  // namespace cctb
