#pragma once

// Critical values, potential safety, criticality order, grid construction and
// caution/progress boundary refinement.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "cctb/errors.hpp"
#include "cctb/kinematics.hpp"
#include "cctb/policies.hpp"
#include "cctb/verdict.hpp"
#include "cctb/world.hpp"

namespace cctb {

struct TestCase {
  ContextParams ctx;
  double v_e = 0.0;
  double x_e = 0.0;
  double x_a = kAbsent;
  double x_f = kAbsent;

  bool operator==(const TestCase&) const = default;
};

/// Test case with x_e = B(v_e), so that caution is always feasible.
inline TestCase make_test_case(const ContextParams& ctx, const DynamicsProfile& dyn, double v_e, double x_a,
                               double x_f) {
  return TestCase{ctx, v_e, brake_distance(dyn, v_e), ctx.has_arriving() ? x_a : kAbsent, x_f};
}

struct CriticalValues {
  double x_e_hat = 0.0;
  std::optional<double> x_a_hat;
  std::optional<double> x_f_hat;
  bool feasible = false;

  bool operator==(const CriticalValues&) const = default;
};

inline CriticalValues critical_values(const ContextParams& ctx, const DynamicsProfile& dyn, double v_e) {
  if (v_e < 0.0 || v_e > dyn.v_max()) throw DomainError("v_e outside [0, v_max]");
  CriticalValues cv;
  cv.x_e_hat = brake_distance(dyn, v_e);
  const ProgressThresholds th = progress_thresholds(ctx, dyn, v_e, cv.x_e_hat, cv.x_e_hat + ctx.cd);
  if (!th.reachable) return cv;
  cv.x_f_hat = th.x_f_hat;
  cv.x_a_hat = th.x_a_hat;
  cv.feasible = !ctx.has_light() || light_times_ok(ctx, th, ctx.t_y);
  return cv;
}

inline bool is_potentially_safe(const TestCase& tc, const DynamicsProfile& dyn) {
  return caution_feasible(dyn, tc.v_e, tc.x_e) || progress_feasible(tc.ctx, dyn, tc.v_e, tc.x_e, tc.x_a, tc.x_f);
}

/// Parameter-wise dominance: tc1 is at least as critical as tc2 when both its distances are no larger.
inline bool more_critical(const TestCase& tc1, const TestCase& tc2) {
  if (!(tc1.ctx == tc2.ctx) || tc1.v_e != tc2.v_e || tc1.x_e != tc2.x_e) {
    throw ContractError("more_critical needs test cases with identical context, v_e and x_e");
  }
  return tc1.x_a <= tc2.x_a && tc1.x_f <= tc2.x_f;
}

struct GridSpec {
  std::vector<double> x_a_values;
  std::vector<double> x_f_values;
  int repeats = 1;
  bool include_critical = false;

  bool operator==(const GridSpec&) const = default;
};

/// Inclusive arithmetic range, values rounded to 1e-9 to keep decimal steps clean.
inline std::vector<double> range_values(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw ConfigError("range needs step > 0 and stop >= start");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9);
  return out;
}

/// Smallest decimeter value not below x, so an inserted critical line still admits safe progress.
inline double ceil_decimeter(double x) { return std::ceil(x * 10.0 - 1e-6) / 10.0; }

inline std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), v.end());
  return v;
}

struct Grid {
  ContextParams ctx;
  double v_e = 0.0;
  double x_e = 0.0;
  CriticalValues critical;
  std::vector<double> x_a_values;  // rows; a single kAbsent row when there is no arriving vehicle
  std::vector<double> x_f_values;  // columns
  int repeats = 1;
  std::vector<TestCase> cases;     // row-major

  const TestCase& at(std::size_t row, std::size_t col) const { return cases.at(row * x_f_values.size() + col); }
};

inline Grid build_grid(const ContextParams& ctx, const DynamicsProfile& dyn, double v_e, const GridSpec& spec) {
  if (spec.x_f_values.empty()) throw ConfigError("grid needs x_f values", "grid.xf");
  if (ctx.has_arriving() && spec.x_a_values.empty()) throw ConfigError("grid needs x_a values", "grid.xa");
  if (spec.repeats < 1) throw ConfigError("must be at least 1", "grid.repeats");
  Grid g;
  g.ctx = ctx;
  g.v_e = v_e;
  g.critical = critical_values(ctx, dyn, v_e);
  g.x_e = g.critical.x_e_hat;
  g.repeats = spec.repeats;
  g.x_f_values = spec.x_f_values;
  if (ctx.has_arriving()) g.x_a_values = spec.x_a_values;
  if (spec.include_critical && g.critical.feasible) {
    if (g.critical.x_f_hat) g.x_f_values.push_back(ceil_decimeter(*g.critical.x_f_hat));
    if (ctx.has_arriving() && g.critical.x_a_hat) g.x_a_values.push_back(ceil_decimeter(*g.critical.x_a_hat));
  }
  g.x_f_values = sorted_unique(g.x_f_values);
  g.x_a_values = ctx.has_arriving() ? sorted_unique(g.x_a_values) : std::vector<double>{kAbsent};
  for (double xa : g.x_a_values) {
    for (double xf : g.x_f_values) g.cases.push_back(TestCase{ctx, v_e, g.x_e, xa, xf});
  }
  return g;
}

enum class Axis { XA, XF };

inline const char* to_string(Axis a) { return a == Axis::XA ? "xa" : "xf"; }

inline Axis parse_axis(const std::string& s) {
  if (s == "xa") return Axis::XA;
  if (s == "xf") return Axis::XF;
  throw ConfigError("unknown axis '" + s + "'", "refine.axis");
}

enum class RefineStatus { Bracketed, Unstable, PreconditionViolated };

inline const char* to_string(RefineStatus s) {
  switch (s) {
    case RefineStatus::Bracketed: return "bracketed";
    case RefineStatus::Unstable: return "unstable";
    case RefineStatus::PreconditionViolated: return "precondition_violated";
  }
  return "?";
}

struct Probe {
  double value = 0.0;
  Verdict verdict;
};

struct RefineResult {
  RefineStatus status = RefineStatus::Bracketed;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<Probe> probes;
};

/// One full simulated run at the given axis value.
using RefineRunner = std::function<Verdict(double value)>;

/// Bisects [lo, hi] between a caution-class and a progress-class verdict until hi - lo <= tol.
/// Every probe is recorded; a verdict outside both classes, or a final bracket that does not
/// reproduce, marks the boundary unstable.
inline RefineResult refine_boundary(const RefineRunner& run, double lo, double hi, double tol) {
  RefineResult r;
  r.lo = lo;
  r.hi = hi;
  if (lo == hi) return r;
  if (lo > hi || !(tol > 0.0)) {
    r.status = RefineStatus::PreconditionViolated;
    return r;
  }
  auto probe = [&](double value) {
    const Verdict v = run(value);
    r.probes.push_back({value, v});
    return v.category;
  };
  if (!is_caution_class(probe(lo)) || !is_progress_class(probe(hi))) {
    r.status = RefineStatus::PreconditionViolated;
    return r;
  }
  while (r.hi - r.lo > tol) {
    const double mid = 0.5 * (r.lo + r.hi);
    const Category c = probe(mid);
    if (is_caution_class(c)) {
      r.lo = mid;
    } else if (is_progress_class(c)) {
      r.hi = mid;
    } else {
      r.status = RefineStatus::Unstable;
      return r;
    }
  }
  // Bisection alone cannot see non-monotone verdicts; re-run the final bracket once.
  if (r.probes.size() > 2 && (!is_caution_class(probe(r.lo)) || !is_progress_class(probe(r.hi)))) {
    r.status = RefineStatus::Unstable;
  }
  return r;
}

}  // namespace cctb
