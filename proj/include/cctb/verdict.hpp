#pragma once

// Verdict taxonomy and its bit-exact string encoding.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>

#include "cctb/errors.hpp"

namespace cctb {

enum class SafetyProp : std::uint8_t { P1 = 1, P2 = 2, P3 = 4, P4 = 8 };

/// Set of safety properties as a bitmask.
class PropSet {
 public:
  constexpr PropSet() = default;
  constexpr explicit PropSet(std::uint8_t bits) : bits_(bits & 0x0f) {}

  constexpr bool contains(SafetyProp p) const { return (bits_ & static_cast<std::uint8_t>(p)) != 0; }
  constexpr void insert(SafetyProp p) { bits_ |= static_cast<std::uint8_t>(p); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr PropSet operator|(PropSet o) const { return PropSet(static_cast<std::uint8_t>(bits_ | o.bits_)); }

  constexpr bool operator==(const PropSet&) const = default;

  /// "p1p3" style, empty string for the empty set.
  std::string str() const {
    std::string out;
    for (int i = 0; i < 4; ++i) {
      if (bits_ & (1u << i)) out += "p" + std::to_string(i + 1);
    }
    return out;
  }

 private:
  std::uint8_t bits_ = 0;
};

inline const char* to_string(SafetyProp p) {
  switch (p) {
    case SafetyProp::P1: return "p1";
    case SafetyProp::P2: return "p2";
    case SafetyProp::P3: return "p3";
    case SafetyProp::P4: return "p4";
  }
  return "?";
}

enum class Category { CS, CO, PS, CU, PU, Ae, Aa, Af, Blk, RouteFault };
enum class RouteKind { ChangedRoute, DeviatedRoad, ChangedThenDeviated };
enum class Subject { Ego, Arriving, Both };

struct Verdict {
  Category category = Category::CS;
  PropSet props;
  RouteKind route_kind = RouteKind::ChangedRoute;  // RouteFault only
  Subject subject = Subject::Ego;                  // RouteFault only

  static Verdict of(Category c, PropSet p = {}) { return Verdict{c, p, RouteKind::ChangedRoute, Subject::Ego}; }
  static Verdict route_fault(RouteKind k, Subject s, PropSet p = {}) { return Verdict{Category::RouteFault, p, k, s}; }

  bool operator==(const Verdict&) const = default;
};

inline std::string to_string(const Verdict& v) {
  switch (v.category) {
    case Category::CS: return "CS";
    case Category::CO: return "CO";
    case Category::PS: return "PS";
    case Category::CU: return "CU[" + v.props.str() + "]";
    case Category::PU: return "PU[" + v.props.str() + "]";
    case Category::Ae: return "Ae";
    case Category::Aa: return "Aa";
    case Category::Af: return "Af";
    case Category::Blk: return "Blk";
    case Category::RouteFault: {
      std::string out = v.route_kind == RouteKind::ChangedRoute   ? "CR"
                        : v.route_kind == RouteKind::DeviatedRoad ? "DR"
                                                                  : "CDR";
      out += v.subject == Subject::Ego ? "e" : v.subject == Subject::Arriving ? "a" : "ea";
      return out;
    }
  }
  return "?";
}

/// Inverse of to_string. Route-fault props are not part of the encoding and come back empty.
inline Verdict parse_verdict(const std::string& s) {
  if (s == "CS") return Verdict::of(Category::CS);
  if (s == "CO") return Verdict::of(Category::CO);
  if (s == "PS") return Verdict::of(Category::PS);
  if (s == "Ae") return Verdict::of(Category::Ae);
  if (s == "Aa") return Verdict::of(Category::Aa);
  if (s == "Af") return Verdict::of(Category::Af);
  if (s == "Blk") return Verdict::of(Category::Blk);
  if ((s.rfind("CU[", 0) == 0 || s.rfind("PU[", 0) == 0) && s.back() == ']') {
    PropSet props;
    const std::string body = s.substr(3, s.size() - 4);
    for (std::size_t i = 0; i < body.size(); i += 2) {
      if (body[i] != 'p' || i + 1 >= body.size() || body[i + 1] < '1' || body[i + 1] > '4') {
        throw ClassificationError("bad verdict '" + s + "'");
      }
      props.insert(static_cast<SafetyProp>(1u << (body[i + 1] - '1')));
    }
    if (props.empty()) throw ClassificationError("unsafe verdict without properties '" + s + "'");
    return Verdict::of(s[0] == 'C' ? Category::CU : Category::PU, props);
  }
  for (const auto& [prefix, kind] : {std::pair{"CDR", RouteKind::ChangedThenDeviated},
                                     std::pair{"CR", RouteKind::ChangedRoute}, std::pair{"DR", RouteKind::DeviatedRoad}}) {
    const std::string p = prefix;
    if (s.rfind(p, 0) == 0) {
      const std::string subj = s.substr(p.size());
      if (subj == "e") return Verdict::route_fault(kind, Subject::Ego);
      if (subj == "a") return Verdict::route_fault(kind, Subject::Arriving);
      if (subj == "ea") return Verdict::route_fault(kind, Subject::Both);
    }
  }
  throw ClassificationError("bad verdict '" + s + "'");
}

/// Higher is more severe: accidents (Ae > Aa > Af) > Blk > route faults > PU > CU > PS > CO > CS.
inline int severity(Category c) {
  switch (c) {
    case Category::CS: return 0;
    case Category::CO: return 1;
    case Category::PS: return 2;
    case Category::CU: return 3;
    case Category::PU: return 4;
    case Category::RouteFault: return 5;
    case Category::Blk: return 6;
    case Category::Af: return 7;
    case Category::Aa: return 8;
    case Category::Ae: return 9;
  }
  return -1;
}

inline bool is_safe(Category c) { return c == Category::CS || c == Category::CO || c == Category::PS; }
inline bool is_caution_class(Category c) { return c == Category::CS || c == Category::CO || c == Category::CU; }
inline bool is_progress_class(Category c) { return c == Category::PS || c == Category::PU; }

}  // namespace cctb
