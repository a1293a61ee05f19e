#pragma once

// Campaign configuration: TOML-subset file -> validated CampaignConfig with defaults applied.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cctb/ad_tables_io.hpp"
#include "cctb/errors.hpp"
#include "cctb/generator.hpp"
#include "cctb/kinematics.hpp"
#include "cctb/policies.hpp"
#include "cctb/scoring.hpp"
#include "cctb/simulator.hpp"
#include "cctb/toml.hpp"
#include "cctb/world.hpp"

#ifndef CCTB_DATA_DIR
#define CCTB_DATA_DIR "data"
#endif

namespace cctb {

/// Directory holding the shipped A/D tables; CCTB_DATA_DIR in the environment wins.
inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("CCTB_DATA_DIR"); env && *env) return env;
  return CCTB_DATA_DIR;
}

struct DynamicsSource {
  std::string model = "closed_form";  // closed_form | table
  double a_max = 2.0;
  double b_max = 4.0;
  std::optional<double> v_max;  // closed form default 6.5; tables default to the last braking row
  std::string table;            // shipped name (pid_autopilots, mile) or a CSV path

  bool operator==(const DynamicsSource&) const = default;
};

/// Resolves a table reference: shipped names first, then paths relative to `base_dir`.
inline std::filesystem::path resolve_table(const std::string& table, const std::filesystem::path& base_dir) {
  if (table == "pid_autopilots" || table == "mile") return data_dir() / (table + ".csv");
  std::filesystem::path p(table);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p;
}

inline DynamicsProfile build_profile(const DynamicsSource& src, const std::filesystem::path& base_dir = {}) {
  if (src.model == "closed_form") {
    return DynamicsProfile::closed_form(src.a_max, src.b_max, src.v_max.value_or(6.5));
  }
  if (src.model != "table") throw ConfigError("must be closed_form or table", "dynamics.model");
  if (src.table.empty()) throw ConfigError("table model needs a table", "dynamics.table");
  const std::filesystem::path path = resolve_table(src.table, base_dir);
  if (!std::filesystem::exists(path)) throw ConfigError("file not found: " + path.string(), "dynamics.table");
  const AdTables t = load_ad_tables(path.string());
  try {
    return DynamicsProfile::tabulated(t, src.v_max.value_or(t.brake_v.back()));
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), "dynamics.v_max");
  }
}

struct ContextSpec {
  ConfigType type = ConfigType::Merging;
  std::map<std::string, double> overrides;

  bool operator==(const ContextSpec&) const = default;
};

struct OutputSpec {
  std::string dir = "out";
  std::string format = "csv";  // csv | ansi | json

  bool operator==(const OutputSpec&) const = default;
};

struct ScoringSpec {
  bool exclude_not_at_fault = false;
  double threshold = 70.0;
  PenaltyTable table = PenaltyTable::defaults();

  bool operator==(const ScoringSpec&) const = default;
};

struct RefineSpec {
  bool enabled = false;
  Axis axis = Axis::XA;
  double tol = 0.1;

  bool operator==(const RefineSpec&) const = default;
};

struct CampaignConfig {
  DynamicsSource dynamics;
  ContextSpec context;
  PolicySpec policy;
  GridSpec grid;
  std::vector<double> v_e_values{0.0};
  SimConfig sim;
  OutputSpec output;
  ScoringSpec scoring;
  RefineSpec refine;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::filesystem::path base_dir;  // where relative paths resolve; not part of the snapshot

  CampaignConfig() {
    grid.x_a_values = range_values(0.0, 40.0, 5.0);
    grid.x_f_values = range_values(0.0, 520.0, 40.0);
    grid.repeats = 5;
    grid.include_critical = true;
  }

  ContextParams context_params() const { return make_context(context.type, context.overrides); }
  DynamicsProfile profile() const { return build_profile(dynamics, base_dir); }
};

inline void validate(const CampaignConfig& c) {
  (void)c.context_params();
  const DynamicsProfile dyn = c.profile();
  validate(c.policy);
  validate(c.sim);
  if (c.grid.repeats < 1) throw ConfigError("must be at least 1", "grid.repeats");
  if (c.grid.x_f_values.empty()) throw ConfigError("needs at least one value", "grid.xf");
  if (c.v_e_values.empty()) throw ConfigError("needs at least one value", "grid.ve");
  for (double v : c.v_e_values) {
    if (!(v >= 0.0) || v > dyn.v_max()) throw ConfigError("speeds must lie in [0, v_max]", "grid.ve");
  }
  for (double x : c.grid.x_a_values) {
    if (!(x >= 0.0)) throw ConfigError("distances must be non-negative", "grid.xa");
  }
  for (double x : c.grid.x_f_values) {
    if (!(x >= 0.0)) throw ConfigError("distances must be non-negative", "grid.xf");
  }
  if (c.jobs < 1) throw ConfigError("must be at least 1", "jobs");
  if (c.output.format != "csv" && c.output.format != "ansi" && c.output.format != "json") {
    throw ConfigError("must be csv, ansi or json", "output.format");
  }
  if (!(c.refine.tol > 0.0)) throw ConfigError("must be positive", "refine.tol");
  for (const auto& [k, p] : c.scoring.table.coefficients) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("coefficient must be in (0, 1]", "scoring.penalties." + k);
  }
}

namespace detail {

struct Reader {
  const toml::Document& doc;
  std::set<std::string> used;

  const toml::Value* find(const std::string& key) {
    const auto it = doc.find(key);
    if (it == doc.end()) return nullptr;
    used.insert(key);
    return &it->second;
  }

  [[noreturn]] static void bad(const std::string& key, const toml::Value& v, const std::string& what) {
    throw ConfigError(what, key, v.line);
  }

  void number(const std::string& key, double& out) {
    if (const toml::Value* v = find(key)) {
      if (!v->is_number()) bad(key, *v, "expected a number");
      out = v->number();
    }
  }
  void number(const std::string& key, std::optional<double>& out) {
    if (find(key)) {
      double d = 0.0;
      number(key, d);
      out = d;
    }
  }
  void integer(const std::string& key, int& out) {
    if (const toml::Value* v = find(key)) {
      if (!v->is_number() || v->number() != std::floor(v->number())) bad(key, *v, "expected an integer");
      out = static_cast<int>(v->number());
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const toml::Value* v = find(key)) {
      if (!v->is_bool()) bad(key, *v, "expected true or false");
      out = v->boolean();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const toml::Value* v = find(key)) {
      if (!v->is_string()) bad(key, *v, "expected a string");
      out = v->string();
    }
  }

  // Number list: [a, b, ...], a single number, or {start, stop, step}.
  void values(const std::string& key, std::vector<double>& out) {
    const toml::Value* v = find(key);
    if (!v) return;
    out.clear();
    if (v->is_number()) {
      out.push_back(v->number());
    } else if (v->is_array()) {
      for (const toml::Value& e : v->array()) {
        if (!e.is_number()) bad(key, *v, "array entries must be numbers");
        out.push_back(e.number());
      }
    } else if (v->is_table()) {
      const toml::Table& t = v->table();
      auto get = [&](const char* k) {
        const auto it = t.find(k);
        if (it == t.end() || !it->second.is_number()) bad(key, *v, std::string("range needs numeric '") + k + "'");
        return it->second.number();
      };
      for (const auto& [k, _] : t) {
        if (k != "start" && k != "stop" && k != "step") bad(key, *v, "unknown range key '" + k + "'");
      }
      try {
        out = range_values(get("start"), get("stop"), get("step"));
      } catch (const ConfigError& e) {
        bad(key, *v, e.what());
      }
    } else {
      bad(key, *v, "expected a number, an array or {start, stop, step}");
    }
  }

  template <class Fn>
  void with_line(const std::string& key, Fn&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      const auto it = doc.find(e.field().empty() ? key : e.field());
      const int line = it != doc.end() ? it->second.line : 0;
      throw ConfigError(e.reason(), e.field().empty() ? key : e.field(), e.line() > 0 ? e.line() : line);
    }
  }
};

}  // namespace detail

/// Parses campaign text. Unknown keys are errors; every error names its field and line.
inline CampaignConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  const toml::Document doc = toml::parse(text);
  detail::Reader r{doc, {}};
  CampaignConfig c;
  c.base_dir = base_dir;

  if (const toml::Value* v = r.find("seed")) {
    if (!v->is_number() || v->number() < 0 || v->number() != std::floor(v->number())) {
      detail::Reader::bad("seed", *v, "expected a non-negative integer");
    }
    c.seed = static_cast<std::uint64_t>(v->number());
  }
  r.integer("jobs", c.jobs);

  r.string("dynamics.model", c.dynamics.model);
  r.number("dynamics.a_max", c.dynamics.a_max);
  r.number("dynamics.b_max", c.dynamics.b_max);
  r.number("dynamics.v_max", c.dynamics.v_max);
  r.string("dynamics.table", c.dynamics.table);

  if (const toml::Value* v = r.find("context.type")) {
    if (!v->is_string()) detail::Reader::bad("context.type", *v, "expected a string");
    r.with_line("context.type", [&] { c.context.type = parse_config_type(v->string()); });
  }
  for (const char* k : {"cd", "vl", "ty", "tar", "cda", "lane_half_width", "inner_front_gap"}) {
    std::optional<double> value;
    r.number(std::string("context.") + k, value);
    if (value) c.context.overrides[k] = *value;
  }

  std::string name = to_string(c.policy.kind);
  r.string("policy.name", name);
  r.with_line("policy.name", [&] { c.policy.kind = parse_policy_kind(name); });
  std::string inner = to_string(c.policy.inner);
  r.string("policy.inner", inner);
  r.with_line("policy.inner", [&] { c.policy.inner = parse_policy_kind(inner); });
  r.number("policy.sigma", c.policy.sigma);
  r.number("policy.margin", c.policy.margin);
  r.number("policy.gmin", c.policy.g_min);
  r.number("policy.drift_rate", c.policy.drift_rate);
  r.boolean("policy.alternate_branch", c.policy.alternate_branch);
  r.boolean("policy.force_commit", c.policy.force_commit);

  r.values("grid.xa", c.grid.x_a_values);
  r.values("grid.xf", c.grid.x_f_values);
  r.values("grid.ve", c.v_e_values);
  r.integer("grid.repeats", c.grid.repeats);
  r.boolean("grid.include_critical", c.grid.include_critical);

  r.number("sim.dt", c.sim.dt);
  r.number("sim.t_max", c.sim.t_max);
  r.number("sim.t_stall", c.sim.t_stall);
  r.number("sim.sensor_range", c.sim.sensor_range);

  r.string("output.dir", c.output.dir);
  r.string("output.format", c.output.format);

  r.boolean("scoring.exclude_not_at_fault", c.scoring.exclude_not_at_fault);
  r.number("scoring.threshold", c.scoring.threshold);
  for (const auto& [key, value] : doc) {
    const std::string prefix = "scoring.penalties.";
    if (key.rfind(prefix, 0) != 0) continue;
    r.used.insert(key);
    if (!value.is_number()) detail::Reader::bad(key, value, "expected a number");
    c.scoring.table.coefficients[canonical_incident(key.substr(prefix.size()))] = value.number();
  }

  r.boolean("refine.enabled", c.refine.enabled);
  std::string axis = to_string(c.refine.axis);
  r.string("refine.axis", axis);
  r.with_line("refine.axis", [&] { c.refine.axis = parse_axis(axis); });
  r.number("refine.tol", c.refine.tol);

  for (const auto& [key, value] : doc) {
    if (!r.used.count(key)) throw ConfigError("unknown key", key, value.line);
  }
  r.with_line("", [&] { validate(c); });
  return c;
}

inline CampaignConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

// --- Snapshot ------------------------------------------------------------------------

/// Full configuration with every default spelled out; embedded in all campaign artifacts.
inline nlohmann::json config_to_json(const CampaignConfig& c) {
  using nlohmann::json;
  json dyn{{"model", c.dynamics.model}};
  if (c.dynamics.model == "closed_form") {
    dyn["a_max"] = c.dynamics.a_max;
    dyn["b_max"] = c.dynamics.b_max;
    dyn["v_max"] = c.dynamics.v_max.value_or(6.5);
  } else {
    dyn["table"] = c.dynamics.table;
    dyn["v_max"] = c.dynamics.v_max ? json(*c.dynamics.v_max) : json(nullptr);
  }
  const ContextParams ctx = c.context_params();
  json context{{"type", to_string(ctx.config_type)}, {"conflict", to_string(ctx.conflict_kind)},
               {"cd", ctx.cd},  {"vl", ctx.vl},  {"cda", ctx.cd_a},  {"ty", ctx.t_y},
               {"tar", ctx.t_ar}, {"lane_half_width", ctx.lane_half_width}};
  context["inner_front_gap"] = ctx.inner_front_gap ? json(*ctx.inner_front_gap) : json(nullptr);
  json policy{{"name", to_string(c.policy.kind)}, {"inner", to_string(c.policy.inner)},
              {"sigma", c.policy.sigma},          {"margin", c.policy.margin},
              {"gmin", c.policy.g_min},           {"drift_rate", c.policy.drift_rate},
              {"alternate_branch", c.policy.alternate_branch}, {"force_commit", c.policy.force_commit}};
  json grid{{"xa", c.grid.x_a_values}, {"xf", c.grid.x_f_values}, {"ve", c.v_e_values},
            {"repeats", c.grid.repeats}, {"include_critical", c.grid.include_critical}};
  json sim{{"dt", c.sim.dt}, {"t_max", c.sim.t_max}, {"t_stall", c.sim.t_stall}, {"sensor_range", c.sim.sensor_range}};
  json scoring{{"exclude_not_at_fault", c.scoring.exclude_not_at_fault},
               {"threshold", c.scoring.threshold},
               {"penalties", c.scoring.table.coefficients}};
  json refine{{"enabled", c.refine.enabled}, {"axis", to_string(c.refine.axis)}, {"tol", c.refine.tol}};
  return json{{"seed", c.seed},         {"dynamics", dyn}, {"context", context},
              {"policy", policy},       {"grid", grid},    {"sim", sim},
              {"output", {{"dir", c.output.dir}, {"format", c.output.format}}},
              {"scoring", scoring},     {"refine", refine}};
}

/// Inverse of config_to_json; `jobs` and `base_dir` are not part of the snapshot.
inline CampaignConfig config_from_json(const nlohmann::json& j) {
  try {
    CampaignConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    const auto& d = j.at("dynamics");
    c.dynamics.model = d.at("model").get<std::string>();
    if (c.dynamics.model == "closed_form") {
      c.dynamics.a_max = d.at("a_max").get<double>();
      c.dynamics.b_max = d.at("b_max").get<double>();
      c.dynamics.v_max = d.at("v_max").get<double>();
    } else {
      c.dynamics.table = d.at("table").get<std::string>();
      if (!d.at("v_max").is_null()) c.dynamics.v_max = d.at("v_max").get<double>();
    }
    const auto& x = j.at("context");
    c.context.type = parse_config_type(x.at("type").get<std::string>());
    for (const char* k : {"cd", "vl", "cda", "ty", "tar", "lane_half_width"}) c.context.overrides[k] = x.at(k).get<double>();
    if (!x.at("inner_front_gap").is_null()) c.context.overrides["inner_front_gap"] = x.at("inner_front_gap").get<double>();
    const auto& p = j.at("policy");
    c.policy.kind = parse_policy_kind(p.at("name").get<std::string>());
    c.policy.inner = parse_policy_kind(p.at("inner").get<std::string>());
    c.policy.sigma = p.at("sigma").get<double>();
    c.policy.margin = p.at("margin").get<double>();
    c.policy.g_min = p.at("gmin").get<double>();
    c.policy.drift_rate = p.at("drift_rate").get<double>();
    c.policy.alternate_branch = p.at("alternate_branch").get<bool>();
    c.policy.force_commit = p.at("force_commit").get<bool>();
    const auto& g = j.at("grid");
    c.grid.x_a_values = g.at("xa").get<std::vector<double>>();
    c.grid.x_f_values = g.at("xf").get<std::vector<double>>();
    c.v_e_values = g.at("ve").get<std::vector<double>>();
    c.grid.repeats = g.at("repeats").get<int>();
    c.grid.include_critical = g.at("include_critical").get<bool>();
    const auto& s = j.at("sim");
    c.sim.dt = s.at("dt").get<double>();
    c.sim.t_max = s.at("t_max").get<double>();
    c.sim.t_stall = s.at("t_stall").get<double>();
    c.sim.sensor_range = s.at("sensor_range").get<double>();
    c.output.dir = j.at("output").at("dir").get<std::string>();
    c.output.format = j.at("output").at("format").get<std::string>();
    const auto& sc = j.at("scoring");
    c.scoring.exclude_not_at_fault = sc.at("exclude_not_at_fault").get<bool>();
    c.scoring.threshold = sc.at("threshold").get<double>();
    c.scoring.table.coefficients = sc.at("penalties").get<std::map<std::string, double>>();
    const auto& rf = j.at("refine");
    c.refine.enabled = rf.at("enabled").get<bool>();
    c.refine.axis = parse_axis(rf.at("axis").get<std::string>());
    c.refine.tol = rf.at("tol").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config snapshot: ") + e.what());
  }
}

}  // namespace cctb
