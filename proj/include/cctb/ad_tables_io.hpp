#pragma once

// CSV serialization of A/D tables.
//
//   kind,v,x,value1,value2
//   B,4.0,,1.9,
//   A,2.0,3.0,5.0,1.0
//
// B rows carry B(v) in value1; A rows carry AV in value1 and AT in value2.

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cctb/errors.hpp"
#include "cctb/kinematics.hpp"

namespace cctb {

inline constexpr const char* kAdTablesHeader = "kind,v,x,value1,value2";

/// Shortest round-trip decimal representation.
inline std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(cell);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& text, const char* field, int line) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("expected a number, got '" + t + "'", field, line);
  }
  return value;
}

}  // namespace detail

inline AdTables read_ad_tables(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  std::map<double, double> brake;
  std::map<double, std::map<double, AccelCell>> accel;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header_seen) {
      if (t != kAdTablesHeader) throw ConfigError("bad header, expected '" + std::string(kAdTablesHeader) + "'", "", line_no);
      header_seen = true;
      continue;
    }
    const auto cells = detail::split_csv_line(t);
    if (cells.size() != 5) throw ConfigError("expected 5 columns", "", line_no);
    const std::string kind = detail::trim(cells[0]);
    const double v = detail::parse_number(cells[1], "v", line_no);
    if (kind == "B") {
      if (!brake.emplace(v, detail::parse_number(cells[3], "value1", line_no)).second) {
        throw ConfigError("duplicate braking row", "v", line_no);
      }
    } else if (kind == "A") {
      const double x = detail::parse_number(cells[2], "x", line_no);
      const AccelCell cell{detail::parse_number(cells[3], "value1", line_no),
                           detail::parse_number(cells[4], "value2", line_no)};
      if (!accel[v].emplace(x, cell).second) throw ConfigError("duplicate accel cell", "x", line_no);
    } else {
      throw ConfigError("unknown row kind '" + kind + "'", "kind", line_no);
    }
  }
  if (!header_seen) throw ConfigError("empty A/D table file");
  if (brake.empty() || accel.empty()) throw ConfigError("A/D table file needs both B and A rows");

  AdTables t;
  for (const auto& [v, d] : brake) {
    t.brake_v.push_back(v);
    t.brake_d.push_back(d);
  }
  for (const auto& [x, cell] : accel.begin()->second) t.accel_x.push_back(x);
  for (const auto& [v, row] : accel) {
    if (row.size() != t.accel_x.size()) throw ConfigError("accel grid is not rectangular", "x");
    std::vector<AccelCell> cells;
    std::size_t j = 0;
    for (const auto& [x, cell] : row) {
      if (x != t.accel_x[j++]) throw ConfigError("accel grid is not rectangular", "x");
      cells.push_back(cell);
    }
    t.accel_v.push_back(v);
    t.accel.push_back(std::move(cells));
  }
  return t;
}

inline AdTables load_ad_tables(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open A/D table file '" + path + "'", "table");
  return read_ad_tables(in);
}

inline void write_ad_tables(std::ostream& out, const AdTables& t) {
  out << kAdTablesHeader << '\n';
  for (std::size_t i = 0; i < t.brake_v.size(); ++i) {
    out << "B," << format_number(t.brake_v[i]) << ",," << format_number(t.brake_d[i]) << ",\n";
  }
  for (std::size_t r = 0; r < t.accel_v.size(); ++r) {
    for (std::size_t j = 0; j < t.accel_x.size(); ++j) {
      out << "A," << format_number(t.accel_v[r]) << ',' << format_number(t.accel_x[j]) << ','
          << format_number(t.accel[r][j].speed) << ',' << format_number(t.accel[r][j].time) << '\n';
    }
  }
}

inline std::string ad_tables_to_csv(const AdTables& t) {
  std::ostringstream os;
  write_ad_tables(os, t);
  return os.str();
}

}  // namespace cctb
