#pragma once

// Small TOML subset: [section] headers, bare or dotted keys, strings, numbers, booleans,
// single-line arrays and inline tables. Enough for campaign files; no dates, no multi-line values.

#include <cctype>
#include <charconv>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "cctb/errors.hpp"

namespace cctb::toml {

struct Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

struct Value {
  std::variant<double, bool, std::string, std::shared_ptr<Array>, std::shared_ptr<Table>> data;
  int line = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<std::shared_ptr<Array>>(data); }
  bool is_table() const { return std::holds_alternative<std::shared_ptr<Table>>(data); }

  double number() const { return std::get<double>(data); }
  bool boolean() const { return std::get<bool>(data); }
  const std::string& string() const { return std::get<std::string>(data); }
  const Array& array() const { return *std::get<std::shared_ptr<Array>>(data); }
  const Table& table() const { return *std::get<std::shared_ptr<Table>>(data); }
};

/// Parsed document: fully qualified dotted key -> value.
using Document = std::map<std::string, Value>;

namespace detail {

class Parser {
 public:
  Parser(const std::string& text, int line) : s_(text), line_(line) {}

  Value value() {
    skip_ws();
    if (at_end()) fail("missing value");
    const char c = s_[i_];
    if (c == '"' || c == '\'') return make(string_literal());
    if (c == '[') return array();
    if (c == '{') return inline_table();
    if (starts_with("true")) {
      i_ += 4;
      return make(true);
    }
    if (starts_with("false")) {
      i_ += 5;
      return make(false);
    }
    return make(number());
  }

  std::string key() {
    skip_ws();
    if (!at_end() && (s_[i_] == '"' || s_[i_] == '\'')) return string_literal();
    const std::size_t start = i_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '-')) ++i_;
    if (start == i_) fail("expected a key");
    return s_.substr(start, i_ - start);
  }

  // key ( '.' key )*
  std::string dotted_key() {
    std::string k = key();
    skip_ws();
    while (!at_end() && s_[i_] == '.') {
      ++i_;
      k += "." + key();
      skip_ws();
    }
    return k;
  }

  void expect(char c) {
    skip_ws();
    if (at_end() || s_[i_] != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  void finish() {
    skip_ws();
    if (!at_end() && s_[i_] != '#') fail("unexpected trailing characters");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, "", line_); }

 private:
  template <class T>
  Value make(T v) {
    Value out;
    out.data = std::move(v);
    out.line = line_;
    return out;
  }

  bool at_end() const { return i_ >= s_.size(); }
  bool starts_with(const char* lit) const { return s_.compare(i_, std::char_traits<char>::length(lit), lit) == 0; }
  void skip_ws() {
    while (!at_end() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }

  std::string string_literal() {
    const char quote = s_[i_++];
    std::string out;
    while (!at_end() && s_[i_] != quote) {
      if (quote == '"' && s_[i_] == '\\' && i_ + 1 < s_.size()) {
        const char e = s_[++i_];
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += s_[i_];
      }
      ++i_;
    }
    if (at_end()) fail("unterminated string");
    ++i_;
    return out;
  }

  double number() {
    const std::size_t start = i_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.' || s_[i_] == '-' ||
                         s_[i_] == '+' || s_[i_] == '_')) {
      ++i_;
    }
    std::string text = s_.substr(start, i_ - start);
    std::erase(text, '_');
    if (text == "inf" || text == "+inf") return 1e308 * 10;
    double v = 0.0;
    const char* first = text.data();
    if (!text.empty() && text[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) fail("invalid value '" + text + "'");
    return v;
  }

  Value array() {
    ++i_;
    auto arr = std::make_shared<Array>();
    skip_ws();
    if (!at_end() && s_[i_] == ']') {
      ++i_;
      return make(arr);
    }
    while (true) {
      arr->push_back(value());
      skip_ws();
      if (at_end()) fail("unterminated array");
      if (s_[i_] == ',') {
        ++i_;
        skip_ws();
        if (!at_end() && s_[i_] == ']') {
          ++i_;
          break;
        }
        continue;
      }
      if (s_[i_] == ']') {
        ++i_;
        break;
      }
      fail("expected ',' or ']' in array");
    }
    return make(arr);
  }

  Value inline_table() {
    ++i_;
    auto tab = std::make_shared<Table>();
    skip_ws();
    if (!at_end() && s_[i_] == '}') {
      ++i_;
      return make(tab);
    }
    while (true) {
      const std::string k = dotted_key();
      expect('=');
      if (!tab->emplace(k, value()).second) fail("duplicate key '" + k + "'");
      skip_ws();
      if (at_end()) fail("unterminated inline table");
      if (s_[i_] == ',') {
        ++i_;
        continue;
      }
      if (s_[i_] == '}') {
        ++i_;
        break;
      }
      fail("expected ',' or '}' in inline table");
    }
    return make(tab);
  }

  const std::string& s_;
  std::size_t i_ = 0;
  int line_;
};

}  // namespace detail

inline Document parse(const std::string& text) {
  Document doc;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    detail::Parser p(line, line_no);
    if (line[first] == '[') {
      p.expect('[');
      section = p.dotted_key();
      p.expect(']');
      p.finish();
      continue;
    }
    const std::string key = p.dotted_key();
    p.expect('=');
    Value v = p.value();
    p.finish();
    const std::string full = section.empty() ? key : section + "." + key;
    if (!doc.emplace(full, std::move(v)).second) throw ConfigError("duplicate key", full, line_no);
  }
  return doc;
}

}  // namespace cctb::toml
