#pragma once

// Reader for the TOML subset used by experiment files: [tables], [[arrays of
// tables]], dotted keys, basic and literal strings, integers, floats, booleans
// and (possibly multi-line) arrays of scalars.

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace gdnls::toml {

using json = nlohmann::json;

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line) : std::runtime_error("line " + std::to_string(line) + ": " + msg) {}
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string text) : s_(std::move(text)) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = parse_header(root);
      } else {
        const auto path = parse_key();
        skip_ws();
        expect('=');
        skip_ws();
        json value = parse_value();
        assign(*table, path, std::move(value));
      }
      end_of_line();
    }
    return root;
  }

  json parse_single_value() {
    skip_ws();
    json v = parse_value();
    skip_ws();
    if (!eof()) fail("trailing characters after value");
    return v;
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  char get() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  [[noreturn]] void fail(const std::string& m) const { throw ParseError(m, line_); }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }
  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) get();
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') get();
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r')
        get();
      else
        break;
    }
  }
  void skip_ws_nl() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r')
        get();
      else
        break;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') get();
    if (peek() != '\n') fail("unexpected characters at end of line");
    get();
  }

  std::string parse_simple_key() {
    if (peek() == '"' || peek() == '\'') return parse_string();
    std::string k;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) k += get();
    if (k.empty()) fail("expected a key");
    return k;
  }

  std::vector<std::string> parse_key() {
    std::vector<std::string> path{parse_simple_key()};
    skip_ws();
    while (peek() == '.') {
      get();
      skip_ws();
      path.push_back(parse_simple_key());
      skip_ws();
    }
    return path;
  }

  json* parse_header(json& root) {
    expect('[');
    const bool array = peek() == '[';
    if (array) get();
    skip_ws();
    const auto path = parse_key();
    expect(']');
    if (array) expect(']');
    json* node = &root;
    for (std::size_t i = 0; i < path.size(); ++i) {
      json& child = (*node)[path[i]];
      if (child.is_null()) child = json::object();
      if (child.is_array()) {
        if (child.empty()) fail("empty table array");
        node = &child.back();
      } else {
        node = &child;
      }
      if (i + 1 == path.size() && array) {
        if (!child.is_array()) {
          if (!child.empty()) fail("key '" + path[i] + "' is already a table");
          child = json::array();
        }
        child.push_back(json::object());
        node = &child.back();
      }
    }
    if (!node->is_object()) fail("header names a non-table value");
    return node;
  }

  void assign(json& table, const std::vector<std::string>& path, json value) {
    json* node = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      json& child = (*node)[path[i]];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) fail("dotted key crosses a non-table value");
      node = &child;
    }
    if (node->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*node)[path.back()] = std::move(value);
  }

  std::string parse_string() {
    const char q = get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == q) break;
      if (c == '\\' && q == '"') {
        const char e = get();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json parse_number_or_bool() {
    std::string tok;
    while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
           peek() != '#')
      tok += get();
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    std::string clean;
    for (char c : tok)
      if (c != '_') clean += c;
    if (clean.empty()) fail("expected a value");
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        const double d = std::stod(clean, &used);
        if (used != clean.size()) fail("bad number '" + tok + "'");
        return d;
      }
      const long long v = std::stoll(clean, &used);
      if (used != clean.size()) fail("bad number '" + tok + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad value '" + tok + "'");
    }
  }

  json parse_value() {
    const char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') {
      get();
      json arr = json::array();
      skip_ws_nl();
      while (peek() != ']') {
        arr.push_back(parse_value());
        skip_ws_nl();
        if (peek() == ',') {
          get();
          skip_ws_nl();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      get();
      return arr;
    }
    return parse_number_or_bool();
  }

  std::string s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace detail

inline json parse(const std::string& text) { return detail::Parser(text).parse(); }

inline json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

// Value of a --set override: a TOML value if it parses as one, else a bare string.
inline json parse_override_value(const std::string& text) {
  try {
    return detail::Parser(text).parse_single_value();
  } catch (const ParseError&) {
    return text;
  }
}

// Applies key=value with a dotted key path, creating tables as needed.
inline void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw std::runtime_error("override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw std::runtime_error("empty key segment in override '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = parse_override_value(assignment.substr(eq + 1));
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw std::runtime_error("override path crosses a non-table value: " + key);
    node = &child;
    start = dot + 1;
  }
}

}  // namespace gdnls::toml
