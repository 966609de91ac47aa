#pragma once

// Flat structured config, a TOML subset:
//
//   # comment
//   key = "string" | 1.5 | 42 | true | ["a", "b", [1, 2]]
//   [section.sub]
//
// Keys are addressed by their dotted path ("device.roll.inertia"). Arrays may
// span several lines.

#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "flexgimbal/error.hpp"
#include "flexgimbal/units.hpp"

namespace flexgimbal::io {

struct ConfigValue {
  enum class Kind { string, number, boolean, array };

  Kind kind = Kind::string;
  std::string text;  // string contents, or the literal spelling of a number
  double number = 0.0;
  bool boolean = false;
  std::vector<ConfigValue> items;
  std::size_t line = 0;

  const char* kind_name() const {
    switch (kind) {
      case Kind::string: return "string";
      case Kind::number: return "number";
      case Kind::boolean: return "boolean";
      case Kind::array: return "array";
    }
    return "?";
  }
};

class Config {
 public:
  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  const ConfigValue* find(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  const ConfigValue& at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ManifestError("missing required key '" + key + "'");
    return it->second;
  }

  void set(const std::string& key, ConfigValue value) {
    if (!values_.emplace(key, std::move(value)).second)
      throw ParseError("duplicate key '" + key + "'", values_.at(key).line);
  }

  const std::map<std::string, ConfigValue>& values() const { return values_; }

 private:
  std::map<std::string, ConfigValue> values_;
};

namespace detail {

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  ConfigValue parse_document_value() {
    ConfigValue v = parse_value();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                   text_[pos_] == '\r'))
      ++pos_;
  }

  ConfigValue parse_value() {
    skip_ws();
    if (pos_ >= text_.size()) fail("missing value");
    ConfigValue v;
    v.line = line_;
    const char c = text_[pos_];
    if (c == '"') {
      v.kind = ConfigValue::Kind::string;
      v.text = parse_string();
    } else if (c == '[') {
      v.kind = ConfigValue::Kind::array;
      ++pos_;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(parse_value());
        skip_ws();
        if (pos_ >= text_.size()) fail("unterminated array");
        if (text_[pos_] == ',') {
          ++pos_;
          skip_ws();
          if (pos_ < text_.size() && text_[pos_] == ']') {  // trailing comma
            ++pos_;
            break;
          }
          continue;
        }
        if (text_[pos_] == ']') {
          ++pos_;
          break;
        }
        fail("expected ',' or ']' in array");
      }
    } else {
      auto end = text_.find_first_of(",] \t\r\n", pos_);
      auto word = text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
      pos_ += word.size();
      if (word == "true" || word == "false") {
        v.kind = ConfigValue::Kind::boolean;
        v.boolean = word == "true";
      } else {
        v.kind = ConfigValue::Kind::number;
        v.text = std::string(word);
        try {
          v.number = parse_number(word);
        } catch (const ParseError&) {
          fail("invalid value '" + std::string(word) + "'");
        }
      }
    }
    return v;
  }

  std::string parse_string() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= text_.size()) break;
        const char e = text_[pos_++];
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
      } else {
        out += c;
      }
    }
    fail("unterminated string");
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

/// Removes a trailing '#' comment that is not inside a string.
inline std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_string) {
      ++i;
      continue;
    }
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline int bracket_balance(std::string_view text) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && in_string) {
      ++i;
      continue;
    }
    if (text[i] == '"') in_string = !in_string;
    if (in_string) continue;
    if (text[i] == '[') ++depth;
    if (text[i] == ']') --depth;
  }
  return depth;
}

inline bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return key.front() != '.' && key.back() != '.';
}

}  // namespace detail

inline Config parse_config(std::string_view text) {
  Config config;
  std::string section;
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    auto nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    auto line = flexgimbal::detail::trim(detail::strip_comment(lines[i]));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header", line_no);
      auto name = flexgimbal::detail::trim(line.substr(1, line.size() - 2));
      if (!detail::valid_key(name)) throw ParseError("invalid section name '" + std::string(name) + "'", line_no);
      section = std::string(name);
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    auto key = flexgimbal::detail::trim(line.substr(0, eq));
    if (!detail::valid_key(key)) throw ParseError("invalid key '" + std::string(key) + "'", line_no);

    std::string value_text(flexgimbal::detail::trim(line.substr(eq + 1)));
    while (detail::bracket_balance(value_text) > 0) {
      if (++i >= lines.size()) throw ParseError("unterminated array", line_no);
      value_text += '\n';
      value_text += flexgimbal::detail::trim(detail::strip_comment(lines[i]));
    }

    ConfigValue value = detail::ValueParser(value_text, line_no).parse_document_value();
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (config.contains(full)) throw ParseError("duplicate key '" + full + "'", line_no);
    config.set(full, std::move(value));
  }
  return config;
}

// ---------------------------------------------------------------------------
// Typed accessors. Type mismatches are manifest errors; unit problems are unit errors.

inline double get_quantity(const ConfigValue& v, Dimension expected, const std::string& key,
                           double g = kStandardGravity) {
  if (v.kind != ConfigValue::Kind::string)
    throw ManifestError("line " + std::to_string(v.line) + ": '" + key +
                        "' must be a quoted quantity with a unit, e.g. \"1.5 uNm\"");
  try {
    return parse_quantity(v.text, expected, g);
  } catch (const UnitError& e) {
    throw UnitError("line " + std::to_string(v.line) + ": '" + key + "': " + e.what());
  } catch (const ParseError& e) {
    throw ParseError("'" + key + "': " + e.what(), v.line);
  }
}

inline double get_quantity(const Config& c, const std::string& key, Dimension expected,
                           double g = kStandardGravity) {
  return get_quantity(c.at(key), expected, key, g);
}

inline double get_quantity_or(const Config& c, const std::string& key, Dimension expected,
                              double fallback, double g = kStandardGravity) {
  const ConfigValue* v = c.find(key);
  return v ? get_quantity(*v, expected, key, g) : fallback;
}

inline std::vector<double> get_quantity_list(const ConfigValue& v, Dimension expected,
                                             const std::string& key, double g = kStandardGravity) {
  if (v.kind != ConfigValue::Kind::array)
    throw ManifestError("line " + std::to_string(v.line) + ": '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& item : v.items) out.push_back(get_quantity(item, expected, key, g));
  return out;
}

inline double get_number(const Config& c, const std::string& key) {
  const ConfigValue& v = c.at(key);
  if (v.kind != ConfigValue::Kind::number)
    throw ManifestError("line " + std::to_string(v.line) + ": '" + key + "' must be a number");
  return v.number;
}

inline bool get_bool_or(const Config& c, const std::string& key, bool fallback) {
  const ConfigValue* v = c.find(key);
  if (!v) return fallback;
  if (v->kind != ConfigValue::Kind::boolean)
    throw ManifestError("line " + std::to_string(v->line) + ": '" + key + "' must be true or false");
  return v->boolean;
}

inline std::uint64_t get_unsigned(const Config& c, const std::string& key) {
  const ConfigValue& v = c.at(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (v.kind != ConfigValue::Kind::number || ec != std::errc{} || ptr != v.text.data() + v.text.size())
    throw ManifestError("line " + std::to_string(v.line) + ": '" + key +
                        "' must be a non-negative integer");
  return out;
}

/// Quotes a string for emission.
inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

}  // namespace flexgimbal::io
