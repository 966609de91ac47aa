#pragma once

// Unit-tagged quantity parsing. Every physical value that crosses a file
// boundary is written as "<number> <unit>" and converted to SI here.
//
// Unit grammar: factor (('*' | '·' | '/') factor)*, factor = [prefix] base ['^' int].
// '/' divides by the next factor only, so "Nm/rad/s" is N·m·rad⁻¹·s⁻¹.

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>

#include "flexgimbal/error.hpp"

namespace flexgimbal {

inline constexpr double kStandardGravity = 9.81;  // m/s², used project-wide

/// Exponents of kg, m, s, rad and V. Angles are tracked as a dimension so that
/// N·m and N·m/rad cannot be confused.
struct Dimension {
  int kg = 0;
  int m = 0;
  int s = 0;
  int rad = 0;
  int volt = 0;

  friend constexpr bool operator==(const Dimension&, const Dimension&) = default;

  friend constexpr Dimension operator*(Dimension a, Dimension b) {
    return {a.kg + b.kg, a.m + b.m, a.s + b.s, a.rad + b.rad, a.volt + b.volt};
  }
  friend constexpr Dimension operator/(Dimension a, Dimension b) {
    return {a.kg - b.kg, a.m - b.m, a.s - b.s, a.rad - b.rad, a.volt - b.volt};
  }
  constexpr Dimension pow(int n) const { return {kg * n, m * n, s * n, rad * n, volt * n}; }

  std::string str() const {
    std::string out;
    auto put = [&out](const char* sym, int e) {
      if (e == 0) return;
      if (!out.empty()) out += '*';
      out += sym;
      if (e != 1) out += '^' + std::to_string(e);
    };
    put("kg", kg);
    put("m", m);
    put("s", s);
    put("rad", rad);
    put("V", volt);
    return out.empty() ? "1" : out;
  }
};

namespace dim {
inline constexpr Dimension none{};
inline constexpr Dimension mass{1, 0, 0, 0, 0};
inline constexpr Dimension length{0, 1, 0, 0, 0};
inline constexpr Dimension time{0, 0, 1, 0, 0};
inline constexpr Dimension angle{0, 0, 0, 1, 0};
inline constexpr Dimension voltage{0, 0, 0, 0, 1};
inline constexpr Dimension frequency = none / time;
inline constexpr Dimension acceleration = length / time.pow(2);
inline constexpr Dimension force = mass * acceleration;
inline constexpr Dimension torque = force * length;
inline constexpr Dimension pressure = force / length.pow(2);
inline constexpr Dimension inertia = mass * length.pow(2);
inline constexpr Dimension stiffness = torque / angle;                 // N·m/rad
inline constexpr Dimension damping = torque * time / angle;            // N·m·s/rad
inline constexpr Dimension integral_gain = torque / (angle * time);    // N·m/(rad·s)
inline constexpr Dimension torque_per_volt = torque / voltage;
inline constexpr Dimension force_per_volt = force / voltage;
}  // namespace dim

struct Unit {
  double scale = 1.0;  // SI value of one unit
  Dimension dimension{};
};

namespace detail {

struct BaseUnit {
  std::string_view symbol;
  Unit unit;
  bool prefixable;
};

inline constexpr std::array<BaseUnit, 11> kBaseUnits{{
    {"Nm", {1.0, dim::torque}, true},
    {"N", {1.0, dim::force}, true},
    {"Pa", {1.0, dim::pressure}, true},
    {"Hz", {1.0, dim::frequency}, true},
    {"rad", {1.0, dim::angle}, true},
    {"deg", {std::numbers::pi / 180.0, dim::angle}, false},
    {"g", {1e-3, dim::mass}, true},
    {"m", {1.0, dim::length}, true},
    {"s", {1.0, dim::time}, true},
    {"V", {1.0, dim::voltage}, true},
    {"1", {1.0, dim::none}, false},
}};

struct Prefix {
  std::string_view symbol;
  double scale;
};

inline constexpr std::array<Prefix, 9> kPrefixes{{
    {"G", 1e9},
    {"M", 1e6},
    {"k", 1e3},
    {"c", 1e-2},
    {"m", 1e-3},
    {"u", 1e-6},
    {"\xC2\xB5", 1e-6},  // µ micro sign
    {"\xCE\xBC", 1e-6},  // μ greek mu
    {"n", 1e-9},
}};

inline bool lookup_base(std::string_view sym, Unit& out, bool require_prefixable) {
  for (const auto& b : kBaseUnits) {
    if (b.symbol == sym && (!require_prefixable || b.prefixable)) {
      out = b.unit;
      return true;
    }
  }
  return false;
}

inline Unit parse_factor(std::string_view tok, std::string_view whole) {
  int exponent = 1;
  if (auto caret = tok.find('^'); caret != std::string_view::npos) {
    auto digits = tok.substr(caret + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), exponent);
    if (ec != std::errc{} || ptr != digits.data() + digits.size())
      throw UnitError("bad exponent in unit '" + std::string(whole) + "'");
    tok = tok.substr(0, caret);
  }
  Unit u;
  if (!lookup_base(tok, u, false)) {
    bool found = false;
    for (const auto& p : kPrefixes) {
      if (tok.size() > p.symbol.size() && tok.starts_with(p.symbol) &&
          lookup_base(tok.substr(p.symbol.size()), u, true)) {
        u.scale *= p.scale;
        found = true;
        break;
      }
    }
    if (!found) throw UnitError("unknown unit '" + std::string(tok) + "' in '" + std::string(whole) + "'");
  }
  return {std::pow(u.scale, exponent), u.dimension.pow(exponent)};
}

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses a compound unit string such as "uNm/rad", "kg*m^2" or "mg/V".
inline Unit parse_unit(std::string_view text) {
  text = detail::trim(text);
  if (text.empty()) throw UnitError("missing unit");
  Unit result;
  bool divide = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = pos;
    std::size_t sep_len = 0;
    bool next_divide = false;
    while (next < text.size()) {
      if (text[next] == '*') { sep_len = 1; break; }
      if (text[next] == '/') { sep_len = 1; next_divide = true; break; }
      if (text.substr(next).starts_with("\xC2\xB7")) { sep_len = 2; break; }  // middle dot
      ++next;
    }
    auto tok = text.substr(pos, next - pos);
    if (tok.empty()) throw UnitError("malformed unit '" + std::string(text) + "'");
    Unit f = detail::parse_factor(tok, text);
    if (divide) {
      result.scale /= f.scale;
      result.dimension = result.dimension / f.dimension;
    } else {
      result.scale *= f.scale;
      result.dimension = result.dimension * f.dimension;
    }
    if (next >= text.size()) break;
    divide = next_divide;
    pos = next + sep_len;
  }
  return result;
}

/// Scale from `unit` to SI for a quantity of dimension `expected`. A mass unit
/// is accepted where a force is expected (thrust in mg, slopes in mg/V) and
/// is converted through g.
inline double unit_scale(std::string_view unit, Dimension expected, double g = kStandardGravity) {
  Unit u = parse_unit(unit);
  if (u.dimension == expected) return u.scale;
  if (u.dimension * dim::acceleration == expected) return u.scale * g;
  throw UnitError("unit '" + std::string(unit) + "' has dimension " + u.dimension.str() +
                  ", expected " + expected.str());
}

/// Shortest representation that parses back to the identical double.
inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf.data(), ptr);
}

inline double parse_number(std::string_view text) {
  text = detail::trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ParseError("not a number: '" + std::string(text) + "'");
  return v;
}

/// Parses "<number> <unit>" into SI.
inline double parse_quantity(std::string_view text, Dimension expected, double g = kStandardGravity) {
  text = detail::trim(text);
  auto split = text.find_first_of(" \t");
  if (split == std::string_view::npos) {
    if (expected == dim::none) return parse_number(text);
    throw UnitError("quantity '" + std::string(text) + "' carries no unit");
  }
  double value = parse_number(text.substr(0, split));
  return value * unit_scale(text.substr(split + 1), expected, g);
}

/// Formats an SI value in the requested unit, e.g. (2.16e-6, "uNm/rad") -> "2.16 uNm/rad".
inline std::string format_quantity(double value, std::string_view unit, Dimension expected,
                                   double g = kStandardGravity) {
  return format_number(value / unit_scale(unit, expected, g)) + " " + std::string(unit);
}

}  // namespace flexgimbal
