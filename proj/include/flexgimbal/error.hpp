#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flexgimbal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Sensitivity k_s <= 0: the device cannot hold the robot upright.
class DegenerateSensitivity : public Error {
 public:
  using Error::Error;
};

/// Command rejected because a wing signal is non-positive or clipped at the rails.
class InvalidCommand : public Error {
 public:
  using Error::Error;
};

class OutOfLinearRange : public Error {
 public:
  using Error::Error;
};

/// Euler-angle kinematics evaluated too close to pitch = +-90 deg.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(what + " (t = " + std::to_string(time) + " s)"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double roll_angle, double pitch_angle,
                     double roll_rate, double pitch_rate)
      : Error(what),
        roll_angle_(roll_angle),
        pitch_angle_(pitch_angle),
        roll_rate_(roll_rate),
        pitch_rate_(pitch_rate) {}

  double roll_angle() const noexcept { return roll_angle_; }
  double pitch_angle() const noexcept { return pitch_angle_; }
  double roll_rate() const noexcept { return roll_rate_; }
  double pitch_rate() const noexcept { return pitch_rate_; }

 private:
  double roll_angle_, pitch_angle_, roll_rate_, pitch_rate_;
};

class RankDeficiency : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally valid file whose contents violate the format's rules.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UnitError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

}  // namespace flexgimbal
