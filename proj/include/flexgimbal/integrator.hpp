#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "flexgimbal/error.hpp"

namespace flexgimbal {

template <std::size_t N>
using StateVector = std::array<double, N>;

/// One classical fourth-order Runge–Kutta step of y' = f(t, y).
///
/// Throws DivergenceError if the updated state is not finite.
template <std::size_t N, class Derivative>
StateVector<N> step_rk4(const StateVector<N>& y, double t, double dt, Derivative&& f) {
  if (!(dt > 0.0)) throw InvalidParameter("integration step must be positive");

  auto axpy = [](const StateVector<N>& base, double h, const StateVector<N>& k) {
    StateVector<N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = base[i] + h * k[i];
    return out;
  };

  const StateVector<N> k1 = f(t, y);
  const StateVector<N> k2 = f(t + dt / 2.0, axpy(y, dt / 2.0, k1));
  const StateVector<N> k3 = f(t + dt / 2.0, axpy(y, dt / 2.0, k2));
  const StateVector<N> k4 = f(t + dt, axpy(y, dt, k3));

  StateVector<N> next;
  for (std::size_t i = 0; i < N; ++i) {
    next[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!std::isfinite(next[i])) throw DivergenceError("simulation state became non-finite", t + dt);
  }
  return next;
}

}  // namespace flexgimbal
