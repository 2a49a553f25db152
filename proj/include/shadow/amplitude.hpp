#pragma once

// Complex probability amplitudes and the four composition rules:
//   probability     P = |phi|^2
//   alternatives    phi = phi_1 + phi_2 + ...
//   route           phi = phi_part1 * phi_part2 * ...
//   independent     phi = phi_left * phi_right   (two separate particles)

#include <cmath>
#include <complex>
#include <initializer_list>
#include <numbers>
#include <span>

#include "shadow/error.hpp"

namespace shadow {

using Amplitude = std::complex<double>;

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Default absolute tolerance for exact-arithmetic comparisons.
inline constexpr double kExactTol = 1e-12;

inline bool is_finite(Amplitude phi) noexcept {
  return std::isfinite(phi.real()) && std::isfinite(phi.imag());
}

inline Amplitude require_finite(Amplitude phi, const char* where) {
  if (!is_finite(phi)) {
    throw DomainError(std::string(where) + ": non-finite amplitude");
  }
  return phi;
}

/// e^{i theta}
inline Amplitude unit_phase(double theta) { return std::polar(1.0, theta); }

inline double probability_of(Amplitude phi) {
  require_finite(phi, "probability_of");
  return std::norm(phi);
}

/// Sum over alternative ways the same event can happen.
inline Amplitude sum_alternatives(std::span<const Amplitude> phis) {
  if (phis.empty()) throw DomainError("sum_alternatives: no alternatives given");
  Amplitude total{0.0, 0.0};
  for (Amplitude phi : phis) total += require_finite(phi, "sum_alternatives");
  return total;
}

inline Amplitude sum_alternatives(std::initializer_list<Amplitude> phis) {
  return sum_alternatives(std::span<const Amplitude>(phis.begin(), phis.size()));
}

/// Product of the amplitudes for successive legs of a single route, in order.
inline Amplitude chain_route(std::span<const Amplitude> phis) {
  if (phis.empty()) throw DomainError("chain_route: empty route");
  Amplitude total{1.0, 0.0};
  for (Amplitude phi : phis) total *= require_finite(phi, "chain_route");
  return total;
}

inline Amplitude chain_route(std::initializer_list<Amplitude> phis) {
  return chain_route(std::span<const Amplitude>(phis.begin(), phis.size()));
}

/// Joint amplitude of two non-interacting particles doing two separate things.
inline Amplitude product_independent(Amplitude left, Amplitude right) {
  require_finite(left, "product_independent");
  require_finite(right, "product_independent");
  return left * right;
}

/// Polar view of an amplitude: the rotating "clock" hand.
/// Amplitudes are stored rectangular; a Clock is derived on demand.
struct Clock {
  double phase = 0.0;      // radians, [0, 2pi)
  double magnitude = 0.0;  // >= 0

  static Clock of(Amplitude phi) {
    require_finite(phi, "Clock::of");
    double phase = std::arg(phi);
    if (phase < 0.0) phase += kTwoPi;
    if (phase >= kTwoPi) phase -= kTwoPi;
    return Clock{phase, std::abs(phi)};
  }

  Amplitude amplitude() const { return std::polar(magnitude, phase); }
};

}  // namespace shadow
