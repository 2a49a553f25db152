#pragma once

// Reference computations for the tests. Nothing here calls into the library's
// formulas; each oracle recomputes its quantity from first principles.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using C = std::complex<double>;
using Mat2 = std::array<std::array<C, 2>, 2>;
using Mat4 = std::array<std::array<C, 4>, 4>;
using Vec4 = std::array<C, 4>;

inline constexpr double kPi = std::numbers::pi;

inline Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 m{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) m[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
  return m;
}

inline Vec4 matvec(const Mat4& m, const Vec4& v) {
  Vec4 out{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out[i] += m[i][j] * v[j];
  return out;
}

/// Two-photon state vector evolved through both wings. Mode order per wing:
/// left (a, b) -> (u, d); right (a', b') -> (u', d'). Returns probabilities
/// for (u,u'), (u,d'), (d,u'), (d,d').
///
/// Left splitter maps a to u by reflection (i), b to u by transmission; right
/// splitter maps a' to u' by transmission, b' to u' by reflection. Shifters:
/// e^{i alpha} on a, e^{i beta} on b'.
inline std::array<double, 4> two_photon_probabilities(double alpha, double beta) {
  const double s = 1.0 / std::sqrt(2.0);
  const C i{0.0, 1.0};
  Mat2 left{{{i * s * std::exp(i * alpha), s}, {s * std::exp(i * alpha), i * s}}};
  Mat2 right{{{s, i * s * std::exp(i * beta)}, {i * s, s * std::exp(i * beta)}}};
  // |psi> = (|a a'> + |b b'>)/sqrt(2) in basis (aa', ab', ba', bb').
  Vec4 psi{s, 0.0, 0.0, s};
  Vec4 out = matvec(kron(left, right), psi);
  return {std::norm(out[0]), std::norm(out[1]), std::norm(out[2]), std::norm(out[3])};
}

/// Binomial standard deviation of a frequency.
inline double binomial_sd(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

/// Least-squares slope of y on x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

/// Free Gaussian packet density width: sigma(t)^2 = sigma0^2 + (hbar t / (2 m sigma0))^2.
inline double spread(double sigma0, double t, double m = 1.0, double hbar = 1.0) {
  double k = hbar * t / (2.0 * m * sigma0);
  return std::sqrt(sigma0 * sigma0 + k * k);
}

/// sqrt(m/(2 pi i hbar T)) exp(i m d^2/(2 hbar T)), written with an explicit e^{-i pi/4}.
inline C free_kernel(double b, double a, double T, double m = 1.0, double hbar = 1.0) {
  double mod = std::sqrt(m / (2.0 * kPi * hbar * T));
  double phase = m * (b - a) * (b - a) / (2.0 * hbar * T) - kPi / 4.0;
  return std::polar(mod, phase);
}

/// Fixed-seed generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double angle() { return uniform(0.0, 2.0 * kPi); }
  C amplitude(double max_modulus = 1.0) {
    return std::polar(uniform(0.0, max_modulus), angle());
  }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace oracle
