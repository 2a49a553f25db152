#pragma once

// Time-sliced propagation of a 1-D wavefunction:
//   psi(x, t + eps) = (1/A) sum_a exp[(i/hbar) S(x, a)] psi(a, t) dx
// with the straight-line slice action and the potential sampled at the
// midpoint (x + a)/2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shadow/amplitude.hpp"
#include "shadow/error.hpp"

namespace shadow::pathint {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Amplitude kI{0.0, 1.0};

/// V(x). Named so configs can round-trip through text ("free", "harmonic:1.5").
struct Potential {
  std::string spec = "free";
  std::function<double(double)> V;  // empty means V = 0

  bool is_free() const noexcept { return !V; }
  double operator()(double x) const { return V ? V(x) : 0.0; }

  static Potential free() { return {}; }

  /// (1/2) m omega^2 x^2
  static Potential harmonic(double omega, double mass = 1.0) {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigError("harmonic: omega must be > 0");
    char buf[64];
    std::snprintf(buf, sizeof buf, "harmonic:%.17g", omega);
    return {buf, [k = 0.5 * mass * omega * omega](double x) { return k * x * x; }};
  }

  /// F x
  static Potential linear(double force) {
    if (!std::isfinite(force)) throw ConfigError("linear: force must be finite");
    char buf[64];
    std::snprintf(buf, sizeof buf, "linear:%.17g", force);
    return {buf, [force](double x) { return force * x; }};
  }

  static Potential custom(std::string name, std::function<double(double)> v) {
    return {std::move(name), std::move(v)};
  }
};

struct Params {
  double mass = 1.0;
  double hbar = 1.0;
  Potential potential;
  // For "harmonic:w" specs; 0 otherwise.
  double omega = 0.0;

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw ConfigError("mass must be > 0");
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ConfigError("hbar must be > 0");
  }
};

/// "free" | "harmonic:<omega>" | "linear:<force>"
inline Params make_params(std::string_view potential_spec, double mass = 1.0, double hbar = 1.0) {
  Params p;
  p.mass = mass;
  p.hbar = hbar;
  p.validate();
  auto number_after = [&](std::string_view prefix) {
    std::string rest(potential_spec.substr(prefix.size()));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size()) {
      throw ConfigError("potential: cannot parse number in '" + std::string(potential_spec) + "'");
    }
    return v;
  };
  if (potential_spec == "free") {
    p.potential = Potential::free();
  } else if (potential_spec.starts_with("harmonic:")) {
    p.omega = number_after("harmonic:");
    p.potential = Potential::harmonic(p.omega, mass);
  } else if (potential_spec.starts_with("linear:")) {
    p.potential = Potential::linear(number_after("linear:"));
  } else {
    throw ConfigError("potential: unknown spec '" + std::string(potential_spec) +
                      "' (expected free, harmonic:<omega> or linear:<force>)");
  }
  return p;
}

/// Uniform grid x_i = x0 + i*dx, i in [0, n).
struct Grid {
  double x0 = 0.0;
  double dx = 1.0;
  std::size_t n = 0;

  double x(std::size_t i) const noexcept { return x0 + static_cast<double>(i) * dx; }
  double length() const noexcept { return static_cast<double>(n) * dx; }
  double x_max() const noexcept { return x(n - 1); }

  /// n points centered on `center`, spacing dx (odd n puts a point on center).
  static Grid centered(double center, double dx, std::size_t n) {
    if (n < 3) throw ConfigError("grid needs at least 3 points");
    if (!(dx > 0.0) || !std::isfinite(dx)) throw ConfigError("grid spacing must be > 0");
    return {center - static_cast<double>(n / 2) * dx, dx, n};
  }

  /// n points covering [lo, hi) with spacing (hi - lo)/n.
  static Grid span(double lo, double hi, std::size_t n) {
    if (n < 3) throw ConfigError("grid needs at least 3 points");
    if (!(hi > lo)) throw ConfigError("grid: need hi > lo");
    return {lo, (hi - lo) / static_cast<double>(n), n};
  }

  bool operator==(const Grid&) const = default;
};

struct PropagatorGrid {
  Grid grid;
  std::vector<Amplitude> psi;
  double t = 0.0;
  Params params;

  double dx() const noexcept { return grid.dx; }
};

// ---------------------------------------------------------------------------
// Closed forms

/// m (x - a)^2 / (2 eps) - eps * V((x + a)/2)
inline double slice_action(double x, double a, double eps, const Params& p) {
  double v = (x - a) / eps;
  return 0.5 * p.mass * v * v * eps - eps * p.potential(0.5 * (x + a));
}

/// A = sqrt(2 pi i hbar eps / m), principal branch.
inline Amplitude normalization_constant(double eps, const Params& p) {
  return std::sqrt(Amplitude(0.0, 2.0 * kPi * p.hbar * eps / p.mass));
}

/// One-slice kernel A^-1 exp[(i/hbar) S(b, a)].
inline Amplitude slice_kernel(double b, double a, double eps, const Params& p) {
  return std::exp(kI * (slice_action(b, a, eps, p) / p.hbar)) / normalization_constant(eps, p);
}

/// sqrt(m / (2 pi i hbar T)) exp[i m (b - a)^2 / (2 hbar T)]
inline Amplitude free_kernel(double b, double a, double T, double mass = 1.0, double hbar = 1.0) {
  Amplitude pref = std::sqrt(Amplitude(0.0, -mass / (2.0 * kPi * hbar * T)));
  double d = b - a;
  return pref * std::exp(kI * (mass * d * d / (2.0 * hbar * T)));
}

/// Mehler kernel for V = (1/2) m w^2 x^2, valid for 0 < wT < pi.
inline Amplitude harmonic_kernel(double b, double a, double T, double omega, double mass = 1.0,
                                 double hbar = 1.0) {
  double s = std::sin(omega * T);
  if (!(omega * T > 0.0 && omega * T < kPi)) throw DomainError("harmonic_kernel: need 0 < wT < pi");
  Amplitude pref = std::sqrt(Amplitude(0.0, -mass * omega / (2.0 * kPi * hbar * s)));
  double phase = mass * omega * ((a * a + b * b) * std::cos(omega * T) - 2.0 * a * b) / (2.0 * hbar * s);
  return pref * std::exp(kI * phase);
}

/// Analytic kernel when one is known (free, harmonic).
inline std::optional<Amplitude> analytic_kernel(double b, double a, double T, const Params& p) {
  if (p.potential.is_free()) return free_kernel(b, a, T, p.mass, p.hbar);
  if (p.omega > 0.0 && p.omega * T < kPi) return harmonic_kernel(b, a, T, p.omega, p.mass, p.hbar);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Discrete slice operator

struct PropagatorOptions {
  // Rescale psi to unit norm after every slice. The midpoint kernel loses
  // O(eps^2) norm per slice when V != 0.
  bool renormalize = false;
};

/// Kinetic-phase sampling ratio hbar*eps / (m dx^2). Must be >= 1.
inline double sampling_ratio(double eps, double dx, const Params& p) {
  return p.hbar * eps / (p.mass * dx * dx);
}

/// One time slice on a fixed grid.
///
/// The Fresnel integrand exp(i m u^2 / (2 hbar eps)) is summed over offsets
/// |u| <= W where W = pi hbar eps / (m dx) is the offset at which its phase
/// advances by pi per grid step; beyond W it aliases. A smooth erfc taper
/// rolls the window off before W and the taps are divided by their own sum,
/// the discrete counterpart of A (they agree as dx -> 0).
class SlicePropagator {
 public:
  static constexpr double kTaperCenter = 0.55;  // fraction of W
  static constexpr double kTaperWidth = 0.12;   // fraction of W

  SlicePropagator(const Grid& grid, double eps, Params params, PropagatorOptions opt = {})
      : grid_(grid), eps_(eps), params_(std::move(params)), opt_(opt) {
    params_.validate();
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("epsilon must be > 0");
    if (grid.n < 3 || !(grid.dx > 0.0)) throw ConfigError("grid must have >= 3 points and dx > 0");
    double r = sampling_ratio(eps, grid.dx, params_);
    if (r < 1.0) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "epsilon too small for dx: hbar*eps/(m*dx^2) = %.6g < 1; the kinetic "
                    "phase is undersampled",
                    r);
      throw ConfigError(buf);
    }
    double spread = params_.hbar * eps / params_.mass;
    double limit = grid.length() / 10.0;
    if (spread > limit * limit) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "epsilon too large for domain: hbar*eps/m = %.6g > (L/10)^2 = %.6g", spread,
                    limit * limit);
      throw ConfigError(buf);
    }
    window_ = kPi * spread / grid.dx;
    half_ = static_cast<std::size_t>(std::floor(window_ / grid.dx));
    taps_.resize(2 * half_ + 1);
    Amplitude z = 0.0;
    for (std::size_t k = 0; k < taps_.size(); ++k) {
      double u = (static_cast<double>(k) - static_cast<double>(half_)) * grid.dx;
      taps_[k] = tap(u);
      z += taps_[k];
    }
    z_ = z;
    for (Amplitude& t : taps_) t /= z;
    if (!params_.potential.is_free()) {
      // Midpoint (x_i + x_j)/2 depends only on i + j.
      vphase_.resize(2 * grid.n - 1);
      for (std::size_t s = 0; s < vphase_.size(); ++s) {
        double mid = grid.x0 + 0.5 * static_cast<double>(s) * grid.dx;
        vphase_[s] = std::exp(kI * (-eps * params_.potential(mid) / params_.hbar));
      }
    }
  }

  const Grid& grid() const noexcept { return grid_; }
  double epsilon() const noexcept { return eps_; }
  const Params& params() const noexcept { return params_; }
  std::size_t half_width() const noexcept { return half_; }
  double window() const noexcept { return window_; }
  std::span<const Amplitude> taps() const noexcept { return taps_; }
  /// Discrete tap sum before normalization, in units of 1/dx: approximates A/dx.
  Amplitude discrete_normalization() const noexcept { return z_ * grid_.dx; }

  std::vector<Amplitude> apply(std::span<const Amplitude> psi) const {
    if (psi.size() != grid_.n) throw DomainError("psi size does not match grid");
    const std::size_t n = grid_.n;
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(half_);
    std::vector<Amplitude> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i);
      std::ptrdiff_t j_lo = std::max<std::ptrdiff_t>(0, ii - h);
      std::ptrdiff_t j_hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, ii + h);
      double re = 0.0, im = 0.0;
      if (vphase_.empty()) {
        for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) {
          const Amplitude& t = taps_[static_cast<std::size_t>(ii - j + h)];
          const Amplitude& p = psi[static_cast<std::size_t>(j)];
          re += t.real() * p.real() - t.imag() * p.imag();
          im += t.real() * p.imag() + t.imag() * p.real();
        }
      } else {
        for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) {
          const Amplitude& t = taps_[static_cast<std::size_t>(ii - j + h)];
          const Amplitude& v = vphase_[static_cast<std::size_t>(ii + j)];
          const Amplitude& p = psi[static_cast<std::size_t>(j)];
          double tr = t.real() * v.real() - t.imag() * v.imag();
          double ti = t.real() * v.imag() + t.imag() * v.real();
          re += tr * p.real() - ti * p.imag();
          im += tr * p.imag() + ti * p.real();
        }
      }
      out[i] = {re, im};
    }
    if (opt_.renormalize) normalize(out);
    return out;
  }

  /// One slice evaluated at an arbitrary point x (need not lie on the grid).
  Amplitude evaluate_at(std::span<const Amplitude> psi, double x) const {
    if (psi.size() != grid_.n) throw DomainError("psi size does not match grid");
    Amplitude acc = 0.0;
    double lo = (x - window_ - grid_.x0) / grid_.dx;
    double hi = (x + window_ - grid_.x0) / grid_.dx;
    std::size_t j0 = static_cast<std::size_t>(std::max(0.0, std::ceil(lo)));
    std::size_t j1 = static_cast<std::size_t>(
        std::clamp(std::floor(hi), -1.0, static_cast<double>(grid_.n) - 1.0) + 1.0);
    for (std::size_t j = j0; j < j1; ++j) {
      double xj = grid_.x(j);
      Amplitude k = tap(x - xj) / z_;
      if (!vphase_.empty()) {
        k *= std::exp(kI * (-eps_ * params_.potential(0.5 * (x + xj)) / params_.hbar));
      }
      acc += k * psi[j];
    }
    return acc;
  }

  void normalize(std::vector<Amplitude>& psi) const {
    double s = 0.0;
    for (const Amplitude& a : psi) s += std::norm(a);
    s *= grid_.dx;
    if (s > 0.0) {
      double k = 1.0 / std::sqrt(s);
      for (Amplitude& a : psi) a *= k;
    }
  }

 private:
  Amplitude tap(double u) const {
    double au = std::abs(u);
    if (au > window_) return 0.0;
    double w = 0.5 * std::erfc((au - kTaperCenter * window_) / (kTaperWidth * window_));
    return w * std::exp(kI * (params_.mass * u * u / (2.0 * params_.hbar * eps_)));
  }

  Grid grid_;
  double eps_;
  Params params_;
  PropagatorOptions opt_;
  double window_ = 0.0;
  std::size_t half_ = 0;
  std::vector<Amplitude> taps_;
  Amplitude z_{1.0, 0.0};
  std::vector<Amplitude> vphase_;
};

/// Advance one slice. Builds the slice operator on each call; use
/// SlicePropagator directly for long runs.
inline PropagatorGrid slice_propagate(const PropagatorGrid& g, double eps,
                                      PropagatorOptions opt = {}) {
  SlicePropagator prop(g.grid, eps, g.params, opt);
  return {g.grid, prop.apply(g.psi), g.t + eps, g.params};
}

/// Run `slices` slices; `observe(state, k)` sees k = 0 .. slices.
inline PropagatorGrid evolve(PropagatorGrid g, double eps, std::size_t slices,
                             PropagatorOptions opt = {},
                             const std::function<void(const PropagatorGrid&, std::size_t)>& observe = {}) {
  if (observe) observe(g, 0);
  if (slices == 0) return g;
  SlicePropagator prop(g.grid, eps, g.params, opt);
  for (std::size_t k = 1; k <= slices; ++k) {
    g.psi = prop.apply(g.psi);
    g.t += eps;
    if (observe) observe(g, k);
  }
  return g;
}

// ---------------------------------------------------------------------------
// States and observables

/// exp(-(x - x0)^2 / (4 sigma^2) + i k0 x), unit discrete norm. sigma is the
/// standard deviation of |psi|^2.
inline std::vector<Amplitude> gaussian_packet(const Grid& grid, double x0, double sigma,
                                              double k0 = 0.0) {
  if (!(sigma > 0.0)) throw ConfigError("packet width must be > 0");
  std::vector<Amplitude> psi(grid.n);
  double s = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    double x = grid.x(i);
    double d = x - x0;
    psi[i] = std::exp(-d * d / (4.0 * sigma * sigma)) * std::exp(kI * (k0 * x));
    s += std::norm(psi[i]);
  }
  double k = 1.0 / std::sqrt(s * grid.dx);
  for (Amplitude& a : psi) a *= k;
  return psi;
}

inline PropagatorGrid make_state(const Grid& grid, std::vector<Amplitude> psi, Params params,
                                 double t = 0.0) {
  if (psi.size() != grid.n) throw DomainError("psi size does not match grid");
  return {grid, std::move(psi), t, std::move(params)};
}

struct Moments {
  double norm = 0.0;
  double mean = 0.0;
  double width = 0.0;  // standard deviation of |psi|^2 / norm
};

inline Moments moments(const Grid& grid, std::span<const Amplitude> psi) {
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    double p = std::norm(psi[i]);
    s0 += p;
    s1 += p * grid.x(i);
  }
  Moments m;
  m.norm = s0 * grid.dx;
  if (s0 == 0.0) return m;
  m.mean = s1 / s0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    double d = grid.x(i) - m.mean;
    s2 += std::norm(psi[i]) * d * d;
  }
  m.width = std::sqrt(s2 / s0);
  return m;
}

inline Moments moments(const PropagatorGrid& g) { return moments(g.grid, g.psi); }

inline double boundary_magnitude(std::span<const Amplitude> psi) {
  if (psi.empty()) return 0.0;
  return std::max(std::abs(psi.front()), std::abs(psi.back()));
}

/// sigma(t)^2 = sigma0^2 + (hbar t / (2 m sigma0))^2
inline double free_packet_width(double sigma0, double t, double mass = 1.0, double hbar = 1.0) {
  double s = hbar * t / (2.0 * mass * sigma0);
  return std::sqrt(sigma0 * sigma0 + s * s);
}

// ---------------------------------------------------------------------------
// Kernel extraction

struct KernelOptions {
  double ratio = 16.0;          // hbar*eps/(m dx^2)
  double source_width = 2.0;    // initial Gaussian width, in units of dx
  double extent = 6.2;          // grid half-width in units of hbar T / (m sigma)
  std::size_t max_points = 1u << 22;
};

struct KernelGridPlan {
  double eps = 0.0;
  double dx = 0.0;
  double sigma = 0.0;
  Grid grid;
};

inline KernelGridPlan plan_kernel_grid(double a, double b, double T, std::size_t slices,
                                       const Params& p, const KernelOptions& opt) {
  if (slices == 0) throw DomainError("discretized_kernel: slices must be >= 1");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("kernel time must be > 0");
  if (!(opt.ratio >= 1.0)) throw ConfigError("kernel sampling ratio must be >= 1");
  KernelGridPlan plan;
  plan.eps = T / static_cast<double>(slices);
  plan.dx = std::sqrt(p.hbar * plan.eps / (p.mass * opt.ratio));
  plan.sigma = opt.source_width * plan.dx;
  double window = kPi * p.hbar * plan.eps / (p.mass * plan.dx);
  double half = opt.extent * p.hbar * T / (p.mass * plan.sigma);
  half = std::max(half, std::abs(b - a) + 10.0 * plan.sigma + 2.0 * window);
  std::size_t n = 2 * static_cast<std::size_t>(std::ceil(half / plan.dx)) + 1;
  if (n > opt.max_points) throw ConfigError("kernel grid would exceed max_points");
  plan.grid = Grid::centered(a, plan.dx, n);
  return plan;
}

/// Normalized Gaussian exp(-(x-a)^2/(2 s^2)) / (sqrt(2 pi) s): integrates to 1.
inline std::vector<Amplitude> delta_source(const Grid& grid, double a, double s) {
  std::vector<Amplitude> psi(grid.n);
  double k = 1.0 / (std::sqrt(2.0 * kPi) * s);
  for (std::size_t i = 0; i < grid.n; ++i) {
    double d = grid.x(i) - a;
    psi[i] = k * std::exp(-d * d / (2.0 * s * s));
  }
  return psi;
}

/// K(b, a; T) by iterating slices on a narrow Gaussian source at a. The last
/// slice is evaluated directly at b. slices = 1 gives the closed-form slice kernel.
inline Amplitude discretized_kernel(double a, double b, double T, std::size_t slices,
                                    const Params& p, const KernelOptions& opt = {}) {
  p.validate();
  if (slices == 0) throw DomainError("discretized_kernel: slices must be >= 1");
  if (slices == 1) {
    if (!(T > 0.0)) throw ConfigError("kernel time must be > 0");
    return slice_kernel(b, a, T, p);
  }
  KernelGridPlan plan = plan_kernel_grid(a, b, T, slices, p, opt);
  SlicePropagator prop(plan.grid, plan.eps, p);
  std::vector<Amplitude> psi = delta_source(plan.grid, a, plan.sigma);
  for (std::size_t k = 0; k + 1 < slices; ++k) psi = prop.apply(psi);
  return prop.evaluate_at(psi, b);
}

/// K(x_i, a; T) on the planned grid, for composition checks.
inline PropagatorGrid discretized_kernel_row(double a, double T, std::size_t slices,
                                             const Params& p, const KernelOptions& opt = {},
                                             double reach = 0.0) {
  p.validate();
  KernelGridPlan plan = plan_kernel_grid(a, a + reach, T, slices, p, opt);
  PropagatorGrid g{plan.grid, delta_source(plan.grid, a, plan.sigma), 0.0, p};
  return evolve(std::move(g), plan.eps, slices);
}

struct KernelStudyRow {
  std::size_t slices = 0;
  double rel_error_modulus = 0.0;  // max over endpoints of ||K|/|K_exact| - 1|
  double phase_error = 0.0;        // max over endpoints of |arg(K/K_exact)|
};

/// Discretized vs analytic kernel for each slice count, at every endpoint b.
inline std::vector<KernelStudyRow> kernel_study(double a, std::span<const double> endpoints,
                                                double T, std::span<const std::size_t> slice_counts,
                                                const Params& p, const KernelOptions& opt = {}) {
  if (endpoints.empty()) throw ConfigError("kernel study: no endpoints");
  std::vector<KernelStudyRow> rows;
  for (std::size_t s : slice_counts) {
    KernelStudyRow row{s, 0.0, 0.0};
    for (double b : endpoints) {
      std::optional<Amplitude> exact = analytic_kernel(b, a, T, p);
      if (!exact) throw ConfigError("kernel study: no analytic kernel for potential " + p.potential.spec);
      Amplitude k = discretized_kernel(a, b, T, s, p, opt);
      Amplitude ratio = k / *exact;
      row.rel_error_modulus = std::max(row.rel_error_modulus, std::abs(std::abs(ratio) - 1.0));
      row.phase_error = std::max(row.phase_error, std::abs(std::arg(ratio)));
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Schroedinger consistency

/// max over interior snapshots k of
///   || i hbar (psi_{k+1} - psi_{k-1}) / (2 eps) + (hbar^2/2m) Lap psi_k - V psi_k || / ||psi_k||
/// with centered differences; boundary points excluded. Snapshots must share a
/// grid and be equally spaced in time.
inline double schrodinger_residual(std::span<const PropagatorGrid> trace) {
  if (trace.size() < 3) throw DomainError("schrodinger_residual: need >= 3 consecutive slices");
  const Grid& grid = trace.front().grid;
  const Params& p = trace.front().params;
  double eps = trace[1].t - trace[0].t;
  if (!(eps > 0.0)) throw DomainError("schrodinger_residual: snapshots must advance in time");
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (!(trace[k].grid == grid) || trace[k].psi.size() != grid.n) {
      throw DomainError("schrodinger_residual: snapshots on different grids");
    }
    double step = trace[k].t - trace[k - 1].t;
    if (std::abs(step - eps) > 1e-9 * eps) {
      throw DomainError("schrodinger_residual: snapshots not equally spaced");
    }
  }
  const double kin = p.hbar * p.hbar / (2.0 * p.mass * grid.dx * grid.dx);
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < trace.size(); ++k) {
    const auto& prev = trace[k - 1].psi;
    const auto& cur = trace[k].psi;
    const auto& next = trace[k + 1].psi;
    double r2 = 0.0, n2 = 0.0;
    for (std::size_t i = 1; i + 1 < grid.n; ++i) {
      Amplitude dt = (next[i] - prev[i]) / (2.0 * eps);
      Amplitude lap = cur[i + 1] - 2.0 * cur[i] + cur[i - 1];
      Amplitude r = kI * p.hbar * dt + kin * lap - p.potential(grid.x(i)) * cur[i];
      r2 += std::norm(r);
      n2 += std::norm(cur[i]);
    }
    if (n2 == 0.0) throw DomainError("schrodinger_residual: zero wavefunction");
    worst = std::max(worst, std::sqrt(r2 / n2));
  }
  return worst;
}

}  // namespace shadow::pathint
