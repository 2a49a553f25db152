#pragma once

// Two-particle interferometer statistics: joint detector probabilities,
// the correlation E(alpha, beta), the CHSH combination, and a seeded Monte
// Carlo coincidence sampler.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "shadow/amplitude.hpp"
#include "shadow/error.hpp"
#include "shadow/interferometer.hpp"
#include "shadow/random.hpp"
#include "shadow/streams.hpp"

namespace shadow {

struct JointDistribution {
  double alpha = 0.0;
  double beta = 0.0;
  double p_uu = 0.0;
  double p_ud = 0.0;
  double p_du = 0.0;
  double p_dd = 0.0;

  double sum() const noexcept { return p_uu + p_ud + p_du + p_dd; }
  double correlation() const noexcept { return p_uu + p_dd - p_ud - p_du; }
  double left_up() const noexcept { return p_uu + p_ud; }
  double right_up() const noexcept { return p_uu + p_du; }
  std::array<double, 4> as_array() const noexcept { return {p_uu, p_ud, p_du, p_dd}; }
};

/// (1/2)cos^2((beta-alpha)/2) on the diagonal, (1/2)sin^2((beta-alpha)/2) off it.
inline JointDistribution joint_distribution_closed_form(double alpha, double beta) {
  double half = 0.5 * (beta - alpha);
  double c = std::cos(half);
  double s = std::sin(half);
  double same = 0.5 * c * c;
  double diff = 0.5 * s * s;
  return {alpha, beta, same, diff, diff, same};
}

/// |composite amplitude|^2 for each detector pair of the Rarity-Tapster layout.
inline JointDistribution joint_distribution_from_amplitudes(const Layout& layout) {
  if (layout.pairs().size() != 2) throw DomainError("joint distribution needs a two-pair layout");
  const std::string& u = layout.detector_for(Wing::left, DetectorRole::up).id;
  const std::string& d = layout.detector_for(Wing::left, DetectorRole::down).id;
  const std::string& up = layout.detector_for(Wing::right, DetectorRole::up).id;
  const std::string& dp = layout.detector_for(Wing::right, DetectorRole::down).id;
  JointDistribution j;
  j.p_uu = probability_of(composite_amplitude(layout, u, up));
  j.p_ud = probability_of(composite_amplitude(layout, u, dp));
  j.p_du = probability_of(composite_amplitude(layout, d, up));
  j.p_dd = probability_of(composite_amplitude(layout, d, dp));
  return j;
}

inline JointDistribution joint_distribution_from_amplitudes(double alpha, double beta) {
  JointDistribution j = joint_distribution_from_amplitudes(build_rarity_tapster(alpha, beta));
  j.alpha = alpha;
  j.beta = beta;
  return j;
}

/// Largest entry-wise difference between two distributions.
inline double max_abs_difference(const JointDistribution& x, const JointDistribution& y) {
  auto a = x.as_array();
  auto b = y.as_array();
  double m = 0.0;
  for (std::size_t i = 0; i < 4; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Closed form, cross-checked against the amplitude pipeline.
inline JointDistribution joint_distribution(double alpha, double beta) {
  JointDistribution closed = joint_distribution_closed_form(alpha, beta);
  JointDistribution piped = joint_distribution_from_amplitudes(alpha, beta);
  if (max_abs_difference(closed, piped) > kExactTol) {
    throw std::logic_error("joint_distribution: closed form and amplitude pipeline disagree");
  }
  return closed;
}

/// E = p_uu + p_dd - p_ud - p_du = cos(beta - alpha).
inline double correlation(double alpha, double beta) {
  return joint_distribution_closed_form(alpha, beta).correlation();
}

struct ChshResult {
  std::array<double, 4> angles{};  // alpha1, alpha2, beta1, beta2
  std::array<double, 4> E{};       // (a1,b1) (a1,b2) (a2,b1) (a2,b2)
  double S = 0.0;
  bool violated = false;
  // Set for estimates from records.
  std::optional<std::array<double, 4>> E_stderr;
  std::optional<double> S_stderr;
  std::array<std::size_t, 4> counts{};

  /// S - k*stderr; the exact S when there is no error estimate.
  double lower_bound(double k) const { return S - k * S_stderr.value_or(0.0); }
};

/// Setting order used everywhere: (a1,b1) (a1,b2) (a2,b1) (a2,b2).
inline std::array<std::pair<double, double>, 4> chsh_settings(double alpha1, double alpha2,
                                                              double beta1, double beta2) {
  return {{{alpha1, beta1}, {alpha1, beta2}, {alpha2, beta1}, {alpha2, beta2}}};
}

inline double chsh_combination(const std::array<double, 4>& E) {
  return E[0] - E[1] + E[2] + E[3];
}

inline ChshResult chsh(double alpha1, double alpha2, double beta1, double beta2) {
  ChshResult r;
  r.angles = {alpha1, alpha2, beta1, beta2};
  auto settings = chsh_settings(alpha1, alpha2, beta1, beta2);
  for (std::size_t i = 0; i < 4; ++i) r.E[i] = correlation(settings[i].first, settings[i].second);
  r.S = chsh_combination(r.E);
  r.violated = std::abs(r.S) > 2.0;
  return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// One detected pair. Only tangible particles reach detectors.
struct CoincidenceRecord {
  std::uint64_t trial = 0;
  DetectorRole left = DetectorRole::up;   // u or d
  DetectorRole right = DetectorRole::up;  // u' or d'
  SourceAssignment assignment;
  std::uint64_t seed_path = 0;  // id of the random substream that produced this trial

  bool operator==(const CoincidenceRecord&) const = default;
};

/// Random substream for one trial; a pure function of (seed, stream, trial).
inline RandomStream trial_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial) {
  return RandomStream(seed, stream).split(trial);
}

inline std::uint64_t trial_stream_id(std::uint64_t stream, std::uint64_t trial) {
  return (stream << 40) ^ trial;
}

/// Born-rule draw of a detector pair from a uniform variate.
inline std::pair<DetectorRole, DetectorRole> draw_outcome(const JointDistribution& j, double u) {
  using R = DetectorRole;
  double c = j.p_uu;
  if (u < c) return {R::up, R::up};
  c += j.p_ud;
  if (u < c) return {R::up, R::down};
  c += j.p_du;
  if (u < c) return {R::down, R::up};
  return {R::down, R::down};
}

/// One trial: a source assignment (shadow bookkeeping, draw 0) then a jointly
/// drawn detector pair (draw 1).
inline CoincidenceRecord simulate_trial(const Layout& layout, const JointDistribution& joint,
                                        std::uint64_t seed, std::uint64_t stream,
                                        std::uint64_t trial) {
  RandomStream rng = trial_stream(seed, stream, trial);
  StreamPair streams = assign_streams(layout, rng);
  auto [left, right] = draw_outcome(joint, rng.next_uniform());
  return CoincidenceRecord{trial, left, right, streams.assignment, trial_stream_id(stream, trial)};
}

namespace detail {

/// Calls body(begin, end, worker) over a contiguous split of [0, shots).
template <class Body>
void for_each_chunk(std::uint64_t shots, unsigned workers, Body&& body) {
  workers = std::max(1u, workers);
  if (workers == 1 || shots < 2ull * workers) {
    body(std::uint64_t{0}, shots, 0u);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  std::uint64_t chunk = (shots + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::uint64_t begin = std::min<std::uint64_t>(shots, w * chunk);
    std::uint64_t end = std::min<std::uint64_t>(shots, begin + chunk);
    if (begin < end) pool.emplace_back([&body, begin, end, w] { body(begin, end, w); });
  }
}

}  // namespace detail

/// Output depends only on (alpha, beta, shots, seed, stream); `workers` only
/// changes how trials are split across threads.
inline std::vector<CoincidenceRecord> sample_coincidences(double alpha, double beta,
                                                          std::uint64_t shots, std::uint64_t seed,
                                                          std::uint64_t stream = 0,
                                                          unsigned workers = 1) {
  if (shots == 0) throw DomainError("sample_coincidences: shots must be >= 1");
  const Layout layout = build_rarity_tapster(alpha, beta);
  const JointDistribution joint = joint_distribution(alpha, beta);
  std::vector<CoincidenceRecord> records(shots);
  detail::for_each_chunk(shots, workers, [&](std::uint64_t begin, std::uint64_t end, unsigned) {
    for (std::uint64_t t = begin; t < end; ++t) records[t] = simulate_trial(layout, joint, seed, stream, t);
  });
  return records;
}

struct OutcomeCounts {
  std::uint64_t uu = 0, ud = 0, du = 0, dd = 0;

  std::uint64_t total() const noexcept { return uu + ud + du + dd; }

  void add(DetectorRole left, DetectorRole right) noexcept {
    bool lu = left == DetectorRole::up;
    bool ru = right == DetectorRole::up;
    if (lu && ru) ++uu;
    else if (lu) ++ud;
    else if (ru) ++du;
    else ++dd;
  }

  OutcomeCounts& operator+=(const OutcomeCounts& o) noexcept {
    uu += o.uu;
    ud += o.ud;
    du += o.du;
    dd += o.dd;
    return *this;
  }

  /// (n_uu + n_dd - n_ud - n_du) / n
  double correlation() const {
    double n = static_cast<double>(total());
    if (n == 0) throw DomainError("no records");
    return (static_cast<double>(uu + dd) - static_cast<double>(ud + du)) / n;
  }

  bool operator==(const OutcomeCounts&) const = default;

  JointDistribution frequencies() const {
    double n = static_cast<double>(total());
    if (n == 0) throw DomainError("no records");
    return {0.0, 0.0, uu / n, ud / n, du / n, dd / n};
  }
};

inline OutcomeCounts count_outcomes(std::span<const CoincidenceRecord> records) {
  OutcomeCounts c;
  for (const CoincidenceRecord& r : records) c.add(r.left, r.right);
  return c;
}

/// Same trials as sample_coincidences, tallied without keeping the records.
inline OutcomeCounts count_coincidences(double alpha, double beta, std::uint64_t shots,
                                        std::uint64_t seed, std::uint64_t stream = 0,
                                        unsigned workers = 1) {
  if (shots == 0) throw DomainError("count_coincidences: shots must be >= 1");
  const Layout layout = build_rarity_tapster(alpha, beta);
  const JointDistribution joint = joint_distribution(alpha, beta);
  std::vector<OutcomeCounts> partial(std::max(1u, workers));
  detail::for_each_chunk(shots, workers, [&](std::uint64_t begin, std::uint64_t end, unsigned w) {
    OutcomeCounts c;
    for (std::uint64_t t = begin; t < end; ++t) {
      CoincidenceRecord r = simulate_trial(layout, joint, seed, stream, t);
      c.add(r.left, r.right);
    }
    partial[w] = c;
  });
  OutcomeCounts total;
  for (const OutcomeCounts& c : partial) total += c;
  return total;
}

inline constexpr std::size_t kMinRecordsPerSetting = 100;

/// Empirical CHSH from counts at the four settings, in chsh_settings() order.
/// Each E has binomial standard error sqrt((1 - E^2)/n); errors add in quadrature.
inline ChshResult estimate_chsh_from_counts(std::span<const OutcomeCounts> counts,
                                            std::array<double, 4> angles) {
  if (counts.size() != 4) throw DomainError("estimate_chsh: need exactly 4 settings");
  ChshResult r;
  r.angles = angles;
  std::array<double, 4> se{};
  double var = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (counts[i].total() < kMinRecordsPerSetting) {
      throw DomainError("estimate_chsh: setting " + std::to_string(i) + " has " +
                        std::to_string(counts[i].total()) + " records, need >= 100");
    }
    double n = static_cast<double>(counts[i].total());
    r.E[i] = counts[i].correlation();
    double v = std::max(0.0, 1.0 - r.E[i] * r.E[i]) / n;
    se[i] = std::sqrt(v);
    var += v;
    r.counts[i] = counts[i].total();
  }
  r.S = chsh_combination(r.E);
  r.E_stderr = se;
  r.S_stderr = std::sqrt(var);
  r.violated = std::abs(r.S) > 2.0;
  return r;
}

/// Empirical CHSH from four record groups in chsh_settings() order.
inline ChshResult estimate_chsh_from_records(
    std::span<const std::vector<CoincidenceRecord>> groups, std::array<double, 4> angles) {
  if (groups.size() != 4) throw DomainError("estimate_chsh: need exactly 4 settings");
  std::array<OutcomeCounts, 4> counts;
  for (std::size_t i = 0; i < 4; ++i) counts[i] = count_outcomes(groups[i]);
  return estimate_chsh_from_counts(counts, angles);
}

/// Runs `shots` trials at each CHSH setting; setting i uses random stream i.
inline ChshResult monte_carlo_chsh(double alpha1, double alpha2, double beta1, double beta2,
                                   std::uint64_t shots, std::uint64_t seed, unsigned workers = 1) {
  auto settings = chsh_settings(alpha1, alpha2, beta1, beta2);
  std::array<OutcomeCounts, 4> counts;
  for (std::size_t i = 0; i < 4; ++i) {
    counts[i] = count_coincidences(settings[i].first, settings[i].second, shots, seed, i, workers);
  }
  return estimate_chsh_from_counts(counts, {alpha1, alpha2, beta1, beta2});
}

}  // namespace shadow
