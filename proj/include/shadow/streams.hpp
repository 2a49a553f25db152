#pragma once

// Shadow streams.
//
// A tangible particle facing several possible paths takes one at random;
// distinct shadow particles fill every other path. The tangible particle and
// its shadows form one stream, whose amplitude toward an outcome is the sum of
// the member path amplitudes. Different tangible particles give different
// streams, and their joint amplitude is a product (summed over the correlated
// emission alternatives).
//
// Shadows exist only in this bookkeeping; detector records never mention them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shadow/amplitude.hpp"
#include "shadow/error.hpp"
#include "shadow/interferometer.hpp"
#include "shadow/random.hpp"

namespace shadow {

enum class ParticleKind { tangible, shadow };

inline std::string_view to_string(ParticleKind kind) {
  return kind == ParticleKind::tangible ? "tangible" : "shadow";
}

struct ParticleTag {
  ParticleKind kind = ParticleKind::shadow;
  std::string path;
  Wing wing = Wing::single;

  bool operator==(const ParticleTag&) const = default;
};

struct Stream {
  std::uint64_t id = 0;
  std::vector<ParticleTag> particles;

  std::size_t size() const noexcept { return particles.size(); }

  std::size_t tangible_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        particles.begin(), particles.end(),
        [](const ParticleTag& p) { return p.kind == ParticleKind::tangible; }));
  }

  const ParticleTag& tangible() const {
    for (const ParticleTag& p : particles) {
      if (p.kind == ParticleKind::tangible) return p;
    }
    throw DomainError("stream has no tangible particle");
  }

  bool operator==(const Stream&) const = default;
};

/// Which correlated emission alternative carries the two tangible particles.
/// Index into Layout::pairs(); every other pair is filled by shadows.
struct SourceAssignment {
  std::size_t tangible_pair = 0;

  const std::string& left_tangible(const Layout& layout) const {
    return layout.pairs()[tangible_pair].first;
  }
  const std::string& right_tangible(const Layout& layout) const {
    return layout.pairs()[tangible_pair].second;
  }
  std::vector<std::string> shadow_paths(const Layout& layout) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < layout.pairs().size(); ++i) {
      if (i == tangible_pair) continue;
      out.push_back(layout.pairs()[i].first);
      out.push_back(layout.pairs()[i].second);
    }
    return out;
  }

  bool operator==(const SourceAssignment&) const = default;
};

struct StreamPair {
  SourceAssignment assignment;
  Stream left;
  Stream right;
};

namespace detail {

inline std::size_t uniform_index(double u, std::size_t n) {
  auto i = static_cast<std::size_t>(u * static_cast<double>(n));
  return i < n ? i : n - 1;
}

inline Stream fill_stream(std::uint64_t id, std::span<const Path* const> alternatives,
                          std::string_view tangible) {
  Stream s{id, {}};
  s.particles.reserve(alternatives.size());
  for (const Path* p : alternatives) {
    s.particles.push_back(ParticleTag{
        p->label == tangible ? ParticleKind::tangible : ParticleKind::shadow, p->label, p->wing});
  }
  return s;
}

}  // namespace detail

/// One source event in a two-particle layout: pick the tangible pair uniformly,
/// shadows take the remaining paths. Consumes one draw from `rng`.
inline StreamPair assign_streams(const Layout& layout, RandomStream& rng,
                                 std::uint64_t first_stream_id = 0) {
  if (!layout.is_two_particle()) {
    throw DomainError("assign_streams: single-particle layout, use assign_single_stream");
  }
  SourceAssignment assignment{detail::uniform_index(rng.next_uniform(), layout.pairs().size())};
  auto left_paths = layout.paths_in(Wing::left);
  auto right_paths = layout.paths_in(Wing::right);
  return StreamPair{
      assignment,
      detail::fill_stream(first_stream_id, left_paths, assignment.left_tangible(layout)),
      detail::fill_stream(first_stream_id + 1, right_paths, assignment.right_tangible(layout)),
  };
}

/// One tangible particle on a uniformly chosen path; shadows on all the others.
inline Stream assign_single_stream(const Layout& layout, RandomStream& rng,
                                   std::uint64_t stream_id = 0) {
  auto paths = layout.paths();
  if (paths.empty()) throw DomainError("assign_single_stream: layout has no paths");
  std::vector<const Path*> all;
  all.reserve(paths.size());
  for (const Path& p : paths) all.push_back(&p);
  std::size_t pick = detail::uniform_index(rng.next_uniform(), all.size());
  return detail::fill_stream(stream_id, all, all[pick]->label);
}

/// Sum of member path amplitudes toward `detector`; tangible and shadow
/// members contribute alike.
inline Amplitude stream_amplitude(const Stream& stream, std::string_view detector,
                                  const Layout& layout) {
  if (stream.particles.empty()) throw DomainError("stream_amplitude: empty stream");
  std::vector<Amplitude> terms;
  terms.reserve(stream.size());
  for (const ParticleTag& p : stream.particles) {
    terms.push_back(layout.path_amplitude(p.path, detector));
  }
  return sum_alternatives(terms);
}

/// Source normalization for a layout emitting along `pair_count` equally
/// weighted correlated alternatives.
inline double source_normalization(std::size_t pair_count) {
  return 1.0 / std::sqrt(static_cast<double>(pair_count));
}

/// Joint amplitude for (outcome_left, outcome_right):
///   N * sum over emission pairs (p, q) of <outcome_left|p><outcome_right|q>.
inline Amplitude composite_amplitude(const Layout& layout, std::string_view outcome_left,
                                     std::string_view outcome_right) {
  if (!layout.is_two_particle()) throw DomainError("composite_amplitude: not a two-particle layout");
  std::vector<Amplitude> terms;
  for (const auto& [p, q] : layout.pairs()) {
    terms.push_back(product_independent(layout.path_amplitude(p, outcome_left),
                                        layout.path_amplitude(q, outcome_right)));
  }
  return source_normalization(layout.pairs().size()) * sum_alternatives(terms);
}

/// Same joint amplitude, checking that the two streams came from one source
/// event in `layout`.
inline Amplitude composite_amplitude(const Stream& left, std::string_view outcome_left,
                                     const Stream& right, std::string_view outcome_right,
                                     const Layout& layout) {
  auto covers = [&](const Stream& s, Wing wing) {
    auto expected = layout.paths_in(wing);
    if (s.size() != expected.size() || s.tangible_count() != 1) return false;
    return std::all_of(expected.begin(), expected.end(), [&](const Path* p) {
      return std::any_of(s.particles.begin(), s.particles.end(), [&](const ParticleTag& t) {
        return t.path == p->label && t.wing == wing;
      });
    });
  };
  if (!covers(left, Wing::left) || !covers(right, Wing::right)) {
    throw DomainError("composite_amplitude: streams do not match the layout");
  }
  bool same_event = std::any_of(layout.pairs().begin(), layout.pairs().end(), [&](const auto& pr) {
    return pr.first == left.tangible().path && pr.second == right.tangible().path;
  });
  if (!same_event) throw DomainError("composite_amplitude: streams come from different source events");
  return composite_amplitude(layout, outcome_left, outcome_right);
}

// ---------------------------------------------------------------------------
// Locality verification

enum class MatchMode {
  congruence,  // paths must carry identical factor sequences
  equivalence  // equal path amplitudes suffice
};

inline std::string_view to_string(MatchMode mode) {
  return mode == MatchMode::congruence ? "congruence" : "equivalence";
}

/// <detector|path>, with the wing it lives in.
struct BraKet {
  std::string detector;
  std::string path;
  Wing wing = Wing::single;

  std::string text() const { return "<" + detector + "|" + path + ">"; }
  bool operator==(const BraKet&) const = default;
};

struct IdentityCheck {
  BraKet lhs;
  BraKet rhs;
  Amplitude lhs_value;
  Amplitude rhs_value;
  double defect = 0.0;
  bool pass = false;
};

struct CongruenceReport {
  MatchMode mode = MatchMode::congruence;
  std::string left_path;   // shadow partner on the left (b)
  std::string right_path;  // tangible partner on the right (a')
  std::vector<IdentityCheck> identities;
  bool paths_congruent = false;
  bool paths_equivalent = false;
  bool passed = false;
};

namespace detail {

inline void require_two_pair(const Layout& layout, const char* where) {
  if (layout.pairs().size() != 2) {
    throw DomainError(std::string(where) + ": needs a two-wing layout with two emission pairs");
  }
}

/// Cross-wing bra-ket equalities: the left path of the second pair (b) and the
/// right path of the first pair (a') toward same-role detectors.
inline std::vector<std::pair<BraKet, BraKet>> cross_wing_identities(const Layout& layout) {
  const std::string& left = layout.pairs()[1].first;
  const std::string& right = layout.pairs()[0].second;
  std::vector<std::pair<BraKet, BraKet>> out;
  for (DetectorRole role : {DetectorRole::up, DetectorRole::down}) {
    out.emplace_back(BraKet{layout.detector_for(Wing::left, role).id, left, Wing::left},
                     BraKet{layout.detector_for(Wing::right, role).id, right, Wing::right});
  }
  return out;
}

}  // namespace detail

inline Amplitude evaluate(const Layout& layout, const BraKet& bk) {
  return layout.path_amplitude(bk.path, bk.detector);
}

/// Checks <u|b> = <u'|a'> and <d|b> = <d'|a'>. Failures are report entries.
inline CongruenceReport verify_congruence_identities(const Layout& layout,
                                                     MatchMode mode = MatchMode::congruence,
                                                     double tol = kExactTol) {
  detail::require_two_pair(layout, "verify_congruence_identities");
  CongruenceReport report;
  report.mode = mode;
  report.left_path = layout.pairs()[1].first;
  report.right_path = layout.pairs()[0].second;
  bool all = true;
  for (auto& [l, r] : detail::cross_wing_identities(layout)) {
    IdentityCheck c{l, r, evaluate(layout, l), evaluate(layout, r), 0.0, false};
    c.defect = std::abs(c.lhs_value - c.rhs_value);
    c.pass = c.defect <= tol;
    all = all && c.pass;
    report.identities.push_back(std::move(c));
  }
  report.paths_congruent = congruent(layout, report.left_path, report.right_path);
  report.paths_equivalent = equivalent(layout, report.left_path, report.right_path);
  report.passed = all && (mode == MatchMode::equivalence || report.paths_congruent);
  return report;
}

/// Product of bra-kets; one summand of a joint amplitude.
struct ProductTerm {
  std::vector<BraKet> factors;

  /// The wing every factor belongs to, or nullopt when the term spans wings.
  std::optional<Wing> wing() const {
    if (factors.empty()) return std::nullopt;
    Wing w = factors.front().wing;
    for (const BraKet& b : factors) {
      if (b.wing != w) return std::nullopt;
    }
    return w;
  }

  Amplitude value(const Layout& layout) const {
    std::vector<Amplitude> parts;
    for (const BraKet& b : factors) parts.push_back(evaluate(layout, b));
    return chain_route(parts);
  }

  std::string text() const {
    std::string s;
    for (const BraKet& b : factors) s += b.text();
    return s;
  }
};

struct FactorizationCheck {
  std::string outcome_left;
  std::string outcome_right;
  std::vector<ProductTerm> lhs_terms;  // as emitted: one cross-wing product per pair
  std::vector<ProductTerm> rhs_terms;  // after substituting equal amplitudes
  Amplitude lhs;
  Amplitude rhs;
  double defect = 0.0;
  bool numeric_pass = false;
  bool rhs_local = false;  // every rhs term uses bra-kets of a single wing
};

struct FactorizationReport {
  std::vector<FactorizationCheck> checks;
  bool passed = false;
};

/// Rewrites a cross-wing product into a single-wing one by swapping a factor
/// for its cross-wing equal. Returns the term unchanged when no swap localizes it.
inline ProductTerm substitute_local(const ProductTerm& term,
                                    std::span<const std::pair<BraKet, BraKet>> equalities) {
  if (term.wing()) return term;
  for (std::size_t i = 0; i < term.factors.size(); ++i) {
    for (const auto& [l, r] : equalities) {
      const BraKet* replacement = nullptr;
      if (term.factors[i] == l) replacement = &r;
      if (term.factors[i] == r) replacement = &l;
      if (replacement == nullptr) continue;
      ProductTerm candidate = term;
      candidate.factors[i] = *replacement;
      if (candidate.wing()) return candidate;
    }
  }
  return term;
}

/// For every joint outcome: the emitted sum of cross-wing products equals the
/// substituted sum of single-wing products (numerically), and each substituted
/// term is wing-local (structurally). Unnormalized amplitudes.
inline FactorizationReport verify_local_factorization(const Layout& layout, double tol = kExactTol) {
  detail::require_two_pair(layout, "verify_local_factorization");
  auto equalities = detail::cross_wing_identities(layout);
  FactorizationReport report;
  report.passed = true;
  // (u,u'), (u,d'), (d,u'), (d,d')
  for (DetectorRole left_role : {DetectorRole::up, DetectorRole::down}) {
    for (DetectorRole right_role : {DetectorRole::up, DetectorRole::down}) {
      FactorizationCheck c;
      c.outcome_left = layout.detector_for(Wing::left, left_role).id;
      c.outcome_right = layout.detector_for(Wing::right, right_role).id;
      std::vector<Amplitude> lhs_values;
      std::vector<Amplitude> rhs_values;
      for (const auto& [p, q] : layout.pairs()) {
        ProductTerm t{{BraKet{c.outcome_left, p, Wing::left}, BraKet{c.outcome_right, q, Wing::right}}};
        ProductTerm s = substitute_local(t, equalities);
        lhs_values.push_back(t.value(layout));
        rhs_values.push_back(s.value(layout));
        c.lhs_terms.push_back(std::move(t));
        c.rhs_terms.push_back(std::move(s));
      }
      c.lhs = sum_alternatives(lhs_values);
      c.rhs = sum_alternatives(rhs_values);
      c.defect = std::abs(c.lhs - c.rhs);
      c.numeric_pass = c.defect <= tol;
      c.rhs_local = std::all_of(c.rhs_terms.begin(), c.rhs_terms.end(),
                                [](const ProductTerm& t) { return t.wing().has_value(); });
      report.passed = report.passed && c.numeric_pass && c.rhs_local;
      report.checks.push_back(std::move(c));
    }
  }
  return report;
}

inline FactorizationReport verify_local_factorization(double alpha, double beta,
                                                      double tol = kExactTol) {
  return verify_local_factorization(build_rarity_tapster(alpha, beta), tol);
}

}  // namespace shadow
