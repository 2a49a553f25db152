#pragma once

// Declarative interferometer layouts: elements, the paths a particle can take
// from the source to a terminal beam splitter, and per-path amplitudes toward
// each detector behind that splitter.
//
// Conventions
//   beam splitter   transmission 1/sqrt2, reflection i/sqrt2
//   mirror          factor 1 (common phase dropped)
//   phase shifter   e^{i setting}
//   arm lengths     equal; no propagation phase besides the shifters

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shadow/amplitude.hpp"
#include "shadow/error.hpp"

namespace shadow {

enum class ElementKind { source, phase_shifter, mirror, beam_splitter, detector };
enum class Wing { left, right, single };
enum class Port { emit, pass, transmit, reflect };
enum class DetectorRole { up, down };

inline constexpr Amplitude kTransmit{kInvSqrt2, 0.0};
inline constexpr Amplitude kReflect{0.0, kInvSqrt2};

inline std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::source: return "source";
    case ElementKind::phase_shifter: return "phase_shifter";
    case ElementKind::mirror: return "mirror";
    case ElementKind::beam_splitter: return "beam_splitter";
    case ElementKind::detector: return "detector";
  }
  return "?";
}

inline std::string_view to_string(Wing wing) {
  switch (wing) {
    case Wing::left: return "left";
    case Wing::right: return "right";
    case Wing::single: return "single";
  }
  return "?";
}

inline std::string_view to_string(Port port) {
  switch (port) {
    case Port::emit: return "emit";
    case Port::pass: return "pass";
    case Port::transmit: return "transmit";
    case Port::reflect: return "reflect";
  }
  return "?";
}

inline std::string_view to_string(DetectorRole role) {
  return role == DetectorRole::up ? "up" : "down";
}

struct Element {
  std::string id;
  ElementKind kind = ElementKind::mirror;
  double setting = 0.0;  // phase shifters only, radians
  Wing wing = Wing::single;
  DetectorRole role = DetectorRole::up;  // detectors only

  bool operator==(const Element&) const = default;
};

struct Traversal {
  std::string element;
  Port port = Port::pass;

  bool operator==(const Traversal&) const = default;
};

struct Exit {
  std::string detector;
  Port port = Port::transmit;

  bool operator==(const Exit&) const = default;
};

/// One route from the source to a terminal beam splitter. Which detector is
/// reached behind that splitter is chosen when the amplitude is evaluated.
struct Path {
  std::string label;
  Wing wing = Wing::single;
  std::vector<Traversal> traversals;  // source first, terminal splitter excluded
  std::string terminal;               // terminal beam splitter id
  std::vector<Exit> exits;

  bool operator==(const Path&) const = default;
};

/// Immutable once built; the constructor validates the whole structure.
class Layout {
 public:
  using PathPair = std::pair<std::string, std::string>;

  Layout(std::string kind, std::vector<Element> elements, std::vector<Path> paths,
         std::vector<PathPair> pairs = {})
      : kind_(std::move(kind)),
        elements_(std::move(elements)),
        paths_(std::move(paths)),
        pairs_(std::move(pairs)) {
    validate();
  }

  const std::string& kind() const noexcept { return kind_; }
  std::span<const Element> elements() const noexcept { return elements_; }
  std::span<const Path> paths() const noexcept { return paths_; }
  /// Correlated emission pairs (left path, right path); empty for single-particle rigs.
  std::span<const PathPair> pairs() const noexcept { return pairs_; }
  bool is_two_particle() const noexcept { return !pairs_.empty(); }

  const Element* find_element(std::string_view id) const {
    auto it = std::find_if(elements_.begin(), elements_.end(),
                           [&](const Element& e) { return e.id == id; });
    return it == elements_.end() ? nullptr : &*it;
  }

  const Element& element(std::string_view id) const {
    if (const Element* e = find_element(id)) return *e;
    throw DomainError("no element '" + std::string(id) + "' in layout");
  }

  const Path* find_path(std::string_view label) const {
    auto it = std::find_if(paths_.begin(), paths_.end(),
                           [&](const Path& p) { return p.label == label; });
    return it == paths_.end() ? nullptr : &*it;
  }

  const Path& path(std::string_view label) const {
    if (const Path* p = find_path(label)) return *p;
    throw DomainError("no path '" + std::string(label) + "' in layout");
  }

  std::vector<const Path*> paths_in(Wing wing) const {
    std::vector<const Path*> out;
    for (const Path& p : paths_) {
      if (p.wing == wing) out.push_back(&p);
    }
    return out;
  }

  std::vector<const Element*> detectors(Wing wing) const {
    std::vector<const Element*> out;
    for (const Element& e : elements_) {
      if (e.kind == ElementKind::detector && e.wing == wing) out.push_back(&e);
    }
    return out;
  }

  const Element& detector_for(Wing wing, DetectorRole role) const {
    for (const Element& e : elements_) {
      if (e.kind == ElementKind::detector && e.wing == wing && e.role == role) return e;
    }
    throw DomainError("no " + std::string(to_string(role)) + " detector in wing " +
                      std::string(to_string(wing)));
  }

  double shifter_setting(std::string_view id) const {
    const Element& e = element(id);
    if (e.kind != ElementKind::phase_shifter) {
      throw DomainError("element '" + e.id + "' is not a phase shifter");
    }
    return e.setting;
  }

  /// Ordered amplitude factors along `path` toward `detector`, exit factor last.
  std::vector<Amplitude> route_factors(const Path& p, std::string_view detector) const {
    auto exit = std::find_if(p.exits.begin(), p.exits.end(),
                             [&](const Exit& x) { return x.detector == detector; });
    if (exit == p.exits.end()) {
      throw DomainError("detector '" + std::string(detector) + "' is not reachable from path '" +
                        p.label + "'");
    }
    std::vector<Amplitude> factors;
    factors.reserve(p.traversals.size() + 1);
    for (const Traversal& t : p.traversals) factors.push_back(factor(element(t.element), t.port));
    factors.push_back(factor(element(p.terminal), exit->port));
    return factors;
  }

  /// <detector|path>
  Amplitude path_amplitude(std::string_view path_label, std::string_view detector) const {
    return chain_route(route_factors(path(path_label), detector));
  }

  /// Copy of this layout with an extra phase shifter spliced onto one path,
  /// just before its terminal splitter.
  Layout with_extra_phase(std::string_view path_label, double delta) const {
    std::vector<Element> elements = elements_;
    std::vector<Path> paths = paths_;
    auto it = std::find_if(paths.begin(), paths.end(),
                           [&](const Path& p) { return p.label == path_label; });
    if (it == paths.end()) throw DomainError("no path '" + std::string(path_label) + "' in layout");
    std::string id = "extra_" + it->label;
    while (find_element(id) != nullptr) id += "+";
    elements.push_back(Element{id, ElementKind::phase_shifter, delta, it->wing, DetectorRole::up});
    it->traversals.push_back(Traversal{id, Port::pass});
    return Layout(kind_, std::move(elements), std::move(paths), pairs_);
  }

  bool operator==(const Layout&) const = default;

 private:
  static Amplitude factor(const Element& e, Port port) {
    switch (e.kind) {
      case ElementKind::source:
      case ElementKind::mirror:
      case ElementKind::detector:
        return {1.0, 0.0};
      case ElementKind::phase_shifter:
        return unit_phase(e.setting);
      case ElementKind::beam_splitter:
        return port == Port::reflect ? kReflect : kTransmit;
    }
    return {1.0, 0.0};
  }

  void fail(const std::string& msg) const { throw ValidationError("layout: " + msg); }

  void validate() const {
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      const Element& e = elements_[i];
      if (e.id.empty()) fail("element with empty id");
      for (std::size_t j = 0; j < i; ++j) {
        if (elements_[j].id == e.id) fail("duplicate element id '" + e.id + "'");
      }
      if (e.kind == ElementKind::phase_shifter && !std::isfinite(e.setting)) {
        fail("phase shifter '" + e.id + "' has a non-finite setting");
      }
    }
    if (paths_.empty()) fail("no paths");

    for (std::size_t i = 0; i < paths_.size(); ++i) {
      const Path& p = paths_[i];
      if (p.label.empty()) fail("path with empty label");
      for (std::size_t j = 0; j < i; ++j) {
        if (paths_[j].label == p.label) fail("duplicate path label '" + p.label + "'");
      }
      if (p.traversals.empty()) fail("path '" + p.label + "' is empty");
      for (std::size_t k = 0; k < p.traversals.size(); ++k) {
        const Traversal& t = p.traversals[k];
        const Element* e = find_element(t.element);
        if (e == nullptr) fail("path '" + p.label + "' visits unknown element '" + t.element + "'");
        if (k == 0) {
          if (e->kind != ElementKind::source || t.port != Port::emit) {
            fail("path '" + p.label + "' must begin at a source");
          }
          continue;
        }
        switch (e->kind) {
          case ElementKind::source:
            fail("path '" + p.label + "' revisits a source");
            break;
          case ElementKind::detector:
            fail("path '" + p.label + "' runs into detector '" + e->id + "' before its splitter");
            break;
          case ElementKind::beam_splitter:
            if (t.port != Port::transmit && t.port != Port::reflect) {
              fail("path '" + p.label + "' must transmit or reflect at '" + e->id + "'");
            }
            break;
          default:
            if (t.port != Port::pass) fail("path '" + p.label + "' must pass through '" + e->id + "'");
        }
        if (e->kind != ElementKind::source && e->wing != Wing::single && e->wing != p.wing) {
          fail("path '" + p.label + "' uses element '" + e->id + "' of the other wing");
        }
      }
      const Element* term = find_element(p.terminal);
      if (term == nullptr || term->kind != ElementKind::beam_splitter) {
        fail("path '" + p.label + "' must end at a beam splitter");
      }
      if (term->wing != Wing::single && term->wing != p.wing) {
        fail("terminal splitter '" + term->id + "' belongs to the other wing");
      }
      if (p.exits.empty() || p.exits.size() > 2) {
        fail("path '" + p.label + "' needs one or two detector exits");
      }
      for (std::size_t k = 0; k < p.exits.size(); ++k) {
        const Exit& x = p.exits[k];
        const Element* d = find_element(x.detector);
        if (d == nullptr || d->kind != ElementKind::detector) {
          fail("path '" + p.label + "' exits to unknown detector '" + x.detector + "'");
        }
        if (d->wing != p.wing) fail("detector '" + d->id + "' is not in the wing of path '" + p.label + "'");
        if (x.port != Port::transmit && x.port != Port::reflect) {
          fail("exit of path '" + p.label + "' must be transmit or reflect");
        }
        if (k == 1 && (p.exits[0].port == x.port || p.exits[0].detector == x.detector)) {
          fail("path '" + p.label + "' has two identical exits");
        }
      }
    }

    // Elements used by one wing must not appear in the other (source excepted).
    for (const Element& e : elements_) {
      if (e.kind == ElementKind::source) continue;
      bool left = false;
      bool right = false;
      for (const Path& p : paths_) {
        bool uses = p.terminal == e.id ||
                    std::any_of(p.traversals.begin(), p.traversals.end(),
                                [&](const Traversal& t) { return t.element == e.id; }) ||
                    std::any_of(p.exits.begin(), p.exits.end(),
                                [&](const Exit& x) { return x.detector == e.id; });
        if (!uses) continue;
        left = left || p.wing == Wing::left;
        right = right || p.wing == Wing::right;
      }
      if (left && right) fail("element '" + e.id + "' is shared across wings");
    }

    for (const PathPair& pr : pairs_) {
      const Path* l = find_path(pr.first);
      const Path* r = find_path(pr.second);
      if (l == nullptr || r == nullptr) fail("pair references an unknown path");
      if (l->wing != Wing::left || r->wing != Wing::right) {
        fail("pair (" + pr.first + ", " + pr.second + ") must be (left path, right path)");
      }
    }
  }

  std::string kind_;
  std::vector<Element> elements_;
  std::vector<Path> paths_;
  std::vector<PathPair> pairs_;
};

inline Amplitude path_amplitude(const Layout& layout, std::string_view path_label,
                                std::string_view detector) {
  return layout.path_amplitude(path_label, detector);
}

/// Two-wing, momentum-entangled interferometer: the source emits along a-a' or
/// b-b'; shifter alpha sits on a (left), beta on b' (right).
inline Layout build_rarity_tapster(double alpha, double beta) {
  using K = ElementKind;
  std::vector<Element> elements{
      {"S", K::source, 0.0, Wing::single, DetectorRole::up},
      {"alpha", K::phase_shifter, alpha, Wing::left, DetectorRole::up},
      {"M_a", K::mirror, 0.0, Wing::left, DetectorRole::up},
      {"M_b", K::mirror, 0.0, Wing::left, DetectorRole::up},
      {"BS_L", K::beam_splitter, 0.0, Wing::left, DetectorRole::up},
      {"u", K::detector, 0.0, Wing::left, DetectorRole::up},
      {"d", K::detector, 0.0, Wing::left, DetectorRole::down},
      {"beta", K::phase_shifter, beta, Wing::right, DetectorRole::up},
      {"M_a'", K::mirror, 0.0, Wing::right, DetectorRole::up},
      {"M_b'", K::mirror, 0.0, Wing::right, DetectorRole::up},
      {"BS_R", K::beam_splitter, 0.0, Wing::right, DetectorRole::up},
      {"u'", K::detector, 0.0, Wing::right, DetectorRole::up},
      {"d'", K::detector, 0.0, Wing::right, DetectorRole::down},
  };
  std::vector<Path> paths{
      {"a", Wing::left,
       {{"S", Port::emit}, {"alpha", Port::pass}, {"M_a", Port::pass}}, "BS_L",
       {{"u", Port::reflect}, {"d", Port::transmit}}},
      {"b", Wing::left,
       {{"S", Port::emit}, {"M_b", Port::pass}}, "BS_L",
       {{"u", Port::transmit}, {"d", Port::reflect}}},
      {"a'", Wing::right,
       {{"S", Port::emit}, {"M_a'", Port::pass}}, "BS_R",
       {{"u'", Port::transmit}, {"d'", Port::reflect}}},
      {"b'", Wing::right,
       {{"S", Port::emit}, {"beta", Port::pass}, {"M_b'", Port::pass}}, "BS_R",
       {{"u'", Port::reflect}, {"d'", Port::transmit}}},
  };
  return Layout("rarity-tapster", std::move(elements), std::move(paths),
                {{"a", "a'"}, {"b", "b'"}});
}

/// Single-particle Mach-Zehnder rig; phase phi on the arm reflected at the
/// first splitter. A(U) = (i/2)(e^{i phi} + 1), A(D) = (1 - e^{i phi})/2.
inline Layout build_mach_zehnder(double phi) {
  using K = ElementKind;
  std::vector<Element> elements{
      {"S", K::source, 0.0, Wing::single, DetectorRole::up},
      {"BS1", K::beam_splitter, 0.0, Wing::single, DetectorRole::up},
      {"phi", K::phase_shifter, phi, Wing::single, DetectorRole::up},
      {"M_r", K::mirror, 0.0, Wing::single, DetectorRole::up},
      {"M_t", K::mirror, 0.0, Wing::single, DetectorRole::up},
      {"BS2", K::beam_splitter, 0.0, Wing::single, DetectorRole::up},
      {"U", K::detector, 0.0, Wing::single, DetectorRole::up},
      {"D", K::detector, 0.0, Wing::single, DetectorRole::down},
  };
  std::vector<Path> paths{
      {"r", Wing::single,
       {{"S", Port::emit}, {"BS1", Port::reflect}, {"phi", Port::pass}, {"M_r", Port::pass}}, "BS2",
       {{"U", Port::transmit}, {"D", Port::reflect}}},
      {"t", Wing::single,
       {{"S", Port::emit}, {"BS1", Port::transmit}, {"M_t", Port::pass}}, "BS2",
       {{"U", Port::reflect}, {"D", Port::transmit}}},
  };
  return Layout("mach-zehnder", std::move(elements), std::move(paths));
}

namespace detail {

inline std::optional<std::string> exit_toward_role(const Layout& layout, const Path& p,
                                                   DetectorRole role) {
  for (const Exit& x : p.exits) {
    if (layout.element(x.detector).role == role) return x.detector;
  }
  return std::nullopt;
}

inline std::vector<Amplitude> non_unit(std::vector<Amplitude> factors) {
  std::erase_if(factors, [](Amplitude f) { return std::abs(f - Amplitude{1.0, 0.0}) <= kExactTol; });
  return factors;
}

}  // namespace detail

/// Congruent paths: toward each detector role (up/down) the two routes carry
/// the same ordered sequence of non-trivial amplitude factors. Unit factors
/// (mirrors, zero-setting shifters) are skipped.
inline bool congruent(const Layout& layout, const Path& p, const Path& q) {
  for (DetectorRole role : {DetectorRole::up, DetectorRole::down}) {
    auto dp = detail::exit_toward_role(layout, p, role);
    auto dq = detail::exit_toward_role(layout, q, role);
    if (dp.has_value() != dq.has_value()) return false;
    if (!dp) continue;
    auto fp = detail::non_unit(layout.route_factors(p, *dp));
    auto fq = detail::non_unit(layout.route_factors(q, *dq));
    if (fp.size() != fq.size()) return false;
    for (std::size_t i = 0; i < fp.size(); ++i) {
      if (std::abs(fp[i] - fq[i]) > kExactTol) return false;
    }
  }
  return true;
}

inline bool congruent(const Layout& layout, std::string_view p, std::string_view q) {
  return congruent(layout, layout.path(p), layout.path(q));
}

/// Weaker than congruence: only the resulting path amplitudes per detector role must agree.
inline bool equivalent(const Layout& layout, const Path& p, const Path& q) {
  for (DetectorRole role : {DetectorRole::up, DetectorRole::down}) {
    auto dp = detail::exit_toward_role(layout, p, role);
    auto dq = detail::exit_toward_role(layout, q, role);
    if (dp.has_value() != dq.has_value()) return false;
    if (!dp) continue;
    Amplitude ap = chain_route(layout.route_factors(p, *dp));
    Amplitude aq = chain_route(layout.route_factors(q, *dq));
    if (std::abs(ap - aq) > kExactTol) return false;
  }
  return true;
}

inline bool equivalent(const Layout& layout, std::string_view p, std::string_view q) {
  return equivalent(layout, layout.path(p), layout.path(q));
}

}  // namespace shadow
