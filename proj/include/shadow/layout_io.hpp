#pragma once

// Layout files (JSON):
//
//   {
//     "kind": "rarity-tapster",
//     "elements": [
//       {"id": "S", "type": "source"},
//       {"id": "alpha", "type": "phase_shifter", "setting": 0.5, "wing": "left"},
//       {"id": "BS_L", "type": "beam_splitter", "split": 0.5, "wing": "left"},
//       {"id": "u", "type": "detector", "wing": "left", "role": "up"}, ...
//     ],
//     "paths": [
//       {"label": "a", "wing": "left",
//        "route": [{"element": "S", "port": "emit"}, {"element": "alpha", "port": "pass"}],
//        "terminal": "BS_L",
//        "exits": [{"detector": "u", "port": "reflect"}, {"detector": "d", "port": "transmit"}]}, ...
//     ],
//     "pairs": [["a", "a'"], ["b", "b'"]]
//   }
//
// "wing" defaults to "single", "role" to "up", "port" in a route to "pass".

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "shadow/error.hpp"
#include "shadow/interferometer.hpp"

namespace shadow {

namespace layout_detail {

using nlohmann::json;

[[noreturn]] inline void invalid(const std::string& field, const std::string& msg) {
  throw ValidationError("layout file: " + field + ": " + msg);
}

inline const json& require(const json& obj, const char* key, const std::string& field) {
  if (!obj.is_object()) invalid(field, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) invalid(field + "." + key, "missing");
  return *it;
}

inline std::string get_string(const json& obj, const char* key, const std::string& field) {
  const json& v = require(obj, key, field);
  if (!v.is_string()) invalid(field + "." + key, "expected a string");
  return v.get<std::string>();
}

inline std::string get_string_or(const json& obj, const char* key, const std::string& field,
                                 std::string fallback) {
  if (!obj.contains(key)) return fallback;
  return get_string(obj, key, field);
}

inline double get_number(const json& obj, const char* key, const std::string& field) {
  const json& v = require(obj, key, field);
  if (!v.is_number()) invalid(field + "." + key, "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) invalid(field + "." + key, "must be finite");
  return d;
}

inline ElementKind parse_kind(const std::string& s, const std::string& field) {
  if (s == "source") return ElementKind::source;
  if (s == "phase_shifter") return ElementKind::phase_shifter;
  if (s == "mirror") return ElementKind::mirror;
  if (s == "beam_splitter") return ElementKind::beam_splitter;
  if (s == "detector") return ElementKind::detector;
  invalid(field, "unknown element kind '" + s + "'");
}

inline Wing parse_wing(const std::string& s, const std::string& field) {
  if (s == "left") return Wing::left;
  if (s == "right") return Wing::right;
  if (s == "single") return Wing::single;
  invalid(field, "unknown wing '" + s + "'");
}

inline Port parse_port(const std::string& s, const std::string& field) {
  if (s == "emit") return Port::emit;
  if (s == "pass") return Port::pass;
  if (s == "transmit") return Port::transmit;
  if (s == "reflect") return Port::reflect;
  invalid(field, "unknown port '" + s + "'");
}

inline DetectorRole parse_role(const std::string& s, const std::string& field) {
  if (s == "up") return DetectorRole::up;
  if (s == "down") return DetectorRole::down;
  invalid(field, "unknown detector role '" + s + "'");
}

inline const json& require_array(const json& obj, const char* key, const std::string& field) {
  const json& v = require(obj, key, field);
  if (!v.is_array()) invalid(field + "." + key, "expected an array");
  return v;
}

inline std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace layout_detail

inline nlohmann::json layout_to_json(const Layout& layout) {
  using nlohmann::json;
  json elements = json::array();
  for (const Element& e : layout.elements()) {
    json j{{"id", e.id}, {"type", std::string(to_string(e.kind))}};
    if (e.wing != Wing::single) j["wing"] = std::string(to_string(e.wing));
    if (e.kind == ElementKind::phase_shifter) j["setting"] = e.setting;
    if (e.kind == ElementKind::beam_splitter) j["split"] = 0.5;
    if (e.kind == ElementKind::detector) j["role"] = std::string(to_string(e.role));
    elements.push_back(std::move(j));
  }
  json paths = json::array();
  for (const Path& p : layout.paths()) {
    json route = json::array();
    for (const Traversal& t : p.traversals) {
      route.push_back({{"element", t.element}, {"port", std::string(to_string(t.port))}});
    }
    json exits = json::array();
    for (const Exit& x : p.exits) {
      exits.push_back({{"detector", x.detector}, {"port", std::string(to_string(x.port))}});
    }
    paths.push_back({{"label", p.label},
                     {"wing", std::string(to_string(p.wing))},
                     {"route", std::move(route)},
                     {"terminal", p.terminal},
                     {"exits", std::move(exits)}});
  }
  json pairs = json::array();
  for (const auto& [l, r] : layout.pairs()) pairs.push_back(json::array({l, r}));
  return json{{"kind", layout.kind()}, {"elements", elements}, {"paths", paths}, {"pairs", pairs}};
}

inline std::string serialize_layout(const Layout& layout) {
  return layout_to_json(layout).dump(2) + "\n";
}

inline Layout layout_from_json(const nlohmann::json& doc) {
  using namespace layout_detail;
  if (!doc.is_object()) invalid("$", "expected an object");
  std::string kind = get_string_or(doc, "kind", "$", "custom");

  std::vector<Element> elements;
  const json& jel = require_array(doc, "elements", "$");
  for (std::size_t i = 0; i < jel.size(); ++i) {
    std::string f = "elements[" + std::to_string(i) + "]";
    const json& je = jel[i];
    Element e;
    e.id = get_string(je, "id", f);
    e.kind = parse_kind(get_string(je, "type", f), f + ".type");
    e.wing = parse_wing(get_string_or(je, "wing", f, "single"), f + ".wing");
    if (e.kind == ElementKind::phase_shifter) e.setting = get_number(je, "setting", f);
    if (e.kind == ElementKind::beam_splitter && je.contains("split")) {
      double split = get_number(je, "split", f);
      if (split != 0.5) {
        invalid(f + ".split", "only 50/50 beam splitters are supported (got " + std::to_string(split) + ")");
      }
    }
    if (e.kind == ElementKind::detector) e.role = parse_role(get_string_or(je, "role", f, "up"), f + ".role");
    elements.push_back(std::move(e));
  }

  std::vector<Path> paths;
  const json& jp = require_array(doc, "paths", "$");
  for (std::size_t i = 0; i < jp.size(); ++i) {
    std::string f = "paths[" + std::to_string(i) + "]";
    const json& j = jp[i];
    Path p;
    p.label = get_string(j, "label", f);
    p.wing = parse_wing(get_string_or(j, "wing", f, "single"), f + ".wing");
    const json& route = require_array(j, "route", f);
    for (std::size_t k = 0; k < route.size(); ++k) {
      std::string g = f + ".route[" + std::to_string(k) + "]";
      p.traversals.push_back(Traversal{get_string(route[k], "element", g),
                                       parse_port(get_string_or(route[k], "port", g, "pass"), g + ".port")});
    }
    p.terminal = get_string(j, "terminal", f);
    const json& exits = require_array(j, "exits", f);
    for (std::size_t k = 0; k < exits.size(); ++k) {
      std::string g = f + ".exits[" + std::to_string(k) + "]";
      p.exits.push_back(Exit{get_string(exits[k], "detector", g),
                             parse_port(get_string(exits[k], "port", g), g + ".port")});
    }
    paths.push_back(std::move(p));
  }

  std::vector<Layout::PathPair> pairs;
  if (doc.contains("pairs")) {
    const json& jpairs = require_array(doc, "pairs", "$");
    for (std::size_t i = 0; i < jpairs.size(); ++i) {
      std::string f = "pairs[" + std::to_string(i) + "]";
      const json& pr = jpairs[i];
      if (!pr.is_array() || pr.size() != 2 || !pr[0].is_string() || !pr[1].is_string()) {
        invalid(f, "expected [left path, right path]");
      }
      pairs.emplace_back(pr[0].get<std::string>(), pr[1].get<std::string>());
    }
  }
  return Layout(std::move(kind), std::move(elements), std::move(paths), std::move(pairs));
}

/// Parses layout text. Syntax errors raise ParseError with the line number;
/// schema problems raise ValidationError naming the offending field.
inline Layout parse_layout(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = layout_detail::line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("layout file: syntax error at line " + std::to_string(line) + ": " + e.what(),
                     line);
  }
  return layout_from_json(doc);
}

inline Layout load_layout(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open layout file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_layout(ss.str());
}

inline void save_layout(const Layout& layout, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write layout file '" + path + "'");
  out << serialize_layout(layout);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace shadow
