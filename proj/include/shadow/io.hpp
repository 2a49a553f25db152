#pragma once

// Table output: CSV with a header row, or JSON Lines with one object per row.
// Doubles are written with 17 significant digits in both formats.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "shadow/error.hpp"
#include "shadow/experiment.hpp"
#include "shadow/path_integral.hpp"

namespace shadow::io {

enum class Format { csv, jsonl };

inline std::string_view to_string(Format f) { return f == Format::csv ? "csv" : "jsonl"; }

inline Format parse_format(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "jsonl") return Format::jsonl;
  throw ConfigError("unknown format '" + std::string(s) + "' (expected csv or jsonl)");
}

inline std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Six decimals, for human-facing summaries.
inline std::string rounded(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

class TableWriter {
 public:
  TableWriter(std::ostream& out, Format format, std::vector<std::string> columns)
      : out_(out), format_(format), columns_(std::move(columns)) {
    if (format_ == Format::csv) {
      for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) out_ << ',';
        out_ << columns_[i];
      }
      out_ << '\n';
    }
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("row width does not match header");
    if (format_ == Format::csv) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << csv_cell(cells[i]);
      }
    } else {
      out_ << '{';
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << nlohmann::json(columns_[i]).dump() << ':' << json_cell(cells[i]);
      }
      out_ << '}';
    }
    out_ << '\n';
    if (!out_) throw IoError("write failed");
  }

 private:
  static std::string csv_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            return full_precision(v);
          } else if constexpr (std::is_same_v<T, std::string>) {
            if (v.find_first_of(",\"\n") == std::string::npos) return v;
            std::string q = "\"";
            for (char ch : v) {
              if (ch == '"') q += '"';
              q += ch;
            }
            return q + "\"";
          } else {
            return std::to_string(v);
          }
        },
        c);
  }

  static std::string json_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            return std::isfinite(v) ? full_precision(v) : "null";
          } else if constexpr (std::is_same_v<T, std::string>) {
            return nlohmann::json(v).dump();
          } else {
            return std::to_string(v);
          }
        },
        c);
  }

  std::ostream& out_;
  Format format_;
  std::vector<std::string> columns_;
};

// ---------------------------------------------------------------------------
// Declared tables

inline void write_scan(std::ostream& out, Format f, std::span<const JointDistribution> rows) {
  TableWriter w(out, f, {"alpha", "beta", "p_uu", "p_ud", "p_du", "p_dd", "E"});
  for (const JointDistribution& j : rows) {
    w.row({j.alpha, j.beta, j.p_uu, j.p_ud, j.p_du, j.p_dd, j.correlation()});
  }
}

/// trial,left,right,left_tangible,right_tangible with detector ids of `layout`.
inline void write_events(std::ostream& out, Format f, std::span<const CoincidenceRecord> records,
                         const Layout& layout) {
  TableWriter w(out, f, {"trial", "left", "right", "left_tangible", "right_tangible"});
  const std::string u = layout.detector_for(Wing::left, DetectorRole::up).id;
  const std::string d = layout.detector_for(Wing::left, DetectorRole::down).id;
  const std::string up = layout.detector_for(Wing::right, DetectorRole::up).id;
  const std::string dp = layout.detector_for(Wing::right, DetectorRole::down).id;
  for (const CoincidenceRecord& r : records) {
    w.row({r.trial, r.left == DetectorRole::up ? u : d, r.right == DetectorRole::up ? up : dp,
           r.assignment.left_tangible(layout), r.assignment.right_tangible(layout)});
  }
}

/// trial,left_tangible,right_tangible,shadow_paths (shadow labels joined by ';').
inline void write_assignments(std::ostream& out, Format f, std::span<const CoincidenceRecord> records,
                              const Layout& layout) {
  TableWriter w(out, f, {"trial", "left_tangible", "right_tangible", "shadow_paths"});
  for (const CoincidenceRecord& r : records) {
    std::string shadows;
    for (const std::string& s : r.assignment.shadow_paths(layout)) {
      if (!shadows.empty()) shadows += ';';
      shadows += s;
    }
    w.row({r.trial, r.assignment.left_tangible(layout), r.assignment.right_tangible(layout), shadows});
  }
}

/// Appends t,x,re,im rows for one snapshot (header written by the caller's TableWriter).
inline void write_snapshot(TableWriter& w, const pathint::PropagatorGrid& g, std::size_t stride = 1) {
  if (stride == 0) stride = 1;
  for (std::size_t i = 0; i < g.grid.n; i += stride) {
    w.row({g.t, g.grid.x(i), g.psi[i].real(), g.psi[i].imag()});
  }
}

inline TableWriter trace_writer(std::ostream& out, Format f) {
  return TableWriter(out, f, {"t", "x", "re", "im"});
}

inline void write_kernel_report(std::ostream& out, Format f,
                                std::span<const pathint::KernelStudyRow> rows) {
  TableWriter w(out, f, {"slices", "rel_error_modulus", "phase_error"});
  for (const auto& r : rows) {
    w.row({static_cast<std::uint64_t>(r.slices), r.rel_error_modulus, r.phase_error});
  }
}

}  // namespace shadow::io
