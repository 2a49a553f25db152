#pragma once

// shadowsim: batch front end. run_app() is the whole program minus
// process plumbing, so tests can drive it in-process.
//
// Exit codes: 0 ok, 1 a verification check failed, 2 bad configuration,
// 3 I/O failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shadow/shadow.hpp"

namespace shadowsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

inline constexpr const char* kOutputDirVar = "SHADOWSIM_OUTPUT_DIR";

struct AppEnv {
  std::optional<std::string> output_dir;  // value of SHADOWSIM_OUTPUT_DIR

  static AppEnv from_process() {
    AppEnv env;
    if (const char* v = std::getenv(kOutputDirVar); v != nullptr && *v != '\0') env.output_dir = v;
    return env;
  }
};

// ---------------------------------------------------------------------------
// Argument helpers

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 0;
};

/// "start:stop:count", half-open: start + k (stop - start)/count for k < count.
inline GridSpec parse_grid_spec(const std::string& spec, const std::string& field) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw shadow::ConfigError(field + ": expected start:stop:count, got '" + spec + "'");
  double start = 0, stop = 0;
  long long count = 0;
  try {
    std::size_t used = 0;
    start = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("start");
    stop = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("stop");
    count = std::stoll(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("count");
  } catch (const std::exception&) {
    throw shadow::ConfigError(field + ": cannot parse '" + spec + "' as start:stop:count");
  }
  if (!std::isfinite(start) || !std::isfinite(stop)) throw shadow::ConfigError(field + ": bounds must be finite");
  if (count < 1) throw shadow::ConfigError(field + ": grid must be non-empty (count >= 1)");
  return {start, stop, static_cast<std::size_t>(count)};
}

inline std::vector<double> parse_grid(const std::string& spec, const std::string& field) {
  GridSpec g = parse_grid_spec(spec, field);
  std::vector<double> out(g.count);
  double step = (g.stop - g.start) / static_cast<double>(g.count);
  for (std::size_t k = 0; k < g.count; ++k) out[k] = g.start + static_cast<double>(k) * step;
  return out;
}

inline std::vector<double> parse_list(const std::string& spec, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size() || !std::isfinite(v)) throw std::invalid_argument("x");
      out.push_back(v);
    } catch (const std::exception&) {
      throw shadow::ConfigError(field + ": cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw shadow::ConfigError(field + ": empty list");
  return out;
}

/// "lo:hi" with hi > lo.
inline std::pair<double, double> parse_interval(const std::string& spec, const std::string& field) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw shadow::ConfigError(field + ": expected lo:hi, got '" + spec + "'");
  auto a = parse_list(spec.substr(0, colon), field);
  auto b = parse_list(spec.substr(colon + 1), field);
  if (a.size() != 1 || b.size() != 1 || !(b[0] > a[0])) {
    throw shadow::ConfigError(field + ": expected lo:hi with hi > lo, got '" + spec + "'");
  }
  return {a[0], b[0]};
}

/// A single value (`--x`) or a grid (`--x-grid`); defaults to {fallback}.
inline std::vector<double> values_or_grid(const std::optional<double>& value, const std::string& grid,
                                          const std::string& field, double fallback) {
  if (!grid.empty()) return parse_grid(grid, field + "-grid");
  if (value) {
    if (!std::isfinite(*value)) throw shadow::ConfigError(field + ": must be finite");
    return {*value};
  }
  return {fallback};
}

/// "label:delta" -> extra phase delta on path label.
inline std::pair<std::string, double> parse_injection(const std::string& spec) {
  auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw shadow::ConfigError("--inject-phase: expected path:delta, got '" + spec + "'");
  }
  auto v = parse_list(spec.substr(colon + 1), "--inject-phase");
  if (v.size() != 1) throw shadow::ConfigError("--inject-phase: expected one phase value");
  return {spec.substr(0, colon), v[0]};
}

// ---------------------------------------------------------------------------
// Output plumbing

class Sink {
 public:
  /// `path` "-" means the app's standard output.
  Sink(const std::string& path, const AppEnv& env, std::ostream& stdout_stream) {
    if (path == "-") {
      stream_ = &stdout_stream;
      to_stdout_ = true;
      return;
    }
    std::filesystem::path p(path);
    if (p.is_relative() && env.output_dir) p = std::filesystem::path(*env.output_dir) / p;
    resolved_ = p.string();
    file_ = std::make_unique<std::ofstream>(p, std::ios::binary | std::ios::trunc);
    if (!*file_) throw shadow::IoError("cannot open output file '" + resolved_ + "'");
    stream_ = file_.get();
  }

  std::ostream& stream() { return *stream_; }
  bool to_stdout() const noexcept { return to_stdout_; }
  const std::string& resolved() const noexcept { return resolved_; }

  void close() {
    if (file_) {
      file_->flush();
      if (!*file_) throw shadow::IoError("write failed for '" + resolved_ + "'");
      file_->close();
    } else {
      stream_->flush();
    }
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
  bool to_stdout_ = false;
  std::string resolved_ = "-";
};

struct CommonOptions {
  std::string output;
  std::string format = "csv";
};

inline std::string default_output(const std::string& stem, const CommonOptions& c) {
  return c.output.empty() ? stem + "." + c.format : c.output;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  const AppEnv& env;

  /// Summary goes to stdout unless the table itself does.
  std::ostream& summary(const Sink& sink) { return sink.to_stdout() ? err : out; }
};

inline void note_written(std::ostream& s, const Sink& sink) {
  if (!sink.to_stdout()) s << "wrote " << sink.resolved() << "\n";
}

// ---------------------------------------------------------------------------
// Subcommands

struct ScanOptions {
  std::optional<double> alpha, beta;
  std::string alpha_grid, beta_grid;
};

inline int run_scan(Context& ctx, const CommonOptions& c, const ScanOptions& o) {
  using namespace shadow;
  auto alphas = values_or_grid(o.alpha, o.alpha_grid, "--alpha", 0.0);
  auto betas = values_or_grid(o.beta, o.beta_grid, "--beta", 0.0);
  io::Format fmt = io::parse_format(c.format);
  std::vector<JointDistribution> rows;
  rows.reserve(alphas.size() * betas.size());
  double worst_sum = 0.0;
  for (double a : alphas) {
    for (double b : betas) {
      rows.push_back(joint_distribution(a, b));
      worst_sum = std::max(worst_sum, std::abs(rows.back().sum() - 1.0));
    }
  }
  Sink sink(default_output("scan", c), ctx.env, ctx.out);
  io::write_scan(sink.stream(), fmt, rows);
  sink.close();
  std::ostream& s = ctx.summary(sink);
  s << "scan: " << rows.size() << " rows\n";
  s << "max |sum p - 1| = " << io::full_precision(worst_sum) << "\n";
  note_written(s, sink);
  return kExitOk;
}

struct McOptions {
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t shots = 10000;
  std::optional<std::uint64_t> seed;
  std::uint64_t stream = 0;
  unsigned workers = 1;
  std::string assignments;
};

inline int run_mc(Context& ctx, const CommonOptions& c, const McOptions& o) {
  using namespace shadow;
  if (!o.seed) throw ConfigError("mc: --seed is required");
  if (o.shots == 0) throw ConfigError("mc: --shots must be >= 1");
  if (o.workers == 0) throw ConfigError("mc: --workers must be >= 1");
  if (!std::isfinite(o.alpha) || !std::isfinite(o.beta)) throw ConfigError("mc: angles must be finite");
  io::Format fmt = io::parse_format(c.format);
  Layout layout = build_rarity_tapster(o.alpha, o.beta);
  auto records = sample_coincidences(o.alpha, o.beta, o.shots, *o.seed, o.stream, o.workers);

  Sink sink(default_output("events", c), ctx.env, ctx.out);
  io::write_events(sink.stream(), fmt, records, layout);
  sink.close();
  std::optional<Sink> trace;
  if (!o.assignments.empty()) {
    trace.emplace(o.assignments, ctx.env, ctx.out);
    io::write_assignments(trace->stream(), fmt, records, layout);
    trace->close();
  }

  OutcomeCounts counts = count_outcomes(records);
  JointDistribution freq = counts.frequencies();
  JointDistribution exact = joint_distribution(o.alpha, o.beta);
  std::uint64_t aa = 0;
  for (const auto& r : records) aa += r.assignment.tangible_pair == 0 ? 1 : 0;
  std::ostream& s = ctx.summary(sink);
  s << "mc: shots=" << o.shots << " seed=" << *o.seed << " stream=" << o.stream << "\n";
  s << "outcome  count     freq      exact\n";
  const char* names[4] = {"u,u'", "u,d'", "d,u'", "d,d'"};
  std::uint64_t n[4] = {counts.uu, counts.ud, counts.du, counts.dd};
  auto fa = freq.as_array();
  auto ea = exact.as_array();
  for (int i = 0; i < 4; ++i) {
    s << names[i] << "     " << n[i] << "  " << io::rounded(fa[i]) << "  " << io::rounded(ea[i]) << "\n";
  }
  s << "E = " << io::rounded(counts.correlation()) << " (exact " << io::rounded(exact.correlation()) << ")\n";
  s << "tangible pair (a,a') fraction = "
    << io::rounded(static_cast<double>(aa) / static_cast<double>(o.shots)) << "\n";
  note_written(s, sink);
  if (trace) note_written(s, *trace);
  return kExitOk;
}

struct ChshOptions {
  std::string angles = "0,1.5707963267948966,0.78539816339744828,2.3561944901923448";
  std::uint64_t shots = 0;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
};

inline int run_chsh(Context& ctx, const CommonOptions& c, const ChshOptions& o) {
  using namespace shadow;
  auto a = parse_list(o.angles, "--angles");
  if (a.size() != 4) throw ConfigError("--angles: expected alpha1,alpha2,beta1,beta2");
  if (o.shots > 0 && !o.seed) throw ConfigError("chsh: --seed is required with --shots");
  if (o.workers == 0) throw ConfigError("chsh: --workers must be >= 1");
  if (o.shots > 0 && o.shots < kMinRecordsPerSetting) {
    throw ConfigError("chsh: --shots must be >= 100 per setting");
  }
  io::Format fmt = io::parse_format(c.format);
  ChshResult exact = chsh(a[0], a[1], a[2], a[3]);
  std::optional<ChshResult> mc;
  if (o.shots > 0) mc = monte_carlo_chsh(a[0], a[1], a[2], a[3], o.shots, *o.seed, o.workers);

  auto settings = chsh_settings(a[0], a[1], a[2], a[3]);
  Sink sink(default_output("chsh", c), ctx.env, ctx.out);
  std::vector<std::string> cols{"setting", "alpha", "beta", "E"};
  if (mc) cols.insert(cols.end(), {"E_mc", "stderr", "n"});
  io::TableWriter w(sink.stream(), fmt, cols);
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<io::Cell> row{static_cast<std::uint64_t>(i), settings[i].first, settings[i].second, exact.E[i]};
    if (mc) {
      row.push_back(mc->E[i]);
      row.push_back((*mc->E_stderr)[i]);
      row.push_back(static_cast<std::uint64_t>(mc->counts[i]));
    }
    w.row(row);
  }
  sink.close();
  std::ostream& s = ctx.summary(sink);
  s << "S = " << io::rounded(exact.S) << (exact.violated ? "  VIOLATED" : "  not violated")
    << " (|S| > 2)\n";
  if (mc) {
    s << "S_mc = " << io::rounded(mc->S) << " +/- " << io::rounded(*mc->S_stderr) << " (1 s.e.), "
      << "lower 3 s.e. bound " << io::rounded(mc->lower_bound(3.0))
      << (mc->lower_bound(3.0) > 2.0 ? "  VIOLATED" : "  not significant") << "\n";
  }
  note_written(s, sink);
  return kExitOk;
}

struct VerifyOptions {
  std::string mode = "locality";
  std::string match = "congruence";
  std::optional<double> alpha, beta;
  std::string alpha_grid, beta_grid;
  std::string layout;
  std::vector<std::string> inject;
  double tol = shadow::kExactTol;
};

struct VerifyRow {
  double alpha = 0.0, beta = 0.0;
  std::string check, lhs, rhs;
  shadow::Amplitude lhs_value, rhs_value;
  double defect = 0.0;
  bool pass = false;
};

inline void add_congruence_rows(std::vector<VerifyRow>& rows, double a, double b,
                                const shadow::Layout& layout, shadow::MatchMode mode, double tol) {
  using namespace shadow;
  CongruenceReport r = verify_congruence_identities(layout, mode, tol);
  for (const IdentityCheck& c : r.identities) {
    rows.push_back({a, b, "identity", c.lhs.text(), c.rhs.text(), c.lhs_value, c.rhs_value, c.defect, c.pass});
  }
  if (mode == MatchMode::congruence) {
    rows.push_back({a, b, "congruent_paths", r.left_path, r.right_path, {}, {}, 0.0, r.paths_congruent});
  }
}

inline void add_factorization_rows(std::vector<VerifyRow>& rows, double a, double b,
                                   const shadow::Layout& layout, double tol) {
  using namespace shadow;
  FactorizationReport r = verify_local_factorization(layout, tol);
  for (const FactorizationCheck& c : r.checks) {
    auto join = [](const std::vector<ProductTerm>& terms) {
      std::string s;
      for (const auto& t : terms) s += (s.empty() ? "" : " + ") + t.text();
      return s;
    };
    std::string outcome = "(" + c.outcome_left + "," + c.outcome_right + ")";
    rows.push_back({a, b, "factorization" + outcome, join(c.lhs_terms), join(c.rhs_terms), c.lhs,
                    c.rhs, c.defect, c.numeric_pass});
    rows.push_back({a, b, "wing_local" + outcome, join(c.rhs_terms), "single-wing terms", {}, {}, 0.0,
                    c.rhs_local});
  }
}

inline void add_normalization_rows(std::vector<VerifyRow>& rows, double a, double b,
                                   const shadow::Layout& layout, bool standard, double tol) {
  using namespace shadow;
  if (layout.is_two_particle()) {
    JointDistribution piped = joint_distribution_from_amplitudes(layout);
    double d = std::abs(piped.sum() - 1.0);
    rows.push_back({a, b, "sum_joint_probabilities", "sum |A|^2", "1", piped.sum(), 1.0, d, d <= tol});
    if (standard) {
      JointDistribution closed = joint_distribution_closed_form(a, b);
      double m = max_abs_difference(closed, piped);
      rows.push_back({a, b, "closed_form_vs_amplitudes", "|A|^2", "closed form", {}, {}, m, m <= tol});
      double ml = std::abs(piped.left_up() - 0.5);
      rows.push_back({a, b, "marginal_left_up", "p_uu+p_ud", "1/2", piped.left_up(), 0.5, ml, ml <= tol});
      double mr = std::abs(piped.right_up() - 0.5);
      rows.push_back({a, b, "marginal_right_up", "p_uu+p_du", "1/2", piped.right_up(), 0.5, mr, mr <= tol});
    }
  } else {
    double total = 0.0;
    for (const Element& e : layout.elements()) {
      if (e.kind != ElementKind::detector) continue;
      std::vector<Amplitude> terms;
      for (const Path& p : layout.paths()) {
        for (const Exit& x : p.exits) {
          if (x.detector == e.id) terms.push_back(layout.path_amplitude(p.label, e.id));
        }
      }
      if (!terms.empty()) total += probability_of(sum_alternatives(terms));
    }
    double d = std::abs(total - 1.0);
    rows.push_back({a, b, "sum_detector_probabilities", "sum |A|^2", "1", total, 1.0, d, d <= tol});
  }
}

inline int run_verify(Context& ctx, const CommonOptions& c, const VerifyOptions& o) {
  using namespace shadow;
  if (o.mode != "congruence" && o.mode != "locality" && o.mode != "normalization") {
    throw ConfigError("verify: --mode must be congruence, locality or normalization");
  }
  if (o.match != "congruence" && o.match != "equivalence") {
    throw ConfigError("verify: --match must be congruence or equivalence");
  }
  if (!(o.tol > 0.0)) throw ConfigError("verify: --tol must be > 0");
  io::Format fmt = io::parse_format(c.format);
  MatchMode match = o.match == "congruence" ? MatchMode::congruence : MatchMode::equivalence;

  std::optional<Layout> file_layout;
  if (!o.layout.empty()) {
    if (o.alpha || o.beta || !o.alpha_grid.empty() || !o.beta_grid.empty()) {
      throw ConfigError("verify: angles come from the layout file; drop --alpha/--beta");
    }
    file_layout = load_layout(o.layout);
  }
  auto alphas = values_or_grid(o.alpha, o.alpha_grid, "--alpha", 0.0);
  auto betas = values_or_grid(o.beta, o.beta_grid, "--beta", 0.0);
  std::vector<std::pair<std::string, double>> injections;
  for (const auto& spec : o.inject) injections.push_back(parse_injection(spec));

  std::vector<VerifyRow> rows;
  auto run_one = [&](double a, double b, Layout layout, bool standard) {
    for (const auto& [label, delta] : injections) {
      layout = layout.with_extra_phase(label, delta);
      standard = false;
    }
    if (o.mode != "normalization" && layout.pairs().size() != 2) {
      throw ConfigError("verify: " + o.mode + " needs a two-wing layout with two emission pairs");
    }
    if (o.mode == "congruence") {
      add_congruence_rows(rows, a, b, layout, match, o.tol);
    } else if (o.mode == "locality") {
      add_congruence_rows(rows, a, b, layout, match, o.tol);
      add_factorization_rows(rows, a, b, layout, o.tol);
    } else {
      add_normalization_rows(rows, a, b, layout, standard, o.tol);
    }
  };
  if (file_layout) {
    run_one(0.0, 0.0, *file_layout, false);
  } else {
    for (double a : alphas) {
      for (double b : betas) run_one(a, b, build_rarity_tapster(a, b), true);
    }
  }

  Sink sink(default_output("verify_" + o.mode, c), ctx.env, ctx.out);
  io::TableWriter w(sink.stream(), fmt,
                    {"alpha", "beta", "check", "lhs", "rhs", "lhs_re", "lhs_im", "rhs_re", "rhs_im",
                     "defect", "pass"});
  std::size_t failures = 0;
  for (const VerifyRow& r : rows) {
    w.row({r.alpha, r.beta, r.check, r.lhs, r.rhs, r.lhs_value.real(), r.lhs_value.imag(),
           r.rhs_value.real(), r.rhs_value.imag(), r.defect, std::string(r.pass ? "PASS" : "FAIL")});
    failures += r.pass ? 0 : 1;
  }
  sink.close();

  std::ostream& s = ctx.summary(sink);
  s << "verify " << o.mode;
  if (o.mode != "normalization") s << " (" << o.match << ")";
  s << ": " << rows.size() << " checks, " << failures << " failed\n";
  std::size_t shown = 0;
  for (const VerifyRow& r : rows) {
    if (rows.size() > 12 && r.pass) continue;
    if (++shown > 12) break;
    s << (r.pass ? "PASS " : "FAIL ") << r.check << "  " << r.lhs << " vs " << r.rhs
      << "  defect " << io::full_precision(r.defect) << "\n";
  }
  s << (failures == 0 ? "ALL PASS" : "FAIL") << "\n";
  note_written(s, sink);
  return failures == 0 ? kExitOk : kExitCheckFailed;
}

struct PathintOptions {
  std::string task = "evolve";
  double mass = 1.0;
  double hbar = 1.0;
  std::string potential = "free";
  // evolve
  double eps = 16.0;
  std::size_t slices = 1000;
  std::string grid = "-1024:1024:2048";
  double x0 = 0.0;
  double sigma = 89.0;
  double k0 = 0.0;
  bool renormalize = false;
  std::size_t every = 0;     // snapshot stride in slices; 0 = first and last only
  std::size_t x_stride = 1;  // grid-point stride in the trace
  // kernel
  double a = 0.0;
  std::string b_list = "0,0.5,1";
  double time = 1.0;
  std::string slices_list = "8,16,32,64";
  double ratio = 16.0;
  // residual
  std::string domain = "-20:20";
  std::size_t levels = 2;
};

inline int run_pathint_evolve(Context& ctx, const CommonOptions& c, const PathintOptions& o,
                              const shadow::pathint::Params& params) {
  using namespace shadow;
  using namespace shadow::pathint;
  GridSpec gs = parse_grid_spec(o.grid, "--grid");
  if (gs.count < 3 || !(gs.stop > gs.start)) throw ConfigError("--grid: need stop > start and count >= 3");
  Grid grid = Grid::span(gs.start, gs.stop, gs.count);
  if (!(o.sigma > 0.0)) throw ConfigError("--sigma must be > 0");
  io::Format fmt = io::parse_format(c.format);
  PropagatorGrid state{grid, gaussian_packet(grid, o.x0, o.sigma, o.k0), 0.0, params};
  SlicePropagator prop(grid, o.eps, params, {o.renormalize});  // validates eps against grid

  Sink sink(default_output("pathint_trace", c), ctx.env, ctx.out);
  io::TableWriter w = io::trace_writer(sink.stream(), fmt);
  double edge = 0.0;
  double drift = 0.0;
  auto observe = [&](const PropagatorGrid& st, std::size_t k) {
    edge = std::max(edge, boundary_magnitude(st.psi));
    drift = std::max(drift, std::abs(moments(st).norm - 1.0));
    bool keep = k == 0 || k == o.slices || (o.every > 0 && k % o.every == 0);
    if (keep) io::write_snapshot(w, st, o.x_stride);
  };
  observe(state, 0);
  for (std::size_t k = 1; k <= o.slices; ++k) {
    state.psi = prop.apply(state.psi);
    state.t += o.eps;
    observe(state, k);
  }
  sink.close();

  Moments m = moments(state);
  std::ostream& s = ctx.summary(sink);
  s << "pathint evolve: slices=" << o.slices << " eps=" << io::full_precision(o.eps)
    << " t=" << io::full_precision(state.t) << " potential=" << params.potential.spec << "\n";
  s << "max |norm - 1| = " << io::full_precision(drift) << "\n";
  s << "mean = " << io::rounded(m.mean) << "  width = " << io::rounded(m.width) << "\n";
  if (params.potential.is_free()) {
    double expect = free_packet_width(o.sigma, state.t, params.mass, params.hbar);
    s << "analytic width = " << io::rounded(expect)
      << "  rel error = " << io::full_precision(m.width / expect - 1.0) << "\n";
  }
  s << "max boundary |psi| = " << io::full_precision(edge) << "\n";
  note_written(s, sink);
  return kExitOk;
}

inline int run_pathint_kernel(Context& ctx, const CommonOptions& c, const PathintOptions& o,
                              const shadow::pathint::Params& params) {
  using namespace shadow;
  using namespace shadow::pathint;
  auto bs = parse_list(o.b_list, "--b");
  auto sl = parse_list(o.slices_list, "--slices-list");
  std::vector<std::size_t> counts;
  for (double v : sl) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("--slices-list: entries must be integers >= 1");
    counts.push_back(static_cast<std::size_t>(v));
  }
  if (!(o.time > 0.0)) throw ConfigError("--time must be > 0");
  io::Format fmt = io::parse_format(c.format);
  KernelOptions ko;
  ko.ratio = o.ratio;
  auto rows = kernel_study(o.a, bs, o.time, counts, params, ko);
  Sink sink(default_output("kernel_report", c), ctx.env, ctx.out);
  io::write_kernel_report(sink.stream(), fmt, rows);
  sink.close();
  std::ostream& s = ctx.summary(sink);
  s << "pathint kernel: a=" << io::full_precision(o.a) << " T=" << io::full_precision(o.time)
    << " ratio=" << io::full_precision(o.ratio) << "\n";
  s << "slices  rel_error_modulus  phase_error\n";
  for (const auto& r : rows) {
    s << r.slices << "  " << io::rounded(r.rel_error_modulus) << "  " << io::rounded(r.phase_error) << "\n";
  }
  note_written(s, sink);
  return kExitOk;
}

inline int run_pathint_residual(Context& ctx, const CommonOptions& c, const PathintOptions& o,
                                const shadow::pathint::Params& params) {
  using namespace shadow;
  using namespace shadow::pathint;
  auto [lo, hi] = parse_interval(o.domain, "--domain");
  if (o.levels < 1) throw ConfigError("--levels must be >= 1");
  if (!(o.ratio >= 1.0)) throw ConfigError("--ratio must be >= 1");
  if (!(o.sigma > 0.0)) throw ConfigError("--sigma must be > 0");
  io::Format fmt = io::parse_format(c.format);
  Sink sink(default_output("residual", c), ctx.env, ctx.out);
  io::TableWriter w(sink.stream(), fmt, {"eps", "dx", "residual", "ratio"});
  std::ostream& s = ctx.summary(sink);
  s << "pathint residual: ratio hbar*eps/(m dx^2)=" << io::full_precision(o.ratio) << "\n";
  double eps = o.eps;
  double prev = 0.0;
  for (std::size_t level = 0; level <= o.levels; ++level, eps *= 0.5) {
    double dx = std::sqrt(params.hbar * eps / (params.mass * o.ratio));
    double n = std::floor((hi - lo) / dx);
    if (n > double(1u << 24)) throw ConfigError("residual grid too large");
    if (n < 3) throw ConfigError("residual grid too small");
    Grid grid{lo, dx, static_cast<std::size_t>(n)};
    std::vector<PropagatorGrid> trace;
    PropagatorGrid st{grid, gaussian_packet(grid, o.x0, o.sigma, o.k0), 0.0, params};
    evolve(st, eps, 2, {o.renormalize}, [&](const PropagatorGrid& g, std::size_t) { trace.push_back(g); });
    double r = schrodinger_residual(trace);
    double ratio = level == 0 ? 0.0 : prev / r;
    w.row({eps, dx, r, ratio});
    s << "eps=" << io::full_precision(eps) << "  residual=" << io::full_precision(r);
    if (level > 0) s << "  ratio=" << io::rounded(ratio);
    s << "\n";
    prev = r;
  }
  sink.close();
  note_written(s, sink);
  return kExitOk;
}

inline int run_pathint(Context& ctx, const CommonOptions& c, const PathintOptions& o) {
  auto params = shadow::pathint::make_params(o.potential, o.mass, o.hbar);
  if (o.task == "evolve") return run_pathint_evolve(ctx, c, o, params);
  if (o.task == "kernel") return run_pathint_kernel(ctx, c, o, params);
  if (o.task == "residual") return run_pathint_residual(ctx, c, o, params);
  throw shadow::ConfigError("pathint: --task must be evolve, kernel or residual");
}

struct MzOptions {
  std::optional<double> phi;
  std::string phi_grid;
};

inline int run_mz(Context& ctx, const CommonOptions& c, const MzOptions& o) {
  using namespace shadow;
  auto phis = values_or_grid(o.phi, o.phi_grid, "--phi", 0.0);
  io::Format fmt = io::parse_format(c.format);
  Sink sink(default_output("mz", c), ctx.env, ctx.out);
  io::TableWriter w(sink.stream(), fmt, {"phi", "re_U", "im_U", "re_D", "im_D", "P_U", "P_D"});
  double worst_sum = 0.0;
  for (double phi : phis) {
    Layout mz = build_mach_zehnder(phi);
    Amplitude up = sum_alternatives({mz.path_amplitude("r", "U"), mz.path_amplitude("t", "U")});
    Amplitude down = sum_alternatives({mz.path_amplitude("r", "D"), mz.path_amplitude("t", "D")});
    double pu = probability_of(up);
    double pd = probability_of(down);
    worst_sum = std::max(worst_sum, std::abs(pu + pd - 1.0));
    w.row({phi, up.real(), up.imag(), down.real(), down.imag(), pu, pd});
  }
  sink.close();
  std::ostream& s = ctx.summary(sink);
  s << "mz: " << phis.size() << " rows, max |P_U + P_D - 1| = " << io::full_precision(worst_sum) << "\n";
  note_written(s, sink);
  return kExitOk;
}

struct LayoutOptions {
  std::string kind = "rarity-tapster";
  double alpha = 0.0, beta = 0.0, phi = 0.0;
  std::vector<std::string> inject;
};

inline int run_layout(Context& ctx, const CommonOptions& c, const LayoutOptions& o) {
  using namespace shadow;
  std::optional<Layout> layout;
  if (o.kind == "rarity-tapster") {
    layout = build_rarity_tapster(o.alpha, o.beta);
  } else if (o.kind == "mach-zehnder") {
    layout = build_mach_zehnder(o.phi);
  } else {
    throw ConfigError("layout: --kind must be rarity-tapster or mach-zehnder");
  }
  for (const auto& spec : o.inject) {
    auto [label, delta] = parse_injection(spec);
    layout = layout->with_extra_phase(label, delta);
  }
  Sink sink(c.output.empty() ? "layout.json" : c.output, ctx.env, ctx.out);
  sink.stream() << serialize_layout(*layout);
  sink.close();
  std::ostream& s = ctx.summary(sink);
  s << "layout " << layout->kind() << ": " << layout->elements().size() << " elements, "
    << layout->paths().size() << " paths\n";
  note_written(s, sink);
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline void add_common(CLI::App* sub, CommonOptions& c) {
  sub->add_option("-o,--output", c.output,
                  "Output file ('-' for stdout); relative paths go under $" +
                      std::string(kOutputDirVar));
  sub->add_option("--format", c.format, "csv or jsonl")->capture_default_str();
}

inline int run_app(std::vector<std::string> args, std::ostream& out, std::ostream& err,
                   const AppEnv& env = AppEnv::from_process()) {
  CLI::App app{"shadowsim: two-particle interference, CHSH and path-integral experiments", "shadowsim"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  CommonOptions common;

  ScanOptions scan;
  auto* s_scan = app.add_subcommand("scan", "Joint probabilities and E over an (alpha, beta) grid");
  add_common(s_scan, common);
  s_scan->add_option("--alpha", scan.alpha, "Left phase (radians)");
  s_scan->add_option("--beta", scan.beta, "Right phase (radians)");
  s_scan->add_option("--alpha-grid", scan.alpha_grid, "start:stop:count, half-open");
  s_scan->add_option("--beta-grid", scan.beta_grid, "start:stop:count, half-open");

  McOptions mc;
  auto* s_mc = app.add_subcommand("mc", "Seeded Monte Carlo coincidence records");
  add_common(s_mc, common);
  s_mc->add_option("--alpha", mc.alpha, "Left phase (radians)");
  s_mc->add_option("--beta", mc.beta, "Right phase (radians)");
  s_mc->add_option("--shots", mc.shots, "Number of trials")->capture_default_str();
  s_mc->add_option("--seed", mc.seed, "Master seed (required)");
  s_mc->add_option("--stream", mc.stream, "Random stream id")->capture_default_str();
  s_mc->add_option("--workers", mc.workers, "Worker threads")->capture_default_str();
  s_mc->add_option("--assignments", mc.assignments, "Also write the source-assignment trace here");

  ChshOptions ch;
  auto* s_chsh = app.add_subcommand("chsh", "CHSH statistic, exact and optionally Monte Carlo");
  add_common(s_chsh, common);
  s_chsh->add_option("--angles", ch.angles, "alpha1,alpha2,beta1,beta2 (radians)")->capture_default_str();
  s_chsh->add_option("--shots", ch.shots, "Monte Carlo shots per setting (0 = exact only)");
  s_chsh->add_option("--seed", ch.seed, "Master seed (required with --shots)");
  s_chsh->add_option("--workers", ch.workers, "Worker threads")->capture_default_str();

  VerifyOptions ver;
  auto* s_ver = app.add_subcommand("verify", "Locality identities, factorization, normalization");
  add_common(s_ver, common);
  s_ver->add_option("--mode", ver.mode, "congruence | locality | normalization")->capture_default_str();
  s_ver->add_option("--match", ver.match, "congruence | equivalence")->capture_default_str();
  s_ver->add_option("--alpha", ver.alpha, "Left phase (radians)");
  s_ver->add_option("--beta", ver.beta, "Right phase (radians)");
  s_ver->add_option("--alpha-grid", ver.alpha_grid, "start:stop:count, half-open");
  s_ver->add_option("--beta-grid", ver.beta_grid, "start:stop:count, half-open");
  s_ver->add_option("--layout", ver.layout, "Layout file (JSON)");
  s_ver->add_option("--inject-phase", ver.inject, "path:delta, extra phase on one path (repeatable)");
  s_ver->add_option("--tol", ver.tol, "Absolute tolerance")->capture_default_str();

  PathintOptions pi;
  auto* s_pi = app.add_subcommand("pathint", "Time-sliced propagator runs");
  add_common(s_pi, common);
  s_pi->add_option("--task", pi.task, "evolve | kernel | residual")->capture_default_str();
  s_pi->add_option("--mass", pi.mass)->capture_default_str();
  s_pi->add_option("--hbar", pi.hbar)->capture_default_str();
  s_pi->add_option("--potential", pi.potential, "free | harmonic:<omega> | linear:<force>")->capture_default_str();
  s_pi->add_option("--eps", pi.eps, "Time slice")->capture_default_str();
  s_pi->add_option("--slices", pi.slices, "Number of slices (evolve)")->capture_default_str();
  s_pi->add_option("--grid", pi.grid, "start:stop:count, half-open (evolve)")->capture_default_str();
  s_pi->add_option("--x0", pi.x0, "Packet center")->capture_default_str();
  s_pi->add_option("--sigma", pi.sigma, "Packet width (std dev of |psi|^2)")->capture_default_str();
  s_pi->add_option("--k0", pi.k0, "Packet wavenumber")->capture_default_str();
  s_pi->add_flag("--renormalize", pi.renormalize, "Rescale to unit norm after every slice");
  s_pi->add_option("--every", pi.every, "Trace snapshot stride in slices (0 = first and last)");
  s_pi->add_option("--x-stride", pi.x_stride, "Trace grid-point stride")->capture_default_str();
  s_pi->add_option("--a", pi.a, "Kernel start point")->capture_default_str();
  s_pi->add_option("--b", pi.b_list, "Kernel end points, comma separated")->capture_default_str();
  s_pi->add_option("--time", pi.time, "Kernel time T")->capture_default_str();
  s_pi->add_option("--slices-list", pi.slices_list, "Kernel slice counts")->capture_default_str();
  s_pi->add_option("--ratio", pi.ratio, "hbar*eps/(m dx^2) for kernel and residual")->capture_default_str();
  s_pi->add_option("--domain", pi.domain, "lo:hi (residual)")->capture_default_str();
  s_pi->add_option("--levels", pi.levels, "Number of eps halvings (residual)")->capture_default_str();

  MzOptions mz;
  auto* s_mz = app.add_subcommand("mz", "Mach-Zehnder detector amplitudes over phi");
  add_common(s_mz, common);
  s_mz->add_option("--phi", mz.phi, "Arm phase (radians)");
  s_mz->add_option("--phi-grid", mz.phi_grid, "start:stop:count, half-open");

  LayoutOptions lay;
  auto* s_lay = app.add_subcommand("layout", "Write a layout file");
  add_common(s_lay, common);
  s_lay->add_option("--kind", lay.kind, "rarity-tapster | mach-zehnder")->capture_default_str();
  s_lay->add_option("--alpha", lay.alpha)->capture_default_str();
  s_lay->add_option("--beta", lay.beta)->capture_default_str();
  s_lay->add_option("--phi", lay.phi)->capture_default_str();
  s_lay->add_option("--inject-phase", lay.inject, "path:delta (repeatable)");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitConfig;
  }

  Context ctx{out, err, env};
  try {
    if (*s_scan) return run_scan(ctx, common, scan);
    if (*s_mc) return run_mc(ctx, common, mc);
    if (*s_chsh) return run_chsh(ctx, common, ch);
    if (*s_ver) return run_verify(ctx, common, ver);
    if (*s_pi) return run_pathint(ctx, common, pi);
    if (*s_mz) return run_mz(ctx, common, mz);
    if (*s_lay) return run_layout(ctx, common, lay);
  } catch (const shadow::IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const shadow::ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const shadow::ValidationError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const shadow::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const shadow::DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace shadowsim
