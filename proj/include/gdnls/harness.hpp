#pragma once

#include <filesystem>
#include <fstream>
#include <optional>

#include "gdnls/io.hpp"
#include "gdnls/picard.hpp"
#include "gdnls/random_field.hpp"
#include "gdnls/toml.hpp"

namespace gdnls::harness {

using json = nlohmann::json;

inline constexpr const char* kLibraryName = "gdnls";
inline constexpr const char* kLibraryVersion = "1.0.0";

enum class Kind { SolitonCheck, Evolve, ChiScan, ConditionMargin, GQIdentity, Picard, FullConstruct };

inline const std::vector<std::pair<Kind, std::string>>& kind_names() {
  static const std::vector<std::pair<Kind, std::string>> names{
      {Kind::SolitonCheck, "soliton-check"},       {Kind::Evolve, "evolve"},
      {Kind::ChiScan, "chi-scan"},                 {Kind::ConditionMargin, "condition-margin"},
      {Kind::GQIdentity, "gq-identity"},           {Kind::Picard, "picard"},
      {Kind::FullConstruct, "full-construct"}};
  return names;
}

inline std::string kind_name(Kind k) {
  for (const auto& [kk, n] : kind_names())
    if (kk == k) return n;
  return "unknown";
}

inline Kind parse_kind(const std::string& s) {
  for (const auto& [k, n] : kind_names())
    if (n == s) return k;
  throw InvalidArgument("unknown experiment kind '" + s + "'");
}

struct ExperimentSpec {
  std::string name;
  Kind kind = Kind::SolitonCheck;
  json config = json::object();
  std::uint64_t seed = 42;
  std::string output_dir = "out";
};

struct ValidationError : std::runtime_error {
  std::vector<std::string> violations;
  explicit ValidationError(std::vector<std::string> v)
      : std::runtime_error("configuration failed validation"), violations(std::move(v)) {}
};

struct RunResult {
  int exit_code = 0;
  std::string status;
  json report;
  std::vector<std::string> outputs;
};

// Typed access into the config tree; missing entries are filled with their
// defaults so the manifest records the fully resolved configuration.
class Config {
 public:
  explicit Config(json& root) : root_(root) {}

  json& node(const std::string& path) {
    json* n = &root_;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (dot == std::string::npos) return (*n)[part];
      json& child = (*n)[part];
      if (child.is_null()) child = json::object();
      n = &child;
      start = dot + 1;
    }
  }
  bool has(const std::string& path) {
    json* n = &root_;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!n->is_object() || !n->contains(part)) return false;
      n = &(*n)[part];
      if (dot == std::string::npos) return true;
      start = dot + 1;
    }
  }
  double num(const std::string& path, double def) {
    json& v = node(path);
    if (v.is_null()) v = def;
    if (!v.is_number()) throw InvalidArgument("'" + path + "' must be a number");
    return v.get<double>();
  }
  long integer(const std::string& path, long def) {
    json& v = node(path);
    if (v.is_null()) v = def;
    if (!v.is_number()) throw InvalidArgument("'" + path + "' must be an integer");
    const double d = v.get<double>();
    if (d != std::floor(d)) throw InvalidArgument("'" + path + "' must be an integer");
    return static_cast<long>(d);
  }
  bool flag(const std::string& path, bool def) {
    json& v = node(path);
    if (v.is_null()) v = def;
    if (!v.is_boolean()) throw InvalidArgument("'" + path + "' must be a boolean");
    return v.get<bool>();
  }
  std::string str(const std::string& path, const std::string& def) {
    json& v = node(path);
    if (v.is_null()) v = def;
    if (!v.is_string()) throw InvalidArgument("'" + path + "' must be a string");
    return v.get<std::string>();
  }
  RVec list(const std::string& path, const RVec& def) {
    json& v = node(path);
    if (v.is_null()) v = def;
    if (!v.is_array()) throw InvalidArgument("'" + path + "' must be an array");
    RVec out;
    for (const auto& e : v) {
      if (!e.is_number()) throw InvalidArgument("'" + path + "' must hold numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  json& root_;
};

inline ExperimentSpec make_spec(json config, std::optional<Kind> kind_override = std::nullopt,
                                std::optional<std::uint64_t> seed_override = std::nullopt,
                                std::optional<std::string> out_override = std::nullopt) {
  ExperimentSpec s;
  if (kind_override) config["kind"] = kind_name(*kind_override);
  if (seed_override) config["seed"] = *seed_override;
  if (out_override) config["output_dir"] = *out_override;
  Config c(config);
  s.kind = parse_kind(c.str("kind", "soliton-check"));
  s.name = c.str("name", kind_name(s.kind));
  const long seed = c.integer("seed", 42);
  if (seed < 0) throw InvalidArgument("seed must be non-negative");
  s.seed = static_cast<std::uint64_t>(seed);
  s.output_dir = c.str("output_dir", "out/" + s.name);
  s.config = std::move(config);
  return s;
}

inline ExperimentSpec load_spec(const std::string& path, const std::vector<std::string>& overrides = {},
                                std::optional<Kind> kind_override = std::nullopt,
                                std::optional<std::uint64_t> seed_override = std::nullopt,
                                std::optional<std::string> out_override = std::nullopt) {
  json cfg = path.empty() ? json::object() : toml::parse_file(path);
  for (const auto& o : overrides) toml::apply_override(cfg, o);
  return make_spec(std::move(cfg), kind_override, seed_override, out_override);
}

namespace detail {

inline SpatialGrid grid_of(Config& c, int n_def, double half_def) {
  const long n = c.integer("grid.num_points", n_def);
  const double half = c.num("grid.half_length", half_def);
  return build_grid(static_cast<int>(n), half);
}

// Solitons come either from [[soliton]] entries or from a [family] block.
inline MultiSolitonConfig solitons_of(Config& c, json& root) {
  const double sigma = c.num("sigma", 2.5);
  if (root.contains("soliton")) {
    MultiSolitonConfig cfg{{}, sigma};
    auto& arr = root["soliton"];
    if (!arr.is_array()) throw InvalidArgument("'soliton' must be an array of tables");
    for (auto& entry : arr) {
      Config e(entry);
      SolitonParams p;
      p.omega = e.num("omega", 1.0);
      p.c = e.num("c", 0.0);
      p.x0 = e.num("x0", 0.0);
      p.theta0 = e.num("theta0", 0.0);
      p.sigma = e.num("sigma", sigma);
      cfg.solitons.push_back(p);
    }
    return cfg;
  }
  const double M = c.num("family.M", 10.0);
  const RVec d = c.list("family.d", {-1.0, -2.0});
  const RVec h = c.list("family.h", {1.0, 1.0});
  const RVec x0 = c.list("family.x0", RVec(d.size(), 0.0));
  return remark_parameter_family(M, d, h, sigma, x0);
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write '" + path + "'");
  o << j.dump(2) << '\n';
}

inline double max_of(const RVec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

inline double min_of(const RVec& v) {
  double m = INFINITY;
  for (double x : v) m = std::min(m, x);
  return m;
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const RVec& x, const RVec& y) {
  RVec lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Largest Fourier amplitude in the top eighth of the spectrum relative to the peak.
inline double spectral_tail(const ComplexField& f) {
  const CVec hat = fft::forward(f.values);
  const int n = f.grid.num_points;
  double peak = 0.0, tail = 0.0;
  for (int j = 0; j < n; ++j) {
    const int jj = j <= n / 2 - 1 ? j : n - j;
    const double a = std::abs(hat[j]);
    peak = std::max(peak, a);
    if (jj > 3 * n / 8) tail = std::max(tail, a);
  }
  return peak > 0.0 ? tail / peak : 0.0;
}

inline bool uses_solitons(Kind k) { return k != Kind::GQIdentity; }
inline bool multi_kind(Kind k) {
  return k == Kind::ChiScan || k == Kind::ConditionMargin || k == Kind::Picard || k == Kind::FullConstruct;
}

inline std::pair<int, double> grid_defaults(Kind k) {
  switch (k) {
    case Kind::SolitonCheck:
    case Kind::Evolve: return {4096, 40.0};
    case Kind::GQIdentity: return {4096, 32.0};
    case Kind::ConditionMargin: return {16384, 64.0};
    default: return {1024, 64.0};
  }
}

}  // namespace detail

// Every violated rule is listed; an empty result means the spec is runnable.
inline std::vector<std::string> validate_spec(const ExperimentSpec& spec) {
  std::vector<std::string> out;
  json root = spec.config;
  Config c(root);
  const auto [n_def, half_def] = detail::grid_defaults(spec.kind);
  SpatialGrid g;
  try {
    g = detail::grid_of(c, n_def, half_def);
  } catch (const std::exception& e) {
    out.push_back(std::string("grid: ") + e.what());
    return out;
  }
  if (!detail::uses_solitons(spec.kind)) {
    try {
      for (double s : c.list("sigmas", {1.0, 2.0, 2.5, 3.0}))
        if (!(s >= 1.0)) out.push_back("sigma values must be >= 1");
      const long kc = c.integer("k_cut", g.num_points / 64);
      if (kc < 1 || kc >= g.num_points / 2) out.push_back("k_cut must lie in [1, N/2)");
    } catch (const std::exception& e) {
      out.push_back(e.what());
    }
    return out;
  }
  MultiSolitonConfig cfg;
  try {
    const double sigma = c.num("sigma", 2.5);
    if (!(sigma >= 1.0)) out.push_back("sigma must be >= 1");
    if (root.contains("soliton")) {
      for (auto& e : root["soliton"]) {
        Config ec(e);
        SolitonParams p{ec.num("omega", 1.0), ec.num("c", 0.0), ec.num("x0", 0.0), ec.num("theta0", 0.0),
                        ec.num("sigma", sigma)};
        if (p.sigma != sigma) out.push_back("every soliton must share sigma = " + io::fmt(sigma));
        try {
          validate(p);
          cfg.solitons.push_back(p);
        } catch (const std::exception& ex) {
          out.push_back(std::string("soliton: ") + ex.what());
          // keep it for the geometric rules when only sigma is wrong
          SolitonParams q = p;
          q.sigma = 1.0;
          if (p.sigma < 1.0 && p.omega > 0.25 * p.c * p.c) cfg.solitons.push_back(q);
        }
      }
      cfg.sigma = sigma;
      if (root["soliton"].empty()) out.push_back("at least one [[soliton]] entry is required");
    } else {
      cfg = detail::solitons_of(c, root);
    }
  } catch (const std::exception& e) {
    out.push_back(e.what());
    return out;
  }
  // Remaining rules run on whichever solitons passed, so every violation is reported.
  const bool sigma_ok = cfg.sigma >= 1.0;
  for (auto& s : cfg.solitons) s.sigma = sigma_ok ? cfg.sigma : 1.0;
  if (!sigma_ok) cfg.sigma = 1.0;
  if (cfg.solitons.empty()) return out;
  const std::size_t declared = root.contains("soliton") ? root["soliton"].size() : cfg.size();
  if (detail::multi_kind(spec.kind) && declared < 2)
    out.push_back("this experiment needs at least two solitons");
  bool distinct = sigma_ok;
  try {
    validate(cfg);
  } catch (const std::exception& e) {
    out.push_back(e.what());
    distinct = false;
  }
  double hmin = INFINITY;
  for (const auto& s : cfg.solitons) hmin = std::min(hmin, halfwidth_h(s));
  if (!(std::exp(-hmin * g.half_length / 2.0) < 1e-10))
    out.push_back("box too small: exp(-h_min * half_length / 2) = " + io::fmt(std::exp(-hmin * g.half_length / 2.0)) +
                  " must be < 1e-10");
  if (spec.kind == Kind::SolitonCheck || spec.kind == Kind::Evolve) {
    const double ppw = points_per_width(cfg, g);
    if (ppw < 16.0) out.push_back("resolution: only " + io::fmt(ppw) + " grid points per soliton width 1/h (need 16)");
  } else if (spec.kind != Kind::ConditionMargin) {
    const double t0 = root.contains("picard") && root["picard"].contains("t0") && root["picard"]["t0"].is_number()
                          ? root["picard"]["t0"].get<double>()
                          : 0.0;
    const double tail = distinct ? detail::spectral_tail(profile_sum(cfg, t0, g)) : 0.0;
    if (tail > 1e-5) out.push_back("resolution: profile spectrum at the top eighth is " + io::fmt(tail) + " of peak");
  }
  return out;
}

namespace detail {

inline void write_manifest(const ExperimentSpec& spec, const json& resolved, const RunResult& r,
                           const std::string& command) {
  json m;
  m["library"] = kLibraryName;
  m["version"] = kLibraryVersion;
  m["name"] = spec.name;
  m["kind"] = kind_name(spec.kind);
  m["command"] = command;
  m["seed"] = spec.seed;
  m["resolved_config"] = resolved;
  m["outputs"] = r.outputs;
  m["status"] = r.status;
  m["exit_code"] = r.exit_code;
  write_json((std::filesystem::path(spec.output_dir) / "MANIFEST.json").string(), m);
}

struct Ctx {
  const ExperimentSpec& spec;
  json& root;
  Config cfg;
  std::filesystem::path dir;
  RunResult& result;

  std::string path(const std::string& file) {
    result.outputs.push_back(file);
    return (dir / file).string();
  }
};

inline void run_soliton_check(Ctx& x) {
  const SpatialGrid g = grid_of(x.cfg, 4096, 40.0);
  const MultiSolitonConfig ms = solitons_of(x.cfg, x.root);
  io::CsvWriter csv(x.path("residuals.csv"),
                    {"index", "sigma", "omega", "c", "profile_ode_residual", "phi_ode_residual", "decay_pass"});
  json rows = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    SolitonParams p = ms.solitons[i];
    const double r1 = profile_ode_residual(p, g);
    const double r2 = phi_ode_residual(p, g);
    const DecayReport dec = decay_bound_check(p, 0.0, g, 3);
    csv.row({static_cast<double>(i), p.sigma, p.omega, p.c, r1, r2, dec.pass ? 1.0 : 0.0});
    ok = ok && r1 < 1e-8 && r2 < 1e-8 && dec.pass;
    rows.push_back({{"profile_ode_residual", r1},
                    {"phi_ode_residual", r2},
                    {"decay_pass", dec.pass},
                    {"decay_constants", dec.fitted_constant},
                    {"halfwidth_h", halfwidth_h(p)}});
  }
  x.result.report["solitons"] = rows;
  x.result.report["all_checks_passed"] = ok;
}

inline void run_evolve(Ctx& x) {
  const SpatialGrid g = grid_of(x.cfg, 4096, 40.0);
  const MultiSolitonConfig ms = solitons_of(x.cfg, x.root);
  const std::string scheme = x.cfg.str("evolution.scheme", "if-rk4");
  const double t0 = x.cfg.num("evolution.t_start", 0.0);
  const double t1 = x.cfg.num("evolution.t_end", 1.0);
  const long snaps = x.cfg.integer("evolution.snapshots", 21);
  const double dt = x.cfg.num("evolution.dt", 2.5e-4);
  const std::string dealias = x.cfg.str("evolution.dealias", "auto");
  const TimeGrid tg = make_time_grid(t0, t1, static_cast<int>(snaps - 1));
  std::vector<Scheme> schemes;
  if (scheme == "both")
    schemes = {Scheme::IntegratingFactorRK4, Scheme::SplitStepGauge};
  else
    schemes = {parse_scheme(scheme)};
  const ComplexField u0 = profile_sum(ms, t0, g);
  std::vector<EvolutionConfig> cfgs;
  for (Scheme s : schemes) {
    EvolutionConfig ec = default_evolution_config(ms.sigma, s);
    ec.dt = dt;
    if (dealias != "auto") ec.dealias = dealias == "on" || dealias == "true";
    cfgs.push_back(ec);
  }
  std::vector<Trajectory> runs(schemes.size());
  parallel_for(schemes.size(), [&](std::size_t i) { runs[i] = evolve(u0, tg, cfgs[i]); });
  json per = json::object();
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const Scheme s = schemes[i];
    const EvolutionConfig& ec = cfgs[i];
    const Trajectory& tr = runs[i];
    const RVec err = soliton_error_h1(tr, ms);
    const std::string tag = scheme_name(s);
    io::write_trajectory(x.path("trajectory_" + tag + ".bin"), tr, ms.sigma, ec.dt, tag);
    io::CsvWriter csv(x.path("summary_" + tag + ".csv"), {"t", "mass", "h1_error"});
    for (std::size_t i = 0; i < tr.times.size(); ++i) csv.row({tr.times[i], tr.mass_history[i], err[i]});
    per[tag] = {{"max_h1_error", max_of(err)},
                {"final_h1_error", err.back()},
                {"relative_mass_drift", std::abs(tr.mass_history.back() / tr.mass_history.front() - 1.0)},
                {"dealias", ec.dealias}};
  }
  x.result.report["schemes"] = per;
  if (runs.size() == 2) {
    RVec gap;
    for (std::size_t i = 0; i < runs[0].snapshots.size(); ++i) {
      CVec d(g.num_points);
      for (int m = 0; m < g.num_points; ++m) d[m] = runs[0].snapshots[i].values[m] - runs[1].snapshots[i].values[m];
      gap.push_back(spectral::hs_norm(d, g, 1));
    }
    x.result.report["cross_scheme_h1_gap"] = gap;
  }
}

inline void run_chi_scan(Ctx& x) {
  const SpatialGrid g = grid_of(x.cfg, 1024, 64.0);
  const MultiSolitonConfig ms = solitons_of(x.cfg, x.root);
  const TimeGrid tg = make_time_grid(x.cfg.num("scan.t_start", 0.0), x.cfg.num("scan.t_end", 4.0),
                                     static_cast<int>(x.cfg.integer("scan.num_steps", 80)));
  const ResidualScan scan = chi_decay_scan(ms, tg, g);
  const double vstar = relative_velocity_v_star(ms), lambda = vstar / 16.0;
  {
    io::CsvWriter csv(x.path("chi_scan.csv"), {"t", "h2_norm"});
    for (std::size_t i = 0; i < scan.times.size(); ++i) csv.row({scan.times[i], scan.h2_norms[i]});
    csv.row_strings({"fitted_rate", scan.rate_available ? io::fmt(scan.fitted_rate) : "nan"});
  }
  bool tail_ok = scan.envelope_onset_index >= 0;
  if (tail_ok)
    for (std::size_t i = static_cast<std::size_t>(scan.envelope_onset_index); i < scan.times.size(); ++i)
      tail_ok = tail_ok && scan.h2_norms[i] <= std::exp(-lambda * scan.times[i]);
  json& r = x.result.report;
  r["v_star"] = vstar;
  r["lambda"] = lambda;
  r["rate_available"] = scan.rate_available;
  r["fitted_rate"] = scan.rate_available ? json(scan.fitted_rate) : json(nullptr);
  r["fit_window"] = {scan.times[scan.fit_first], scan.times[scan.fit_last]};
  r["onset_time"] = scan.onset_index < scan.times.size() ? json(scan.times[scan.onset_index]) : json(nullptr);
  r["envelope_onset_time"] = scan.envelope_onset_index >= 0 ? json(scan.times[scan.envelope_onset_index]) : json(nullptr);
  r["rate_at_least_lambda"] = scan.rate_available && scan.fitted_rate >= lambda;
  r["tail_below_envelope"] = tail_ok;
}

}  // namespace detail

inline json condition_margin(const ExperimentSpec& spec, json* resolved = nullptr) {
  json root = spec.config;
  Config c(root);
  const SpatialGrid g = detail::grid_of(c, 16384, 64.0);
  const double sigma = c.num("sigma", 2.5);
  const RVec Ms = c.list("M_list", {10.0, 20.0, 40.0, 80.0});
  const RVec d = c.list("family.d", {-1.0, -2.0});
  const RVec h = c.list("family.h", {1.0, 1.0});
  RVec x0def(d.size(), 0.0);
  for (std::size_t j = 0; j < d.size(); ++j) x0def[j] = -30.0 * static_cast<double>(j);
  const RVec x0 = c.list("family.x0", x0def);
  const double cstar = c.num("c_star", 1.0);
  const TimeGrid horizon = make_time_grid(c.num("horizon.t_start", 0.0),
                                          c.num("horizon.t_start", 0.0) + c.num("horizon.span", 20.0),
                                          static_cast<int>(c.integer("horizon.snapshots", 41) - 1));
  json rows = json::array();
  RVec vs, lhs, fa, fb, fc, margins, reduced_bound;
  for (double M : Ms) {
    const MultiSolitonConfig cfg = remark_parameter_family(M, d, h, sigma, x0);
    const double v = relative_velocity_v_star(cfg);
    const ConditionFactors f = separation_condition_factors(cfg, horizon, g);
    const double margin = v / (cstar * f.lhs);
    // Closed-form upper estimate built from per-soliton bounds on |phi| alone.
    double sh = 0.0, sc = 0.0;
    for (const auto& sol : cfg.solitons) {
      const double hj = halfwidth_h(sol), cj = std::abs(sol.c);
      sh += std::pow(hj, 1.0 / sigma - 1.0);
      sc += std::pow(hj * hj / cj, 1.0 / (2.0 * sigma)) * (1.0 + cj);
    }
    const double reduced = (1.0 + sh) * (1.0 + sc);
    reduced_bound.push_back(reduced);
    vs.push_back(v);
    lhs.push_back(f.lhs);
    fa.push_back(f.factor_a);
    fb.push_back(f.factor_b);
    fc.push_back(f.factor_c);
    margins.push_back(margin);
    rows.push_back({{"M", M},
                    {"v_star", v},
                    {"lhs", f.lhs},
                    {"margin", margin},
                    {"sup_linf", f.sup_linf},
                    {"sup_h1", f.sup_h1},
                    {"sup_dx_linf", f.sup_dx_linf},
                    {"factor_a", f.factor_a},
                    {"factor_b", f.factor_b},
                    {"factor_c", f.factor_c},
                    {"reduced_bound", reduced}});
  }
  json out;
  out["rows"] = rows;
  out["c_star"] = cstar;
  if (Ms.size() >= 2) {
    const double target = 1.0 - 1.0 / (2.0 * sigma);
    const double el = detail::loglog_slope(Ms, lhs), ev = detail::loglog_slope(Ms, vs);
    out["lhs_exponent"] = el;
    out["lhs_exponent_target"] = target;
    out["v_star_exponent"] = ev;
    out["factor_exponents"] = {{"a", detail::loglog_slope(Ms, fa)},
                               {"b", detail::loglog_slope(Ms, fb)},
                               {"c", detail::loglog_slope(Ms, fc)}};
    out["reduced_bound_exponent"] = detail::loglog_slope(Ms, reduced_bound);
    bool increasing = true;
    for (std::size_t i = 1; i < margins.size(); ++i) increasing = increasing && margins[i] > margins[i - 1];
    out["lhs_exponent_ok"] = std::abs(el - target) <= 0.15;
    out["v_star_exponent_ok"] = std::abs(ev - 1.0) <= 0.05;
    out["margin_increasing"] = increasing;
    out["margin_exceeds_one"] = margins.back() > 1.0;
  }
  if (resolved) *resolved = root;
  return out;
}

namespace detail {

inline void run_condition_margin(Ctx& x) {
  json resolved;
  x.result.report = condition_margin(x.spec, &resolved);
  x.root = resolved;
  io::CsvWriter csv(x.path("condition.csv"),
                    {"M", "v_star", "lhs", "margin", "factor_a", "factor_b", "factor_c", "reduced_bound"});
  for (const auto& r : x.result.report["rows"])
    csv.row({r["M"].get<double>(), r["v_star"].get<double>(), r["lhs"].get<double>(), r["margin"].get<double>(),
             r["factor_a"].get<double>(), r["factor_b"].get<double>(), r["factor_c"].get<double>(),
             r["reduced_bound"].get<double>()});
}

struct GQCase {
  std::string input;
  double sigma;
  std::uint64_t seed;
  double residual;
};

inline std::vector<GQCase> gq_cases(Config& c, std::uint64_t seed0) {
  const SpatialGrid g = grid_of(c, 4096, 32.0);
  const RVec sigmas = c.list("sigmas", {1.0, 2.0, 2.5, 3.0});
  const long count = c.integer("count", 10);
  const long kcut = c.integer("k_cut", g.num_points / 64);
  const bool structured = c.flag("include_structured", true);
  std::vector<GQCase> out;
  for (double s : sigmas) {
    std::vector<GQCase> local(static_cast<std::size_t>(count));
    parallel_for(local.size(), [&](std::size_t i) {
      const std::uint64_t seed = seed0 + i;
      const ComplexField phi = random_band_limited_field(g, seed, static_cast<int>(kcut));
      local[i] = {"random", s, seed, gq_identity_residual(phi, s)};
    });
    out.insert(out.end(), local.begin(), local.end());
    if (structured) {
      SolitonParams p{1.0, 0.5, 0.0, 0.0, s};
      out.push_back({"soliton", s, 0, gq_identity_residual(evaluate_soliton(p, g).complex_profile, s)});
      MultiSolitonConfig two{{SolitonParams{1.0, 0.5, -6.0, 0.0, s}, SolitonParams{1.0, -0.5, 6.0, 0.3, s}}, s};
      const GaugePair w = to_gauge_pair(profile_sum(two, 0.0, g), s);
      out.push_back({"two-soliton", s, 0, gq_identity_residual(w.phi, s)});
    }
  }
  return out;
}

inline void run_gq(Ctx& x) {
  const auto cases = gq_cases(x.cfg, x.spec.seed);
  io::CsvWriter csv(x.path("gq_identity.csv"), {"input", "sigma", "seed", "residual"});
  json rows = json::array();
  double worst = 0.0;
  for (const auto& c : cases) {
    csv.row_strings({c.input, io::fmt(c.sigma), std::to_string(c.seed), io::fmt(c.residual)});
    rows.push_back({{"input", c.input}, {"sigma", c.sigma}, {"seed", c.seed}, {"residual", c.residual}});
    worst = std::max(worst, c.residual);
  }
  x.result.report["cases"] = rows;
  x.result.report["max_residual"] = worst;
  x.result.report["all_below_1e-9"] = worst < 1e-9;
}

struct PicardSetup {
  SpatialGrid grid;
  MultiSolitonConfig solitons;
  PicardConfig pcfg;
  double lambda = 0.0;
};

inline PicardSetup picard_setup(Config& c, json& root) {
  PicardSetup s;
  s.grid = grid_of(c, 1024, 64.0);
  s.solitons = solitons_of(c, root);
  const double lam_cfg = c.num("picard.lambda", 0.0);
  s.lambda = lam_cfg > 0.0 ? lam_cfg : decay_rate_lambda(s.solitons);
  s.pcfg.lambda_rate = s.lambda;
  json& t0node = c.node("picard.t0");
  if (t0node.is_null()) t0node = "auto";
  if (t0node.is_string()) {
    if (t0node.get<std::string>() != "auto") throw InvalidArgument("picard.t0 must be a number or \"auto\"");
    const double lo = c.num("picard.t0_search_start", 0.0), hi = c.num("picard.t0_search_end", 10.0),
                 step = c.num("picard.t0_search_step", 0.05);
    const double t0 = select_t0(s.solitons, s.grid, s.lambda, lo, hi, step);
    if (std::isnan(t0)) throw NumericalFailure("no T0 in the search window satisfies the onset rule");
    s.pcfg.t0 = t0;
    root["picard"]["t0_selected"] = t0;
  } else {
    s.pcfg.t0 = c.num("picard.t0", 0.0);
  }
  s.pcfg.t_max = s.pcfg.t0 + c.num("picard.span", 8.0 / s.lambda);
  s.pcfg.num_time_nodes = static_cast<int>(c.integer("picard.nodes", 200));
  s.pcfg.tolerance = c.num("picard.tolerance", 1e-6);
  s.pcfg.max_iterations = static_cast<int>(c.integer("picard.max_iterations", 30));
  const std::string nf = c.str("picard.n_form", "corrected");
  if (nf != "corrected" && nf != "extra-damped") throw InvalidArgument("picard.n_form must be corrected or extra-damped");
  s.pcfg.n_form = nf == "corrected" ? NSourceForm::Corrected : NSourceForm::ExtraDamped;
  return s;
}

inline json picard_json(const PicardReport& rep, const PicardSetup& s) {
  return {{"converged", rep.converged},
          {"reason", rep.reason},
          {"iterations", rep.diff_x_norm.size()},
          {"iterates_x_norm", rep.iterates_x_norm},
          {"diff_x_norm", rep.diff_x_norm},
          {"contraction_ratios", rep.contraction_ratios},
          {"final_x_norm", rep.iterates_x_norm.empty() ? 0.0 : rep.iterates_x_norm.back()},
          {"lambda", rep.lambda_rate},
          {"tail_bound", rep.tail_bound},
          {"t0", s.pcfg.t0},
          {"t_max", s.pcfg.t_max},
          {"nodes", s.pcfg.num_time_nodes},
          {"v_star", relative_velocity_v_star(s.solitons)}};
}

inline void write_picard_outputs(Ctx& x, const PicardReport& rep, const PicardSetup& s) {
  io::CsvWriter csv(x.path("iterations.csv"), {"iteration", "x_norm", "diff_x_norm", "contraction_ratio"});
  for (std::size_t i = 0; i < rep.diff_x_norm.size(); ++i)
    csv.row({static_cast<double>(i + 1), rep.iterates_x_norm[i], rep.diff_x_norm[i],
             i == 0 ? NAN : rep.contraction_ratios[i - 1]});
  const auto& eta = rep.final_eta;
  const RVec times = eta.time_grid.times();
  const io::SnapshotHeader hdr{static_cast<std::uint32_t>(s.grid.num_points), s.grid.length(), s.solitons.sigma,
                               eta.time_grid.step, "picard-eta"};
  io::write_snapshots(x.path("eta_phi.bin"), hdr, times, eta.first);
  io::write_snapshots(x.path("eta_psi.bin"), hdr, times, eta.second);
}

inline void run_picard(Ctx& x) {
  PicardSetup s = picard_setup(x.cfg, x.root);
  const PicardReport rep = solve_fixed_point(s.solitons, s.pcfg, s.grid);
  x.result.report["picard"] = picard_json(rep, s);
  write_picard_outputs(x, rep, s);
  if (!rep.converged) {
    x.result.exit_code = 3;
    x.result.status = "numerical-failure";
    x.result.report["reason"] = "non-convergence: " + rep.reason;
  }
}

inline void run_full_construct(Ctx& x) {
  PicardSetup s = picard_setup(x.cfg, x.root);
  auto [W, H] = profile_fields(s.solitons, s.pcfg, s.grid);
  const DuhamelOperator op(std::move(W), std::move(H), s.solitons.sigma);
  const PicardReport rep = solve_fixed_point(op, s.pcfg, s.lambda);
  json& r = x.result.report;
  r["picard"] = picard_json(rep, s);
  write_picard_outputs(x, rep, s);
  if (!rep.converged) {
    x.result.exit_code = 3;
    x.result.status = "numerical-failure";
    r["reason"] = "non-convergence: " + rep.reason;
    return;
  }
  const Reconstruction rec = reconstruct_solution(rep, s.solitons, s.grid);
  const RVec pair = pair_consistency_residual(rep, s.solitons, s.grid);

  // Coarser time grid (about twice the node spacing) for the refinement study.
  PicardSetup coarse = s;
  coarse.pcfg.num_time_nodes =
      static_cast<int>(x.cfg.integer("construct.coarse_nodes", (s.pcfg.num_time_nodes + 1) / 2));
  const PicardReport crep = solve_fixed_point(coarse.solitons, coarse.pcfg, coarse.grid);
  double coarse_pair = NAN;
  if (crep.converged) coarse_pair = max_of(pair_consistency_residual(crep, coarse.solitons, coarse.grid));
  const double fine_pair = max_of(pair);
  const double budget = rep.tail_bound + (std::isnan(coarse_pair) ? 0.0 : coarse_pair);

  // Independent pipeline: evolve u(T0) directly and compare at a later grid time.
  const double offset = x.cfg.num("construct.cross_check_offset", 1.0);
  const double dt = x.cfg.num("construct.cross_check_dt", 2.5e-4);
  const std::size_t idx = std::min<std::size_t>(
      rec.trajectory.times.size() - 1, static_cast<std::size_t>(std::lround(offset / rep.final_eta.time_grid.step)));
  EvolutionConfig ec = default_evolution_config(s.solitons.sigma, Scheme::IntegratingFactorRK4);
  ec.dt = dt;
  ec.dealias = x.cfg.flag("construct.cross_check_dealias", false);
  const auto& rt = rec.trajectory;
  const Trajectory direct = evolve(rt.snapshots.front(), make_time_grid(rt.times.front(), rt.times[idx], 1), ec);
  CVec diff(s.grid.num_points);
  for (int m = 0; m < s.grid.num_points; ++m) diff[m] = direct.snapshots.back().values[m] - rt.snapshots[idx].values[m];
  const double gap = spectral::hs_norm(diff, s.grid, 1);

  // Re-iteration from a perturbed fixed point.
  const double amp = x.cfg.num("construct.perturbation", 1e-3);
  SpaceTimeField start = rep.final_eta;
  for (std::size_t i = 0; i < start.num_nodes(); ++i) {
    const ComplexField n1 = random_localized_field(s.grid, x.spec.seed + 2 * i, 8.0, 32);
    const ComplexField n2 = random_localized_field(s.grid, x.spec.seed + 2 * i + 1, 8.0, 32);
    const double w = amp * std::exp(-s.lambda * (start.time_grid.time(static_cast<int>(i)) - s.pcfg.t0));
    for (int m = 0; m < s.grid.num_points; ++m) {
      start.first[i].values[m] += w * n1.values[m];
      start.second[i].values[m] += w * n2.values[m];
    }
  }
  const PicardReport prep = solve_fixed_point(op, s.pcfg, s.lambda, &start);
  const double drift = x_norm(axpy(prep.final_eta, -1.0, rep.final_eta), s.pcfg.t0, s.lambda);

  {
    io::CsvWriter csv(x.path("construction.csv"), {"t", "h1_error", "pair_residual", "mass"});
    for (std::size_t i = 0; i < rec.h1_error.size(); ++i)
      csv.row({rec.trajectory.times[i], rec.h1_error[i], pair[i], rec.trajectory.mass_history[i]});
  }
  io::write_trajectory(x.path("u.bin"), rec.trajectory, s.solitons.sigma, rep.final_eta.time_grid.step,
                       "picard-reconstruction");
  r["fitted_h1_rate"] = rec.rate_available ? json(rec.fitted_rate) : json(nullptr);
  r["fit_window"] = {rec.trajectory.times[rec.fit_first], rec.trajectory.times[rec.fit_last]};
  r["rate_threshold"] = 0.9 * s.lambda;
  r["rate_ok"] = rec.rate_available && rec.fitted_rate >= 0.9 * s.lambda;
  r["pair_residual_max"] = fine_pair;
  r["pair_residual_coarse_max"] = coarse_pair;
  r["pair_residual_budget"] = budget;
  r["pair_residual_within_budget"] = fine_pair <= budget;
  r["pair_residual_refinement_ratio"] = coarse_pair / fine_pair;
  r["pair_residual_decreases"] = fine_pair < coarse_pair;
  r["cross_pipeline_time"] = rec.trajectory.times[idx];
  r["cross_pipeline_h1_gap"] = gap;
  r["cross_pipeline_ok"] = gap < 5e-3;
  r["perturbed_restart_converged"] = prep.converged;
  r["perturbed_restart_x_distance"] = drift;
  r["perturbed_restart_ok"] = prep.converged && drift <= 10.0 * s.pcfg.tolerance;
}

}  // namespace detail

// Runs one experiment, writing every artifact plus MANIFEST.json into spec.output_dir.
inline RunResult run_experiment(const ExperimentSpec& spec) {
  RunResult result;
  const auto violations = validate_spec(spec);
  std::filesystem::create_directories(spec.output_dir);
  json root = spec.config;
  if (!violations.empty()) {
    result.exit_code = 2;
    result.status = "validation-failure";
    result.report["violations"] = violations;
    detail::write_json((std::filesystem::path(spec.output_dir) / "report.json").string(), result.report);
    result.outputs.push_back("report.json");
    detail::write_manifest(spec, root, result, kind_name(spec.kind));
    return result;
  }
  result.status = "ok";
  detail::Ctx ctx{spec, root, Config(root), std::filesystem::path(spec.output_dir), result};
  try {
    switch (spec.kind) {
      case Kind::SolitonCheck: detail::run_soliton_check(ctx); break;
      case Kind::Evolve: detail::run_evolve(ctx); break;
      case Kind::ChiScan: detail::run_chi_scan(ctx); break;
      case Kind::ConditionMargin: detail::run_condition_margin(ctx); break;
      case Kind::GQIdentity: detail::run_gq(ctx); break;
      case Kind::Picard: detail::run_picard(ctx); break;
      case Kind::FullConstruct: detail::run_full_construct(ctx); break;
    }
  } catch (const InstabilityError& e) {
    result.exit_code = 3;
    result.status = "numerical-failure";
    result.report["reason"] = std::string("instability: ") + e.what();
    result.report["failure_time"] = e.time;
  } catch (const NumericalFailure& e) {
    result.exit_code = 3;
    result.status = "numerical-failure";
    result.report["reason"] = e.what();
  } catch (const std::invalid_argument& e) {
    result.exit_code = 2;
    result.status = "validation-failure";
    result.report["violations"] = json::array({e.what()});
  }
  result.report["status"] = result.status;
  result.report["name"] = spec.name;
  result.report["kind"] = kind_name(spec.kind);
  detail::write_json((std::filesystem::path(spec.output_dir) / "report.json").string(), result.report);
  result.outputs.push_back("report.json");
  detail::write_manifest(spec, root, result, kind_name(spec.kind));
  return result;
}

}  // namespace gdnls::harness
