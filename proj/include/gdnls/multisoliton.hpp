#pragma once

#include <numeric>

#include "gdnls/soliton.hpp"

namespace gdnls {

struct MultiSolitonConfig {
  std::vector<SolitonParams> solitons;
  double sigma = 1.0;

  std::size_t size() const { return solitons.size(); }
};

inline void validate(const MultiSolitonConfig& cfg) {
  if (cfg.solitons.empty()) throw InvalidArgument("configuration needs at least one soliton");
  for (const auto& s : cfg.solitons) {
    validate(s);
    if (s.sigma != cfg.sigma) throw InvalidArgument("all solitons must share sigma");
  }
  for (std::size_t j = 0; j < cfg.size(); ++j)
    for (std::size_t k = j + 1; k < cfg.size(); ++k)
      if (std::abs(cfg.solitons[j].c - cfg.solitons[k].c) <= 1e-12)
        throw InvalidArgument("soliton velocities must be pairwise distinct");
}

inline std::vector<CVec> profile_parts(const MultiSolitonConfig& cfg, double t, const SpatialGrid& g) {
  validate(cfg);
  std::vector<CVec> parts;
  parts.reserve(cfg.size());
  for (const auto& s : cfg.solitons) parts.push_back(soliton_field(s, t, g).values);
  return parts;
}

inline ComplexField profile_sum(const MultiSolitonConfig& cfg, double t, const SpatialGrid& g) {
  CVec r(g.num_points, cplx(0.0, 0.0));
  for (const auto& part : profile_parts(cfg, t, g))
    for (int m = 0; m < g.num_points; ++m) r[m] += part[m];
  return ComplexField(g, std::move(r), t);
}

// Minimum over ordered pairs j != k of h_j |c_j - c_k|.
inline double relative_velocity_v_star(const MultiSolitonConfig& cfg) {
  validate(cfg);
  if (cfg.size() < 2) throw InvalidArgument("v* is undefined for a single soliton");
  double best = INFINITY;
  for (std::size_t j = 0; j < cfg.size(); ++j)
    for (std::size_t k = 0; k < cfg.size(); ++k)
      if (j != k)
        best = std::min(best, halfwidth_h(cfg.solitons[j]) * std::abs(cfg.solitons[j].c - cfg.solitons[k].c));
  return best;
}

inline double decay_rate_lambda(const MultiSolitonConfig& cfg) { return relative_velocity_v_star(cfg) / 16.0; }

// chi = -i |R|^{2s} R_x + i sum_j |R_j|^{2s} (R_j)_x
inline ComplexField interaction_residual_chi(const MultiSolitonConfig& cfg, double t, const SpatialGrid& g) {
  const auto parts = profile_parts(cfg, t, g);
  const double s = cfg.sigma;
  const int n = g.num_points;
  CVec r(n, cplx(0.0, 0.0)), sum_j(n, cplx(0.0, 0.0));
  if (parts.size() == 1) return ComplexField(g, std::move(sum_j), t);
  for (const auto& part : parts) {
    const CVec d = spectral::derivative(part, g, 1);
    for (int m = 0; m < n; ++m) {
      r[m] += part[m];
      sum_j[m] += abs2_pow(part[m], s) * d[m];
    }
  }
  const CVec dr = spectral::derivative(r, g, 1);
  const cplx I(0.0, 1.0);
  CVec chi(n);
  for (int m = 0; m < n; ++m) chi[m] = -I * abs2_pow(r[m], s) * dr[m] + I * sum_j[m];
  return ComplexField(g, std::move(chi), t);
}

struct ResidualScan {
  RVec times;
  RVec h2_norms;
  double fitted_rate = NAN;
  bool rate_available = false;
  std::size_t fit_first = 0;
  std::size_t fit_last = 0;  // inclusive
  std::size_t onset_index = 0;
  long envelope_onset_index = -1;  // first sample with norm <= e^{-lambda t}
};

// Least-squares slope of log(y) against t over [first, last].
inline double log_linear_slope(const RVec& t, const RVec& y, std::size_t first, std::size_t last) {
  const std::size_t n = last - first + 1;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = first; i <= last; ++i) {
    const double ly = std::log(y[i]);
    st += t[i];
    sy += ly;
    stt += t[i] * t[i];
    sty += t[i] * ly;
  }
  const double denom = n * stt - st * st;
  return (n * sty - st * sy) / denom;
}

inline ResidualScan chi_decay_scan(const MultiSolitonConfig& cfg, const TimeGrid& times, const SpatialGrid& g) {
  validate(cfg);
  ResidualScan scan;
  scan.times = times.times();
  for (double t : scan.times)
    scan.h2_norms.push_back(sobolev_norm(interaction_residual_chi(cfg, t, g), NormKind::H2()));
  if (cfg.size() < 2) return scan;

  const double lambda = decay_rate_lambda(cfg);
  const std::size_t n = scan.times.size();
  for (std::size_t i = 0; i < n; ++i)
    if (scan.h2_norms[i] <= std::exp(-lambda * scan.times[i])) {
      scan.envelope_onset_index = static_cast<long>(i);
      break;
    }

  scan.onset_index = n;
  for (std::size_t i = 0; i < n; ++i)
    if (scan.h2_norms[i] < 0.1 * scan.h2_norms[0]) {
      scan.onset_index = i;
      break;
    }
  std::vector<std::size_t> usable;
  for (std::size_t i = scan.onset_index; i < n; ++i)
    if (scan.h2_norms[i] > 1e-13) usable.push_back(i);
  if (usable.size() < 4) return scan;
  const std::vector<std::size_t> tail(usable.begin() + usable.size() / 2, usable.end());
  scan.fit_first = tail.front();
  scan.fit_last = tail.back();
  RVec tt, yy;
  for (auto i : tail) {
    tt.push_back(scan.times[i]);
    yy.push_back(scan.h2_norms[i]);
  }
  scan.fitted_rate = -log_linear_slope(tt, yy, 0, tt.size() - 1);
  scan.rate_available = true;
  return scan;
}

struct ProfileNorms {
  double linf = 0.0;
  double h1 = 0.0;
  double dx_linf = 0.0;
};

// Norms of R at time t. Solitons are grouped into clusters of nearby centers; each
// cluster is evaluated on the box recentred at its midpoint, and clusters are
// combined as disjoint pieces (max for sup norms, squared sum for H^1).
inline ProfileNorms profile_norms(const MultiSolitonConfig& cfg, double t, const SpatialGrid& g) {
  validate(cfg);
  std::vector<std::size_t> order(cfg.size());
  std::iota(order.begin(), order.end(), 0);
  auto center = [&](std::size_t j) { return cfg.solitons[j].x0 + cfg.solitons[j].c * t; };
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return center(a) < center(b); });
  std::vector<std::vector<std::size_t>> clusters{{order[0]}};
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (center(order[i]) - center(order[i - 1]) > g.half_length) clusters.emplace_back();
    clusters.back().push_back(order[i]);
  }
  ProfileNorms out;
  double h1sq = 0.0;
  for (const auto& cl : clusters) {
    const double lo = center(cl.front()), hi = center(cl.back());
    if (hi - lo > g.half_length) throw InvalidArgument("soliton cluster does not fit the box");
    const double mid = 0.5 * (lo + hi);
    MultiSolitonConfig sub{{}, cfg.sigma};
    for (auto j : cl) {
      auto s = cfg.solitons[j];
      s.x0 -= mid;
      sub.solitons.push_back(s);
    }
    const ComplexField r = profile_sum(sub, t, g);
    const CVec d = spectral::derivative(r.values, g, 1);
    out.linf = std::max(out.linf, spectral::lr_norm(r.values, g, INFINITY));
    out.dx_linf = std::max(out.dx_linf, spectral::lr_norm(d, g, INFINITY));
    const double h1 = spectral::hs_norm(r.values, g, 1);
    h1sq += h1 * h1;
  }
  out.h1 = std::sqrt(h1sq);
  return out;
}

struct ConditionFactors {
  double sup_linf = 0.0;
  double sup_h1 = 0.0;
  double sup_dx_linf = 0.0;
  double factor_a = 1.0;  // 1 + |R|^{2(s-1)}
  double factor_b = 1.0;  // 1 + |R|_{H1}^2
  double factor_c = 1.0;  // 1 + |R_x| + |R|^{2s+1}
  double lhs = 1.0;
};

inline ConditionFactors separation_condition_factors(const MultiSolitonConfig& cfg, const TimeGrid& horizon,
                                                     const SpatialGrid& g) {
  ConditionFactors f;
  for (double t : horizon.times()) {
    const auto n = profile_norms(cfg, t, g);
    f.sup_linf = std::max(f.sup_linf, n.linf);
    f.sup_h1 = std::max(f.sup_h1, n.h1);
    f.sup_dx_linf = std::max(f.sup_dx_linf, n.dx_linf);
  }
  const double s = cfg.sigma;
  f.factor_a = 1.0 + std::pow(f.sup_linf, 2.0 * (s - 1.0));
  f.factor_b = 1.0 + f.sup_h1 * f.sup_h1;
  f.factor_c = 1.0 + f.sup_dx_linf + std::pow(f.sup_linf, 2.0 * s + 1.0);
  f.lhs = f.factor_a * f.factor_b * f.factor_c;
  return f;
}

inline double separation_condition_lhs(const MultiSolitonConfig& cfg, const TimeGrid& horizon, const SpatialGrid& g) {
  return separation_condition_factors(cfg, horizon, g).lhs;
}

// (c_j, omega_j) = (M d_j, (h_j^2 + M^2 d_j^2)/4)
inline MultiSolitonConfig remark_parameter_family(double M, const RVec& d, const RVec& h, double sigma = 2.5,
                                                  const RVec& x0 = {}) {
  if (!(M > 0.0)) throw InvalidArgument("M must be positive");
  if (d.size() != h.size() || d.empty()) throw InvalidArgument("d and h must be non-empty and of equal length");
  if (!x0.empty() && x0.size() != d.size()) throw InvalidArgument("x0 length must match d");
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (!(d[j] < 0.0)) throw InvalidArgument("d_j must be negative");
    if (!(h[j] > 0.0)) throw InvalidArgument("h_j must be positive");
    for (std::size_t k = 0; k < j; ++k)
      if (d[j] == d[k]) throw InvalidArgument("d_j must be pairwise distinct");
  }
  MultiSolitonConfig cfg{{}, sigma};
  for (std::size_t j = 0; j < d.size(); ++j) {
    SolitonParams s;
    s.c = M * d[j];
    s.omega = 0.25 * (h[j] * h[j] + s.c * s.c);
    s.x0 = x0.empty() ? 0.0 : x0[j];
    s.sigma = sigma;
    cfg.solitons.push_back(s);
  }
  validate(cfg);
  return cfg;
}

}  // namespace gdnls
