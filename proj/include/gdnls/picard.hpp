#pragma once

#include "gdnls/evolution.hpp"
#include "gdnls/parallel.hpp"

namespace gdnls {

struct SpaceTimeField {
  TimeGrid time_grid;
  SpatialGrid grid;
  std::vector<ComplexField> first;
  std::vector<ComplexField> second;

  static SpaceTimeField zeros(const TimeGrid& tg, const SpatialGrid& g) {
    SpaceTimeField f{tg, g, {}, {}};
    for (int i = 0; i < tg.num_nodes(); ++i) {
      f.first.push_back(ComplexField::zeros(g, tg.time(i)));
      f.second.push_back(ComplexField::zeros(g, tg.time(i)));
    }
    return f;
  }
  std::size_t num_nodes() const { return first.size(); }
};

namespace picard_detail {

inline void require_aligned(const SpaceTimeField& a, const SpaceTimeField& b) {
  require_same_grid(a.grid, b.grid);
  if (a.num_nodes() != b.num_nodes() || a.time_grid.t_start != b.time_grid.t_start ||
      a.time_grid.t_end != b.time_grid.t_end)
    throw InvalidArgument("space-time fields live on different time grids");
}

}  // namespace picard_detail

// a + s * b
inline SpaceTimeField axpy(const SpaceTimeField& a, double s, const SpaceTimeField& b) {
  picard_detail::require_aligned(a, b);
  SpaceTimeField out = a;
  for (std::size_t i = 0; i < a.num_nodes(); ++i)
    for (std::size_t m = 0; m < a.first[i].size(); ++m) {
      out.first[i][m] += s * b.first[i][m];
      out.second[i][m] += s * b.second[i][m];
    }
  return out;
}

inline SpaceTimeField scaled(const SpaceTimeField& a, double s) {
  SpaceTimeField out = a;
  for (std::size_t i = 0; i < a.num_nodes(); ++i)
    for (std::size_t m = 0; m < a.first[i].size(); ++m) {
      out.first[i][m] *= s;
      out.second[i][m] *= s;
    }
  return out;
}

// sup over grid times t >= from_time of e^{lambda t} (S(eta; [t, t_max]) + S(eta_x; [t, t_max])),
// summed over both components; S is the max over the admissible pairs.
inline double x_norm(const SpaceTimeField& eta, double from_time, double lambda) {
  const std::size_t nt = eta.num_nodes();
  if (nt == 0) return 0.0;
  const auto& g = eta.grid;
  const double dt = eta.time_grid.step;
  const auto& pairs = admissible_pairs();
  RVec total(nt, 0.0);
  for (int comp = 0; comp < 2; ++comp) {
    const auto& snaps = comp == 0 ? eta.first : eta.second;
    // spatial[d][p][i]: derivative order d, pair p, time i
    std::vector<std::vector<RVec>> spatial(2, std::vector<RVec>(pairs.size(), RVec(nt)));
    parallel_for(nt, [&](std::size_t i) {
      const CVec d = spectral::derivative(snaps[i].values, g, 1);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        spatial[0][p][i] = spectral::lr_norm(snaps[i].values, g, pairs[p].r);
        spatial[1][p][i] = spectral::lr_norm(d, g, pairs[p].r);
      }
    });
    for (int d = 0; d < 2; ++d) {
      RVec best(nt, 0.0);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const RVec s = spectral::suffix_time_norms(spatial[d][p], dt, pairs[p].q);
        for (std::size_t i = 0; i < nt; ++i) best[i] = std::max(best[i], s[i]);
      }
      for (std::size_t i = 0; i < nt; ++i) total[i] += best[i];
    }
  }
  double out = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    const double t = eta.time_grid.time(static_cast<int>(i));
    if (t < from_time - 1e-12 * (1.0 + std::abs(from_time))) continue;
    out = std::max(out, std::exp(lambda * t) * total[i]);
  }
  return out;
}

// Phi(eta)(t_i) = i * trapezoid over s in [t_i, t_max] of S(t_i - s)[f(W + eta) - f(W) + H](s).
// f(W) is cached; the quadrature runs as a backward recursion in Fourier space.
class DuhamelOperator {
 public:
  DuhamelOperator(SpaceTimeField W, SpaceTimeField H, double sigma)
      : W_(std::move(W)), H_(std::move(H)), sigma_(sigma) {
    picard_detail::require_aligned(W_, H_);
    const std::size_t nt = W_.num_nodes();
    base_first_.resize(nt);
    base_second_.resize(nt);
    parallel_for(nt, [&](std::size_t i) {
      const auto nl = nonlinearities(W_.first[i].values, W_.second[i].values, W_.grid, sigma_);
      CVec a(nl.P.size()), b(nl.Q.size());
      for (std::size_t m = 0; m < a.size(); ++m) {
        a[m] = H_.first[i][m] - nl.P[m];
        b[m] = H_.second[i][m] - nl.Q[m];
      }
      base_first_[i] = std::move(a);
      base_second_[i] = std::move(b);
    });
    const RVec k = wavenumbers(W_.grid);
    back_.resize(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) back_[j] = std::polar(1.0, k[j] * k[j] * W_.time_grid.step);
  }

  const SpaceTimeField& W() const { return W_; }
  const SpaceTimeField& H() const { return H_; }
  double sigma() const { return sigma_; }

  SpaceTimeField apply(const SpaceTimeField& eta) const {
    picard_detail::require_aligned(eta, W_);
    const std::size_t nt = W_.num_nodes();
    const std::size_t n = static_cast<std::size_t>(W_.grid.num_points);
    std::vector<CVec> f1(nt), f2(nt);
    parallel_for(nt, [&](std::size_t i) {
      CVec phi(n), psi(n);
      for (std::size_t m = 0; m < n; ++m) {
        phi[m] = W_.first[i][m] + eta.first[i][m];
        psi[m] = W_.second[i][m] + eta.second[i][m];
      }
      const auto nl = nonlinearities(phi, psi, W_.grid, sigma_);
      CVec a(n), b(n);
      for (std::size_t m = 0; m < n; ++m) {
        a[m] = nl.P[m] + base_first_[i][m];
        b[m] = nl.Q[m] + base_second_[i][m];
      }
      f1[i] = fft::forward(a);
      f2[i] = fft::forward(b);
    });
    SpaceTimeField out = SpaceTimeField::zeros(W_.time_grid, W_.grid);
    const double half = 0.5 * W_.time_grid.step;
    const cplx I(0.0, 1.0);
    for (int comp = 0; comp < 2; ++comp) {
      const auto& F = comp == 0 ? f1 : f2;
      auto& dst = comp == 0 ? out.first : out.second;
      CVec acc(n, cplx(0.0, 0.0)), tmp(n);
      std::vector<CVec> hats(nt);
      hats[nt - 1] = acc;
      for (std::size_t i = nt - 1; i-- > 0;) {
        for (std::size_t j = 0; j < n; ++j) acc[j] = back_[j] * (acc[j] + half * F[i + 1][j]) + half * F[i][j];
        hats[i] = acc;
      }
      parallel_for(nt, [&](std::size_t i) {
        CVec v = fft::inverse(hats[i]);
        for (auto& z : v) z *= I;
        dst[i].values = std::move(v);
      });
    }
    return out;
  }

 private:
  SpaceTimeField W_, H_;
  double sigma_;
  std::vector<CVec> base_first_, base_second_;
  CVec back_;
};

inline SpaceTimeField duhamel_map(const SpaceTimeField& eta, const SpaceTimeField& W, const SpaceTimeField& H,
                                  double sigma) {
  return DuhamelOperator(W, H, sigma).apply(eta);
}

inline double contraction_ratio(const SpaceTimeField& a, const SpaceTimeField& b, const DuhamelOperator& op,
                                double lambda) {
  const double from = a.time_grid.t_start;
  const double den = x_norm(axpy(a, -1.0, b), from, lambda);
  if (den < 1e-15) return 0.0;
  return x_norm(axpy(op.apply(a), -1.0, op.apply(b)), from, lambda) / den;
}

inline double contraction_ratio(const SpaceTimeField& a, const SpaceTimeField& b, const SpaceTimeField& W,
                                const SpaceTimeField& H, double sigma, double lambda) {
  return contraction_ratio(a, b, DuhamelOperator(W, H, sigma), lambda);
}

struct PicardConfig {
  double t0 = 0.0;
  double t_max = 1.0;
  int num_time_nodes = 200;
  double lambda_rate = 0.0;  // <= 0 selects v*/16
  int max_iterations = 30;
  double tolerance = 1e-6;
  NSourceForm n_form = NSourceForm::Corrected;
  bool zero_source = false;  // test hook: H forced to 0
};

inline void validate(const PicardConfig& p) {
  if (!(p.t_max > p.t0)) throw InvalidArgument("t_max must exceed t0");
  if (!(p.tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (p.num_time_nodes < 2) throw InvalidArgument("need at least two time nodes");
  if (p.max_iterations < 1) throw InvalidArgument("need at least one iteration");
}

inline TimeGrid picard_time_grid(const PicardConfig& p) { return make_time_grid(p.t0, p.t_max, p.num_time_nodes - 1); }

inline double resolved_lambda(const MultiSolitonConfig& cfg, const PicardConfig& p) {
  return p.lambda_rate > 0.0 ? p.lambda_rate : decay_rate_lambda(cfg);
}

// W = (h, k) and H = -e^{-lambda t}(m, n), the right-hand side of the perturbation system.
inline std::pair<SpaceTimeField, SpaceTimeField> profile_fields(const MultiSolitonConfig& cfg, const PicardConfig& p,
                                                                const SpatialGrid& g) {
  const TimeGrid tg = picard_time_grid(p);
  const double lambda = resolved_lambda(cfg, p);
  SpaceTimeField W = SpaceTimeField::zeros(tg, g), H = SpaceTimeField::zeros(tg, g);
  parallel_for(static_cast<std::size_t>(tg.num_nodes()), [&](std::size_t i) {
    const double t = tg.time(static_cast<int>(i));
    const GaugePair w = profile_pair_W(cfg, t, g);
    W.first[i] = w.phi;
    W.second[i] = w.psi;
    if (p.zero_source) return;
    const ProfileForcing f = profile_forcing(cfg, t, g);
    const double extra = p.n_form == NSourceForm::ExtraDamped ? std::exp(-lambda * t) : 1.0;
    for (std::size_t m = 0; m < f.fm.size(); ++m) {
      H.first[i][m] = -f.fm[m];
      H.second[i][m] = -extra * f.fn[m];
    }
  });
  return {std::move(W), std::move(H)};
}

struct PicardReport {
  RVec iterates_x_norm;
  RVec diff_x_norm;
  RVec contraction_ratios;  // diff_{k+1} / diff_k
  bool converged = false;
  std::string reason;
  SpaceTimeField final_eta;
  double lambda_rate = 0.0;
  double tail_bound = 0.0;  // e^{-lambda t_max} / lambda
  double sigma = 1.0;
};

inline PicardReport solve_fixed_point(const DuhamelOperator& op, const PicardConfig& p, double lambda,
                                      const SpaceTimeField* initial = nullptr) {
  validate(p);
  PicardReport rep;
  rep.lambda_rate = lambda;
  rep.tail_bound = std::exp(-lambda * p.t_max) / lambda;
  rep.sigma = op.sigma();
  SpaceTimeField eta = initial ? *initial : SpaceTimeField::zeros(op.W().time_grid, op.W().grid);
  const double from = p.t0;
  rep.reason = "max-iterations";
  for (int it = 0; it < p.max_iterations; ++it) {
    SpaceTimeField next = op.apply(eta);
    for (const auto& f : next.first)
      if (!all_finite(f)) {
        rep.reason = "non-finite iterate";
        rep.final_eta = std::move(eta);
        return rep;
      }
    const double diff = x_norm(axpy(next, -1.0, eta), from, lambda);
    rep.iterates_x_norm.push_back(x_norm(next, from, lambda));
    if (!rep.diff_x_norm.empty() && rep.diff_x_norm.back() > 0.0)
      rep.contraction_ratios.push_back(diff / rep.diff_x_norm.back());
    rep.diff_x_norm.push_back(diff);
    eta = std::move(next);
    if (diff <= p.tolerance) {
      if (rep.iterates_x_norm.back() <= 1.0) {
        rep.converged = true;
        rep.reason = "converged";
      } else {
        rep.reason = "fixed point outside the unit ball";
      }
      break;
    }
  }
  rep.final_eta = std::move(eta);
  return rep;
}

inline PicardReport solve_fixed_point(const MultiSolitonConfig& cfg, const PicardConfig& p, const SpatialGrid& g,
                                      const SpaceTimeField* initial = nullptr) {
  validate(cfg);
  validate(p);
  if (cfg.size() < 2) throw InvalidArgument("the fixed-point construction needs at least two solitons");
  auto [W, H] = profile_fields(cfg, p, g);
  const DuhamelOperator op(std::move(W), std::move(H), cfg.sigma);
  return solve_fixed_point(op, p, resolved_lambda(cfg, p), initial);
}

struct Reconstruction {
  Trajectory trajectory;
  RVec h1_error;
  double fitted_rate = NAN;
  bool rate_available = false;
  std::size_t fit_first = 0;
  std::size_t fit_last = 0;
};

// Fit window: the first half of the time grid, where the truncation at t_max
// has not yet pinned the perturbation to zero.
inline Reconstruction reconstruct_solution(const PicardReport& rep, const MultiSolitonConfig& cfg,
                                           const SpatialGrid& g) {
  if (!rep.converged) throw InvalidState("reconstruction needs a converged report");
  const auto& eta = rep.final_eta;
  const std::size_t nt = eta.num_nodes();
  Reconstruction out;
  out.trajectory.times.resize(nt);
  out.trajectory.snapshots.resize(nt);
  out.trajectory.mass_history.resize(nt);
  out.h1_error.resize(nt);
  parallel_for(nt, [&](std::size_t i) {
    const double t = eta.time_grid.time(static_cast<int>(i));
    const ComplexField R = profile_sum(cfg, t, g);
    const GaugePair w = to_gauge_pair(R, cfg.sigma);
    CVec phi(R.size());
    for (std::size_t m = 0; m < phi.size(); ++m) phi[m] = eta.first[i][m] + w.phi[m];
    ComplexField u = from_gauge_pair(ComplexField(g, std::move(phi), t), cfg.sigma);
    CVec d(u.size());
    for (std::size_t m = 0; m < d.size(); ++m) d[m] = u[m] - R[m];
    out.h1_error[i] = spectral::hs_norm(d, g, 1);
    out.trajectory.times[i] = t;
    out.trajectory.mass_history[i] = mass(u);
    out.trajectory.snapshots[i] = std::move(u);
  });
  RVec tt, yy;
  std::size_t first = nt, last = 0;
  for (std::size_t i = 0; i < nt / 2; ++i)
    if (out.h1_error[i] > 0.0) {
      tt.push_back(out.trajectory.times[i]);
      yy.push_back(out.h1_error[i]);
      first = std::min(first, i);
      last = i;
    }
  if (tt.size() >= 3) {
    out.fitted_rate = -log_linear_slope(tt, yy, 0, tt.size() - 1);
    out.rate_available = true;
    out.fit_first = first;
    out.fit_last = last;
  }
  return out;
}

// Per-time L^2 norm of psi~ - phi~_x + (i/2)(|phi~ + h|^{2s}(phi~ + h) - |h|^{2s} h).
inline RVec pair_consistency_residual(const PicardReport& rep, const MultiSolitonConfig& cfg, const SpatialGrid& g) {
  if (!rep.converged) throw InvalidState("pair consistency needs a converged report");
  const auto& eta = rep.final_eta;
  const std::size_t nt = eta.num_nodes();
  RVec out(nt);
  const cplx I(0.0, 1.0);
  const double s = cfg.sigma;
  parallel_for(nt, [&](std::size_t i) {
    const double t = eta.time_grid.time(static_cast<int>(i));
    const GaugePair w = profile_pair_W(cfg, t, g);
    const CVec d = spectral::derivative(eta.first[i].values, g, 1);
    CVec r(d.size());
    for (std::size_t m = 0; m < d.size(); ++m) {
      const cplx h = w.phi[m], phi = eta.first[i][m] + h;
      r[m] = eta.second[i][m] - d[m] + 0.5 * I * (abs2_pow(phi, s) * phi - abs2_pow(h, s) * h);
    }
    out[i] = spectral::lr_norm(r, g, 2.0);
  });
  return out;
}

// Smallest sample time with ||chi||_{H^2} <= e^{-lambda t}; NaN when none qualifies.
inline double select_t0(const MultiSolitonConfig& cfg, const SpatialGrid& g, double lambda, double t_lo, double t_hi,
                        double dt) {
  const long n = static_cast<long>(std::floor((t_hi - t_lo) / dt + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double t = t_lo + static_cast<double>(i) * dt;
    if (sobolev_norm(interaction_residual_chi(cfg, t, g), NormKind::H2()) <= std::exp(-lambda * t)) return t;
  }
  return NAN;
}

// Bisection for the smallest lambda in [lo, hi] whose run converges, assuming
// convergence is monotone in lambda on that bracket. Returns NaN if hi fails.
inline double empirical_lambda_star(const MultiSolitonConfig& cfg, PicardConfig p, const SpatialGrid& g, double lo,
                                    double hi, int steps) {
  auto ok = [&](double lam) {
    p.lambda_rate = lam;
    return solve_fixed_point(cfg, p, g).converged;
  };
  if (!ok(hi)) return NAN;
  if (ok(lo)) return lo;
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace gdnls
