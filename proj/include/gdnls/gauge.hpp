#pragma once

#include <utility>

#include "gdnls/multisoliton.hpp"

namespace gdnls {

struct GaugePair {
  ComplexField phi;
  ComplexField psi;
  double time = 0.0;
};

inline RVec phase_weight(const ComplexField& u, double sigma, QuadratureFlag* flag = nullptr) {
  RVec w(u.size());
  for (std::size_t m = 0; m < u.size(); ++m) w[m] = abs2_pow(u[m], sigma);
  RVec lam = spectral::cumulative_real(w, u.grid, flag);
  for (auto& x : lam) x *= 0.5;
  return lam;
}

inline GaugePair to_gauge_pair(const ComplexField& u, double sigma, const ComplexField* du = nullptr) {
  const RVec lam = phase_weight(u, sigma);
  const CVec dx = du ? du->values : spectral::derivative(u.values, u.grid, 1);
  if (du) require_same_grid(u.grid, du->grid);
  CVec phi(u.size()), psi(u.size());
  for (std::size_t m = 0; m < u.size(); ++m) {
    const cplx e = std::polar(1.0, lam[m]);
    phi[m] = e * u[m];
    psi[m] = e * dx[m];
  }
  return {ComplexField(u.grid, std::move(phi), u.time), ComplexField(u.grid, std::move(psi), u.time), u.time};
}

inline ComplexField from_gauge_pair(const ComplexField& phi, double sigma) {
  const RVec lam = phase_weight(phi, sigma);
  CVec u(phi.size());
  for (std::size_t m = 0; m < phi.size(); ++m) u[m] = std::polar(1.0, -lam[m]) * phi[m];
  return ComplexField(phi.grid, std::move(u), phi.time);
}

// max |psi - phi_x + (i/2)|phi|^{2s} phi| / (1 + max |psi|)
inline double pair_constraint_residual(const GaugePair& pair, double sigma) {
  const CVec d = spectral::derivative(pair.phi.values, pair.phi.grid, 1);
  const cplx I(0.0, 1.0);
  double worst = 0.0, scale = 0.0;
  for (std::size_t m = 0; m < d.size(); ++m) {
    const cplx r = pair.psi[m] - d[m] + 0.5 * I * abs2_pow(pair.phi[m], sigma) * pair.phi[m];
    worst = std::max(worst, std::abs(r));
    scale = std::max(scale, std::abs(pair.psi[m]));
  }
  return worst / (1.0 + scale);
}

struct NonlinearTerms {
  CVec P;
  CVec Q;
  RVec integral;  // int_{-L/2}^x |phi|^{2(s-2)} Im(psi^2 conj(phi)^2), shared by P and Q
};

inline RVec gauge_integral(const CVec& phi, const CVec& psi, const SpatialGrid& g, double sigma,
                           QuadratureFlag* flag = nullptr) {
  RVec w(phi.size());
  for (std::size_t m = 0; m < phi.size(); ++m) {
    const cplx pc = std::conj(phi[m]);
    w[m] = guarded_abs_pow(phi[m], 2.0 * (sigma - 2.0)) * std::imag(psi[m] * psi[m] * pc * pc);
  }
  return spectral::cumulative_real(w, g, flag);
}

// With sigma = 1 the integral carries a zero coefficient and is left as zeros.
inline NonlinearTerms nonlinearities(const CVec& phi, const CVec& psi, const SpatialGrid& g, double sigma) {
  const std::size_t n = phi.size();
  NonlinearTerms out;
  out.integral = sigma == 1.0 ? RVec(n, 0.0) : gauge_integral(phi, psi, g, sigma);
  out.P.resize(n);
  out.Q.resize(n);
  const cplx I(0.0, 1.0);
  const double c2 = sigma * (sigma - 1.0);
  for (std::size_t m = 0; m < n; ++m) {
    const double w = abs2_pow(phi[m], sigma - 1.0);
    out.P[m] = I * sigma * w * phi[m] * phi[m] * std::conj(psi[m]) - c2 * phi[m] * out.integral[m];
    out.Q[m] = -I * sigma * w * psi[m] * psi[m] * std::conj(phi[m]) - c2 * psi[m] * out.integral[m];
  }
  return out;
}

inline ComplexField nonlinearity_P(const GaugePair& pair, double sigma) {
  require_same_grid(pair.phi.grid, pair.psi.grid);
  return ComplexField(pair.phi.grid, nonlinearities(pair.phi.values, pair.psi.values, pair.phi.grid, sigma).P,
                      pair.time);
}

inline ComplexField nonlinearity_Q(const GaugePair& pair, double sigma) {
  require_same_grid(pair.phi.grid, pair.psi.grid);
  return ComplexField(pair.phi.grid, nonlinearities(pair.phi.values, pair.psi.values, pair.phi.grid, sigma).Q,
                      pair.time);
}

// G(phi, v). The derivative of P(phi, v) is expanded by the product rule from
// spectral phi_x and v_x; d|phi|^{2a} = 2a |phi|^{2(a-1)} Re(conj(phi) phi_x).
inline ComplexField combined_G(const ComplexField& phi, const ComplexField& v, double sigma) {
  require_same_grid(phi.grid, v.grid);
  const auto& g = phi.grid;
  const std::size_t n = phi.size();
  const double s = sigma;
  const cplx I(0.0, 1.0);
  CVec d1, d2;
  spectral::derivatives12(phi.values, g, d1, d2);
  const CVec dv = spectral::derivative(v.values, g, 1);
  const NonlinearTerms nl = nonlinearities(phi.values, v.values, g, s);
  auto pw = [](cplx z, double e) { return guarded_abs_pow(z, e); };
  auto dpow = [&](std::size_t m, double a) {
    if (a == 0.0) return 0.0;
    return 2.0 * a * pw(phi[m], 2.0 * (a - 1.0)) * std::real(std::conj(phi[m]) * d1[m]);
  };
  CVec G(n);
  for (std::size_t m = 0; m < n; ++m) {
    const cplx p = phi[m], pv = v[m], pd = d1[m];
    const double w1 = pw(p, 2.0 * (s - 1.0));
    const double w2 = pw(p, 2.0 * (s - 2.0));
    const double ws = pw(p, 2.0 * s);
    const cplx cp = std::conj(p);
    const double dI = w2 * std::imag(pv * pv * cp * cp);
    const cplx dP = I * s * (dpow(m, s - 1.0) * p * p * std::conj(pv) + w1 * 2.0 * p * pd * std::conj(pv) +
                             w1 * p * p * std::conj(dv[m])) -
                    s * (s - 1.0) * (pd * nl.integral[m] + p * dI);
    const cplx Pm = nl.P[m];
    G[m] = dP - 0.5 * I * (s + 1.0) * ws * Pm + 0.5 * I * s * w1 * p * p * std::conj(Pm) -
           I * s * w1 * p * p * std::conj(d2[m]) -
           0.5 * I *
               ((s + 1.0) * pd * dpow(m, s) + s * (s + 1.0) * std::norm(pd) * w1 * p +
                s * (s - 1.0) * std::conj(pd) * std::conj(pd) * w2 * p * p * p);
  }
  return ComplexField(g, std::move(G), phi.time);
}

inline double gq_identity_residual(const ComplexField& phi, double sigma) {
  const CVec d = spectral::derivative(phi.values, phi.grid, 1);
  const cplx I(0.0, 1.0);
  CVec v(phi.size());
  for (std::size_t m = 0; m < phi.size(); ++m) v[m] = d[m] - 0.5 * I * abs2_pow(phi[m], sigma) * phi[m];
  const ComplexField vf(phi.grid, v, phi.time);
  const ComplexField G = combined_G(phi, vf, sigma);
  const CVec Q = nonlinearities(phi.values, v, phi.grid, sigma).Q;
  double diff = 0.0, scale = 0.0;
  for (std::size_t m = 0; m < Q.size(); ++m) {
    diff = std::max(diff, std::abs(G[m] - Q[m]));
    scale = std::max(scale, std::abs(Q[m]));
  }
  return diff / (1.0 + scale);
}

// L^2 norms of L phi - P and L psi - Q at the midpoint of two snapshots.
inline std::pair<double, double> system_residual(const GaugePair& before, const GaugePair& after, double dt,
                                                 double sigma) {
  if (!(dt > 0.0)) throw InvalidArgument("system_residual needs dt > 0");
  require_same_grid(before.phi.grid, after.phi.grid);
  const auto& g = before.phi.grid;
  const auto nb = nonlinearities(before.phi.values, before.psi.values, g, sigma);
  const auto na = nonlinearities(after.phi.values, after.psi.values, g, sigma);
  const CVec pb = spectral::derivative(before.phi.values, g, 2), pa = spectral::derivative(after.phi.values, g, 2);
  const CVec sb = spectral::derivative(before.psi.values, g, 2), sa = spectral::derivative(after.psi.values, g, 2);
  const cplx I(0.0, 1.0);
  CVec r1(pb.size()), r2(pb.size());
  for (std::size_t m = 0; m < pb.size(); ++m) {
    r1[m] = I * (after.phi[m] - before.phi[m]) / dt + 0.5 * (pa[m] + pb[m]) - 0.5 * (na.P[m] + nb.P[m]);
    r2[m] = I * (after.psi[m] - before.psi[m]) / dt + 0.5 * (sa[m] + sb[m]) - 0.5 * (na.Q[m] + nb.Q[m]);
  }
  return {spectral::lr_norm(r1, g, 2.0), spectral::lr_norm(r2, g, 2.0)};
}

// (h, k) = (e^{i Lambda_R} R, e^{i Lambda_R} R_x); the second equals h_x - (i/2)|h|^{2s} h.
inline GaugePair profile_pair_W(const MultiSolitonConfig& cfg, double t, const SpatialGrid& g) {
  const ComplexField R = profile_sum(cfg, t, g);
  return to_gauge_pair(R, cfg.sigma);
}

enum class NSourceForm { Corrected, ExtraDamped };

struct ProfileForcing {
  CVec fm;  // e^{-lambda t} m
  CVec fn;  // e^{-lambda t} n, with n in its dimensionally consistent form
};

// Uses e^{-lambda t} v = -chi = LR + i|R|^{2s} R_x, which needs no time derivative.
inline ProfileForcing profile_forcing(const MultiSolitonConfig& cfg, double t, const SpatialGrid& g) {
  const ComplexField R = profile_sum(cfg, t, g);
  const std::size_t n = R.size();
  ProfileForcing out{CVec(n, cplx(0.0, 0.0)), CVec(n, cplx(0.0, 0.0))};
  if (cfg.size() < 2) return out;
  ComplexField chi = interaction_residual_chi(cfg, t, g);
  for (auto& z : chi.values) z = -z;
  const double s = cfg.sigma;
  const RVec lam = phase_weight(R, s);
  const CVec Rx = spectral::derivative(R.values, g, 1);
  const CVec dchi = spectral::derivative(chi.values, g, 1);
  RVec w(n);
  for (std::size_t m = 0; m < n; ++m) w[m] = abs2_pow(R[m], s - 1.0) * std::imag(std::conj(R[m]) * chi[m]);
  const RVec IR = spectral::cumulative_real(w, g);
  for (std::size_t m = 0; m < n; ++m) {
    const cplx e = std::polar(1.0, lam[m]);
    const cplx h = e * R[m];
    out.fm[m] = e * chi[m] - s * h * IR[m];
    out.fn[m] = e * (dchi[m] - s * Rx[m] * IR[m]);
  }
  return out;
}

struct SourceTerms {
  ComplexField m;
  ComplexField n;
  double lambda_rate = 0.0;
};

// m, n with v = e^{lambda t}(-chi). ExtraDamped multiplies n by one more e^{-lambda t}.
inline SourceTerms profile_sources(const MultiSolitonConfig& cfg, double t, const SpatialGrid& g,
                                   NSourceForm form = NSourceForm::Corrected, double lambda_rate = 0.0) {
  const double lambda = lambda_rate > 0.0 ? lambda_rate : (cfg.size() >= 2 ? decay_rate_lambda(cfg) : 0.0);
  ProfileForcing f = profile_forcing(cfg, t, g);
  const double up = std::exp(lambda * t);
  for (auto& z : f.fm) z *= up;
  if (form == NSourceForm::Corrected)
    for (auto& z : f.fn) z *= up;
  return {ComplexField(g, std::move(f.fm), t), ComplexField(g, std::move(f.fn), t), lambda};
}

}  // namespace gdnls
