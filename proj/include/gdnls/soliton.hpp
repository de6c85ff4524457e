#pragma once

#include <algorithm>

#include "gdnls/core.hpp"
#include "gdnls/spectral.hpp"

namespace gdnls {

struct SolitonParams {
  double omega = 1.0;
  double c = 0.0;
  double x0 = 0.0;
  double theta0 = 0.0;
  double sigma = 1.0;
};

inline void validate(const SolitonParams& p) {
  if (!std::isfinite(p.omega) || !std::isfinite(p.c) || !std::isfinite(p.x0) || !std::isfinite(p.theta0))
    throw InvalidArgument("soliton parameters must be finite");
  if (!(p.sigma >= 1.0)) throw InvalidArgument("sigma must be >= 1");
  if (!(p.omega - 0.25 * p.c * p.c > 1e-12))
    throw InvalidArgument("soliton requires omega > c^2/4");
}

inline double halfwidth_h(const SolitonParams& p) {
  validate(p);
  return std::sqrt(4.0 * p.omega - p.c * p.c);
}

namespace soliton_detail {

// log(cosh z - a) for a < 1, stable for large |z|.
inline double log_cosh_minus(double z, double a) {
  const double az = std::abs(z);
  if (az < 20.0) return std::log(std::cosh(z) - a);
  const double e = std::exp(-az);
  return az + std::log(0.5 * (1.0 + e * e) - a * e);
}

}  // namespace soliton_detail

inline double amplitude_profile(const SolitonParams& p, double y) {
  const double h = halfwidth_h(p);
  const double sw = std::sqrt(p.omega);
  const double a = p.c / (2.0 * sw);
  if (!(a < 1.0)) throw NumericalFailure("soliton denominator is not positive");
  const double z = p.sigma * h * y;
  const double lognum = std::log((p.sigma + 1.0) * h * h / (2.0 * sw));
  return std::exp((lognum - soliton_detail::log_cosh_minus(z, a)) / (2.0 * p.sigma));
}

namespace soliton_detail {

inline RVec sample_amplitude(const SolitonParams& p, const SpatialGrid& g, double shift) {
  RVec a(g.num_points);
  for (int m = 0; m < g.num_points; ++m) a[m] = amplitude_profile(p, g.x(m) - shift);
  return a;
}

// theta at y_m = x_m - shift, integral taken on the grid from the left edge.
inline RVec sample_phase(const SolitonParams& p, const SpatialGrid& g, double shift, const RVec& amp,
                         QuadratureFlag* flag) {
  RVec pw(g.num_points);
  for (int m = 0; m < g.num_points; ++m) pw[m] = std::pow(amp[m], 2.0 * p.sigma);
  const RVec integral = spectral::cumulative_real(pw, g, flag);
  RVec th(g.num_points);
  const double k = 1.0 / (2.0 * p.sigma + 2.0);
  for (int m = 0; m < g.num_points; ++m) th[m] = 0.5 * p.c * (g.x(m) - shift) - k * integral[m];
  return th;
}

}  // namespace soliton_detail

inline RVec phase_theta(const SolitonParams& p, const SpatialGrid& g, QuadratureFlag* flag = nullptr) {
  validate(p);
  const RVec amp = soliton_detail::sample_amplitude(p, g, 0.0);
  return soliton_detail::sample_phase(p, g, 0.0, amp, flag);
}

inline ComplexField soliton_field(const SolitonParams& p, double t, const SpatialGrid& g,
                                  QuadratureFlag* flag = nullptr) {
  validate(p);
  const double shift = p.x0 + p.c * t;
  const RVec amp = soliton_detail::sample_amplitude(p, g, shift);
  const RVec th = soliton_detail::sample_phase(p, g, shift, amp, flag);
  CVec v(g.num_points);
  const double global = p.theta0 + p.omega * t;
  for (int m = 0; m < g.num_points; ++m) v[m] = std::polar(amp[m], global + th[m]);
  return ComplexField(g, std::move(v), t);
}

struct SolitonEvaluation {
  RVec amplitude;
  RVec phase;
  ComplexField complex_profile;
  ComplexField field;
};

// Profile quantities are sampled at y = x; the field carries the shifts at t = 0.
inline SolitonEvaluation evaluate_soliton(const SolitonParams& p, const SpatialGrid& g,
                                          QuadratureFlag* flag = nullptr) {
  validate(p);
  SolitonEvaluation ev;
  ev.amplitude = soliton_detail::sample_amplitude(p, g, 0.0);
  ev.phase = soliton_detail::sample_phase(p, g, 0.0, ev.amplitude, flag);
  CVec v(g.num_points);
  for (int m = 0; m < g.num_points; ++m) v[m] = std::polar(ev.amplitude[m], ev.phase[m]);
  ev.complex_profile = ComplexField(g, std::move(v), 0.0);
  ev.field = soliton_field(p, 0.0, g, flag);
  return ev;
}

// -phi'' + (omega - c^2/4) phi + (c/2) phi^{2s+1} - (2s+1)/(2s+2)^2 phi^{4s+1}, max modulus.
inline double profile_ode_residual(const SolitonParams& p, const SpatialGrid& g, const RVec& phi) {
  validate(p);
  const double s = p.sigma;
  CVec f(phi.begin(), phi.end());
  const CVec d2 = spectral::derivative(f, g, 2);
  const double lin = p.omega - 0.25 * p.c * p.c;
  const double k = (2.0 * s + 1.0) / ((2.0 * s + 2.0) * (2.0 * s + 2.0));
  double worst = 0.0;
  for (int m = 0; m < g.num_points; ++m) {
    const double a = phi[m];
    const double a2s = std::pow(std::abs(a), 2.0 * s);
    const double r = -d2[m].real() + lin * a + 0.5 * p.c * a2s * a - k * a2s * a2s * a;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

inline double profile_ode_residual(const SolitonParams& p, const SpatialGrid& g) {
  return profile_ode_residual(p, g, soliton_detail::sample_amplitude(p, g, 0.0));
}

// -phi'' + omega phi + i c phi' - i |phi|^{2s} phi' for a complex profile.
inline double phi_ode_residual(const SolitonParams& p, const ComplexField& phi) {
  validate(p);
  const auto& g = phi.grid;
  CVec d1, d2;
  spectral::derivatives12(phi.values, g, d1, d2);
  const cplx I(0.0, 1.0);
  double worst = 0.0;
  for (int m = 0; m < g.num_points; ++m) {
    const cplx r = -d2[m] + p.omega * phi[m] + I * p.c * d1[m] - I * abs2_pow(phi[m], p.sigma) * d1[m];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

inline double phi_ode_residual(const SolitonParams& p, const SpatialGrid& g) {
  return phi_ode_residual(p, evaluate_soliton(p, g).complex_profile);
}

struct DecayReport {
  bool pass = true;
  RVec fitted_constant;  // per derivative order: max ratio over the resolved region
  RVec tail_growth;      // outer-half max ratio over inner-half max ratio
};

// Envelope check |d^k u| <= C e^{-rate h |y|}; rate_factor = 1/2 is the stated envelope.
// The ratio is inspected where |d^k u| is above 1e-10 of its peak (rounding noise
// excluded); the check fails when it keeps growing into the tail.
inline DecayReport decay_bound_check(const SolitonParams& p, double t, const SpatialGrid& g, int max_derivative,
                                     double rate_factor = 0.5) {
  if (max_derivative < 0 || max_derivative > 3) throw InvalidArgument("max_derivative must be in 0..3");
  const double h = halfwidth_h(p);
  const ComplexField u = soliton_field(p, t, g);
  const double center = p.x0 + p.c * t;
  DecayReport rep;
  for (int k = 0; k <= max_derivative; ++k) {
    const CVec d = k == 0 ? u.values : spectral::derivative(u.values, g, k);
    double peak = 0.0;
    for (const auto& z : d) peak = std::max(peak, std::abs(z));
    double radius = 0.0;
    for (int m = 0; m < g.num_points; ++m)
      if (std::abs(d[m]) > 1e-10 * peak) radius = std::max(radius, std::abs(g.x(m) - center));
    double inner = 0.0, outer = 0.0;
    for (int m = 0; m < g.num_points; ++m) {
      const double y = std::abs(g.x(m) - center);
      if (y > radius) continue;
      const double ratio = std::abs(d[m]) / std::exp(-rate_factor * h * y);
      if (!std::isfinite(ratio)) {
        rep.pass = false;
        continue;
      }
      double& slot = y <= 0.5 * radius ? inner : outer;
      slot = std::max(slot, ratio);
    }
    const double growth = inner > 0.0 ? outer / inner : 0.0;
    rep.fitted_constant.push_back(std::max(inner, outer));
    rep.tail_growth.push_back(growth);
    if (!(growth <= 10.0)) rep.pass = false;
  }
  return rep;
}

}  // namespace gdnls
