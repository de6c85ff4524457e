#pragma once

#include <algorithm>
#include <array>
#include <limits>

#include "gdnls/core.hpp"
#include "gdnls/fft.hpp"

namespace gdnls {

// Symmetric layout; the Nyquist entry carries -N/2 * 2pi/L.
inline RVec wavenumbers(const SpatialGrid& g) {
  const int n = g.num_points;
  const double dk = 2.0 * kPi / g.length();
  RVec k(n);
  for (int j = 0; j < n; ++j) k[j] = dk * (j <= n / 2 - 1 ? j : j - n);
  return k;
}

namespace spectral {

inline void multiply_derivative_symbol(CVec& fhat, const SpatialGrid& g, int order) {
  const int n = g.num_points;
  const double dk = 2.0 * kPi / g.length();
  for (int j = 0; j < n; ++j) {
    const double k = dk * (j <= n / 2 - 1 ? j : j - n);
    cplx m;
    switch (order) {
      case 1: m = cplx(0.0, k); break;
      case 2: m = cplx(-k * k, 0.0); break;
      default: m = cplx(0.0, -k * k * k); break;
    }
    fhat[j] *= m;
  }
  if (order % 2 == 1) fhat[n / 2] = 0.0;
}

inline CVec derivative(const CVec& f, const SpatialGrid& g, int order) {
  if (order < 1 || order > 3) throw UnsupportedOrder("derivative order must be 1, 2 or 3");
  CVec fhat;
  fft::forward(f, fhat);
  multiply_derivative_symbol(fhat, g, order);
  return fft::inverse(fhat);
}

// First and second derivatives from a single forward transform.
inline void derivatives12(const CVec& f, const SpatialGrid& g, CVec& d1, CVec& d2) {
  CVec fhat, a;
  fft::forward(f, fhat);
  a = fhat;
  multiply_derivative_symbol(a, g, 1);
  fft::inverse(a, d1);
  multiply_derivative_symbol(fhat, g, 2);
  fft::inverse(fhat, d2);
}

// Cumulative integral from the left edge: mean * (x + L/2) plus the periodic
// antiderivative of the zero-mean part, pinned to vanish at the left node.
inline CVec cumulative(const CVec& f, const SpatialGrid& g, QuadratureFlag* flag = nullptr) {
  const int n = g.num_points;
  if (flag) {
    double peak = 0.0;
    for (const auto& z : f) peak = std::max(peak, std::abs(z));
    const double edge = std::max(std::abs(f.front()), std::abs(f.back()));
    if (peak > 0.0 && edge > 1e-10 * peak) flag->boundary_mass = true;
  }
  CVec fhat;
  fft::forward(f, fhat);
  const cplx mean = fhat[0] / static_cast<double>(n);
  const double dk = 2.0 * kPi / g.length();
  fhat[0] = 0.0;
  fhat[n / 2] = 0.0;
  for (int j = 1; j < n; ++j) {
    if (j == n / 2) continue;
    const double k = dk * (j <= n / 2 - 1 ? j : j - n);
    fhat[j] /= cplx(0.0, k);
  }
  CVec out = fft::inverse(fhat);
  const cplx base = out[0];
  for (int m = 0; m < n; ++m) out[m] = out[m] - base + mean * (m * g.spacing);
  return out;
}

inline RVec cumulative_real(const RVec& f, const SpatialGrid& g, QuadratureFlag* flag = nullptr) {
  CVec c(f.begin(), f.end());
  CVec r = cumulative(c, g, flag);
  RVec out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i].real();
  return out;
}

inline double lr_norm(const CVec& f, const SpatialGrid& g, double r) {
  if (std::isinf(r)) {
    double m = 0.0;
    for (const auto& z : f) m = std::max(m, std::abs(z));
    return m;
  }
  double s = 0.0;
  if (r == 2.0) {
    for (const auto& z : f) s += std::norm(z);
    return std::sqrt(s * g.spacing);
  }
  for (const auto& z : f) s += std::pow(std::abs(z), r);
  return std::pow(s * g.spacing, 1.0 / r);
}

// ||f||_{H^s}^2 = sum (1 + k^2)^s |f_k|^2 with the discrete Parseval scaling.
inline double hs_norm(const CVec& f, const SpatialGrid& g, int s) {
  CVec fhat;
  fft::forward(f, fhat);
  const RVec k = wavenumbers(g);
  double acc = 0.0;
  for (std::size_t j = 0; j < fhat.size(); ++j) {
    const double w = s == 0 ? 1.0 : std::pow(1.0 + k[j] * k[j], s);
    acc += w * std::norm(fhat[j]);
  }
  return std::sqrt(acc * g.spacing / g.num_points);
}

inline double norm(const CVec& f, const SpatialGrid& g, NormKind kind) {
  switch (kind.tag) {
    case NormKind::Tag::L2: return hs_norm(f, g, 0);
    case NormKind::Tag::H1: return hs_norm(f, g, 1);
    case NormKind::Tag::H2: return hs_norm(f, g, 2);
    case NormKind::Tag::Linf: return lr_norm(f, g, INFINITY);
    case NormKind::Tag::Lp: return lr_norm(f, g, kind.p);
  }
  return 0.0;
}

inline void apply_propagator_hat(CVec& fhat, const SpatialGrid& g, double dt) {
  const RVec k = wavenumbers(g);
  for (std::size_t j = 0; j < fhat.size(); ++j) fhat[j] *= std::polar(1.0, -k[j] * k[j] * dt);
}

inline CVec propagate(const CVec& f, const SpatialGrid& g, double dt) {
  if (dt == 0.0) return f;
  CVec fhat;
  fft::forward(f, fhat);
  apply_propagator_hat(fhat, g, dt);
  return fft::inverse(fhat);
}

// Two-thirds rule on Fourier coefficients.
inline void dealias_hat(CVec& fhat) {
  const int n = static_cast<int>(fhat.size());
  const int cut = n / 3;
  for (int j = 0; j < n; ++j) {
    const int jj = j <= n / 2 - 1 ? j : n - j;
    if (jj > cut) fhat[j] = 0.0;
  }
}

}  // namespace spectral

inline ComplexField spectral_derivative(const ComplexField& f, int order) {
  return ComplexField(f.grid, spectral::derivative(f.values, f.grid, order), f.time);
}

inline ComplexField antiderivative_from_left(const ComplexField& f, QuadratureFlag* flag = nullptr) {
  return ComplexField(f.grid, spectral::cumulative(f.values, f.grid, flag), f.time);
}

inline double sobolev_norm(const ComplexField& f, NormKind kind) {
  return spectral::norm(f.values, f.grid, kind);
}

inline ComplexField free_propagator_apply(const ComplexField& f, double dt) {
  return ComplexField(f.grid, spectral::propagate(f.values, f.grid, dt), f.time + dt);
}

struct AdmissiblePair {
  double q;
  double r;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline const std::array<AdmissiblePair, 4>& admissible_pairs() {
  static const std::array<AdmissiblePair, 4> pairs{{{kInf, 2.0}, {4.0, kInf}, {6.0, 6.0}, {8.0, 4.0}}};
  return pairs;
}

inline bool is_admissible(double q, double r) {
  for (const auto& p : admissible_pairs())
    if (p.q == q && p.r == r) return true;
  return false;
}

namespace spectral {

// L^q over the tail [t_i, t_end] of a sequence of spatial norms, for every i.
// Trapezoid in time; the running max for q = infinity.
inline RVec suffix_time_norms(const RVec& spatial, double dt, double q) {
  const std::size_t n = spatial.size();
  RVec out(n, 0.0);
  if (n == 0) return out;
  if (std::isinf(q)) {
    double m = 0.0;
    for (std::size_t i = n; i-- > 0;) {
      m = std::max(m, spatial[i]);
      out[i] = m;
    }
    return out;
  }
  double acc = 0.0;
  out[n - 1] = 0.0;
  for (std::size_t i = n - 1; i-- > 0;) {
    acc += 0.5 * dt * (std::pow(spatial[i], q) + std::pow(spatial[i + 1], q));
    out[i] = std::pow(acc, 1.0 / q);
  }
  return out;
}

}  // namespace spectral

inline double mixed_spacetime_norm(const std::vector<ComplexField>& fs, const TimeGrid& tg, double q, double r) {
  if (!is_admissible(q, r)) throw InvalidArgument("(q, r) is not in the admissible set");
  if (static_cast<int>(fs.size()) != tg.num_nodes())
    throw InvalidArgument("snapshot count does not match the time grid");
  RVec spatial(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) spatial[i] = spectral::lr_norm(fs[i].values, fs[i].grid, r);
  return spectral::suffix_time_norms(spatial, tg.step, q).front();
}

}  // namespace gdnls
