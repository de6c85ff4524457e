#pragma once

#include <string>

#include "gdnls/gauge.hpp"

namespace gdnls {

enum class Scheme { SplitStepGauge, IntegratingFactorRK4 };

inline std::string scheme_name(Scheme s) {
  return s == Scheme::SplitStepGauge ? "split-step-gauge" : "if-rk4";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "split-step-gauge" || s == "SplitStepGauge") return Scheme::SplitStepGauge;
  if (s == "if-rk4" || s == "IntegratingFactorRK4") return Scheme::IntegratingFactorRK4;
  throw InvalidArgument("unknown scheme '" + s + "'");
}

struct EvolutionConfig {
  double dt = 2.5e-4;
  Scheme scheme = Scheme::IntegratingFactorRK4;
  bool dealias = false;
  double sigma = 1.0;
  // Test hook: the equation is solved with |u|^{2s} u_x scaled by this factor.
  double nonlinear_scale = 1.0;
  // Split-step only: 2 = plain Strang, 4 = triple-jump composition of Strang steps.
  int splitting_order = 4;
};

inline EvolutionConfig default_evolution_config(double sigma, Scheme scheme) {
  EvolutionConfig c;
  c.sigma = sigma;
  c.scheme = scheme;
  c.dealias = sigma >= 2.0;
  return c;
}

inline void validate(const EvolutionConfig& c) {
  if (!(c.dt != 0.0) || !std::isfinite(c.dt)) throw InvalidArgument("dt must be finite and nonzero");
  if (!(c.sigma >= 1.0)) throw InvalidArgument("sigma must be >= 1");
  if (!(c.nonlinear_scale >= 0.0)) throw InvalidArgument("nonlinear scale must be >= 0");
  if (c.splitting_order != 2 && c.splitting_order != 4) throw InvalidArgument("splitting order must be 2 or 4");
}

struct Trajectory {
  RVec times;
  std::vector<ComplexField> snapshots;
  RVec mass_history;
};

inline double mass(const ComplexField& u) {
  double s = 0.0;
  for (const auto& z : u.values) s += std::norm(z);
  return s * u.grid.spacing;
}

namespace evolution_detail {

// NaN-propagating sup norm.
inline double linf(const CVec& v) {
  double m = 0.0;
  for (const auto& z : v) {
    const double a = std::abs(z);
    if (!(a <= m)) m = a;
  }
  return m;
}

// Integrating-factor RK4 in Fourier space for u_t = i u_xx - |u|^{2s} u_x.
class IfRk4 {
 public:
  IfRk4(const SpatialGrid& g, const EvolutionConfig& c) : g_(g), c_(c), k_(wavenumbers(g)) {
    const std::size_t n = k_.size();
    e_full_.resize(n);
    e_half_.resize(n);
    ik_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      e_full_[j] = std::polar(1.0, -k_[j] * k_[j] * c.dt);
      e_half_[j] = std::polar(1.0, -k_[j] * k_[j] * 0.5 * c.dt);
      ik_[j] = cplx(0.0, k_[j]);
    }
    ik_[n / 2] = 0.0;
  }

  // Advances the Fourier coefficients in place.
  void advance(CVec& uhat) {
    const std::size_t n = uhat.size();
    const double h = c_.dt;
    rhs(uhat, k1_);
    for (std::size_t j = 0; j < n; ++j) tmp_[j] = e_half_[j] * (uhat[j] + 0.5 * h * k1_[j]);
    rhs(tmp_, k2_);
    for (std::size_t j = 0; j < n; ++j) tmp_[j] = e_half_[j] * uhat[j] + 0.5 * h * k2_[j];
    rhs(tmp_, k3_);
    for (std::size_t j = 0; j < n; ++j) tmp_[j] = e_full_[j] * uhat[j] + h * e_half_[j] * k3_[j];
    rhs(tmp_, k4_);
    for (std::size_t j = 0; j < n; ++j)
      uhat[j] = e_full_[j] * uhat[j] +
                h / 6.0 * (e_full_[j] * k1_[j] + 2.0 * e_half_[j] * (k2_[j] + k3_[j]) + k4_[j]);
  }

 private:
  void rhs(const CVec& uhat, CVec& out) {
    const std::size_t n = uhat.size();
    fft::inverse(uhat, u_);
    dx_.resize(n);
    for (std::size_t j = 0; j < n; ++j) dx_[j] = ik_[j] * uhat[j];
    fft::inverse(dx_, ux_);
    for (std::size_t m = 0; m < n; ++m) u_[m] = -abs2_pow(u_[m], c_.sigma) * ux_[m];
    fft::forward(u_, out);
    if (c_.dealias) spectral::dealias_hat(out);
  }

  SpatialGrid g_;
  EvolutionConfig c_;
  RVec k_;
  CVec e_full_, e_half_, ik_;
  CVec k1_, k2_, k3_, k4_, u_, ux_, dx_;
  CVec tmp_ = CVec(g_.num_points);
};

// Splitting for i phi_t + phi_xx = P(phi, psi) with psi rebuilt from the pair
// constraint at every nonlinear stage; the nonlinear flow is integrated by RK4.
class SplitStepGauge {
 public:
  SplitStepGauge(const SpatialGrid& g, const EvolutionConfig& c) : g_(g), c_(c), k_(wavenumbers(g)) {
    if (c.splitting_order == 2) {
      linear_ = {0.5, 0.5};
      nonlinear_ = {1.0};
    } else {
      const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
      const double w0 = 1.0 - 2.0 * w1;
      linear_ = {0.5 * w1, 0.5 * (w1 + w0), 0.5 * (w0 + w1), 0.5 * w1};
      nonlinear_ = {w1, w0, w1};
    }
    for (double a : linear_) {
      CVec e(k_.size());
      for (std::size_t j = 0; j < k_.size(); ++j) e[j] = std::polar(1.0, -k_[j] * k_[j] * a * c.dt);
      lin_mult_.push_back(std::move(e));
    }
  }

  void advance(CVec& phi) {
    for (std::size_t i = 0; i < nonlinear_.size(); ++i) {
      linear(phi, i);
      nonlinear(phi, nonlinear_[i] * c_.dt);
    }
    linear(phi, linear_.size() - 1);
  }

 private:
  void linear(CVec& phi, std::size_t i) {
    fft::forward(phi, hat_);
    for (std::size_t j = 0; j < hat_.size(); ++j) hat_[j] *= lin_mult_[i][j];
    fft::inverse(hat_, phi);
  }

  void rhs(const CVec& phi, CVec& out) {
    const CVec d = spectral::derivative(phi, g_, 1);
    const cplx I(0.0, 1.0);
    psi_.resize(phi.size());
    for (std::size_t m = 0; m < phi.size(); ++m) psi_[m] = d[m] - 0.5 * I * abs2_pow(phi[m], c_.sigma) * phi[m];
    NonlinearTerms nl = nonlinearities(phi, psi_, g_, c_.sigma);
    out.swap(nl.P);
    // Filtered regardless of cfg.dealias: without it this stage is unstable.
    fft::forward(out, hat_);
    spectral::dealias_hat(hat_);
    fft::inverse(hat_, out);
    for (auto& z : out) z *= -I;
  }

  // The rebuilt psi carries phi_x, so this flow is advective with speed about
  // s |phi|^{2s}; RK4 substeps keep its CFL number at or below 1/2.
  void nonlinear(CVec& phi, double h) {
    double speed = 0.0;
    for (const auto& z : phi) speed = std::max(speed, abs2_pow(z, c_.sigma));
    const double kmax = (2.0 / 3.0) * kPi / g_.spacing;
    const double cfl = std::abs(h) * c_.sigma * speed * kmax;
    const int sub = std::isfinite(cfl) ? std::max(1, static_cast<int>(std::ceil(cfl / 0.5))) : 1;
    for (int q = 0; q < sub; ++q) rk4(phi, h / sub);
  }

  void rk4(CVec& phi, double h) {
    const std::size_t n = phi.size();
    tmp_.resize(n);
    rhs(phi, k1_);
    for (std::size_t m = 0; m < n; ++m) tmp_[m] = phi[m] + 0.5 * h * k1_[m];
    rhs(tmp_, k2_);
    for (std::size_t m = 0; m < n; ++m) tmp_[m] = phi[m] + 0.5 * h * k2_[m];
    rhs(tmp_, k3_);
    for (std::size_t m = 0; m < n; ++m) tmp_[m] = phi[m] + h * k3_[m];
    rhs(tmp_, k4_);
    for (std::size_t m = 0; m < n; ++m) phi[m] += h / 6.0 * (k1_[m] + 2.0 * (k2_[m] + k3_[m]) + k4_[m]);
  }

  SpatialGrid g_;
  EvolutionConfig c_;
  RVec k_;
  RVec linear_, nonlinear_;
  std::vector<CVec> lin_mult_;
  CVec hat_, psi_, tmp_, k1_, k2_, k3_, k4_;
};

// The equation with nonlinearity scaled by eps is the unscaled one for eps^{1/(2s)} u.
inline double amplitude_scale(const EvolutionConfig& c) {
  return std::pow(c.nonlinear_scale, 1.0 / (2.0 * c.sigma));
}

inline void check_growth(double before, double after, double t) {
  if (!std::isfinite(after) || (before > 0.0 && after > 10.0 * before))
    throw InstabilityError("solution sup norm grew more than tenfold in one step", t);
}

}  // namespace evolution_detail

// Advances u by cfg.dt (a negative dt integrates backward).
inline ComplexField step(const ComplexField& u, const EvolutionConfig& cfg) {
  validate(cfg);
  const auto& g = u.grid;
  if (cfg.nonlinear_scale == 0.0) return free_propagator_apply(u, cfg.dt);
  const double a = evolution_detail::amplitude_scale(cfg);
  ComplexField w = u;
  for (auto& z : w.values) z *= a;
  const double before = evolution_detail::linf(w.values);
  CVec out;
  if (cfg.scheme == Scheme::IntegratingFactorRK4) {
    evolution_detail::IfRk4 st(g, cfg);
    CVec hat = fft::forward(w.values);
    st.advance(hat);
    out = fft::inverse(hat);
  } else {
    evolution_detail::SplitStepGauge st(g, cfg);
    GaugePair pair = to_gauge_pair(w, cfg.sigma);
    CVec phi = pair.phi.values;
    st.advance(phi);
    out = from_gauge_pair(ComplexField(g, std::move(phi)), cfg.sigma).values;
  }
  evolution_detail::check_growth(before, evolution_detail::linf(out), u.time + cfg.dt);
  for (auto& z : out) z /= a;
  return ComplexField(g, std::move(out), u.time + cfg.dt);
}

// Snapshots are taken at the nodes of t_span; the internal step is cfg.dt,
// shrunk if needed so that it divides each snapshot interval.
inline Trajectory evolve(const ComplexField& u0, const TimeGrid& t_span, const EvolutionConfig& cfg) {
  validate(cfg);
  if (!(cfg.dt > 0.0)) throw InvalidArgument("evolve needs dt > 0");
  const auto& g = u0.grid;
  const int substeps = std::max(1, static_cast<int>(std::ceil(t_span.step / cfg.dt - 1e-9)));
  EvolutionConfig c = cfg;
  c.dt = t_span.step / substeps;

  Trajectory tr;
  auto record = [&](ComplexField f, double t) {
    f.time = t;
    tr.times.push_back(t);
    tr.mass_history.push_back(mass(f));
    tr.snapshots.push_back(std::move(f));
  };
  ComplexField start = u0;
  record(start, t_span.t_start);

  if (c.nonlinear_scale == 0.0) {
    CVec hat = fft::forward(u0.values);
    for (int i = 1; i < t_span.num_nodes(); ++i) {
      spectral::apply_propagator_hat(hat, g, t_span.step);
      record(ComplexField(g, fft::inverse(hat)), t_span.time(i));
    }
    return tr;
  }

  const double a = evolution_detail::amplitude_scale(c);
  CVec w = u0.values;
  for (auto& z : w) z *= a;
  auto unscale = [&](CVec v) {
    for (auto& z : v) z /= a;
    return v;
  };

  if (c.scheme == Scheme::IntegratingFactorRK4) {
    evolution_detail::IfRk4 st(g, c);
    CVec hat = fft::forward(w);
    double sup = evolution_detail::linf(w);
    for (int i = 1; i < t_span.num_nodes(); ++i) {
      for (int s = 0; s < substeps; ++s) {
        st.advance(hat);
        const CVec cur = fft::inverse(hat);
        const double now = evolution_detail::linf(cur);
        evolution_detail::check_growth(sup, now, t_span.time(i - 1) + (s + 1) * c.dt);
        sup = now;
        if (s == substeps - 1) record(ComplexField(g, unscale(cur)), t_span.time(i));
      }
    }
  } else {
    evolution_detail::SplitStepGauge st(g, c);
    CVec phi = to_gauge_pair(ComplexField(g, w), c.sigma).phi.values;
    double sup = evolution_detail::linf(phi);
    for (int i = 1; i < t_span.num_nodes(); ++i) {
      for (int s = 0; s < substeps; ++s) {
        st.advance(phi);
        const double now = evolution_detail::linf(phi);
        evolution_detail::check_growth(sup, now, t_span.time(i - 1) + (s + 1) * c.dt);
        sup = now;
      }
      record(ComplexField(g, unscale(from_gauge_pair(ComplexField(g, phi), c.sigma).values)), t_span.time(i));
    }
  }
  return tr;
}

inline RVec soliton_error_h1(const Trajectory& traj, const SolitonParams& p) {
  RVec out;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const auto& u = traj.snapshots[i];
    const ComplexField exact = soliton_field(p, traj.times[i], u.grid);
    CVec d(u.size());
    for (std::size_t m = 0; m < d.size(); ++m) d[m] = u[m] - exact[m];
    out.push_back(spectral::hs_norm(d, u.grid, 1));
  }
  return out;
}

inline RVec soliton_error_h1(const Trajectory& traj, const MultiSolitonConfig& cfg) {
  RVec out;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const auto& u = traj.snapshots[i];
    const ComplexField R = profile_sum(cfg, traj.times[i], u.grid);
    CVec d(u.size());
    for (std::size_t m = 0; m < d.size(); ++m) d[m] = u[m] - R[m];
    out.push_back(spectral::hs_norm(d, u.grid, 1));
  }
  return out;
}

// Smallest number of grid points across 1/h for any soliton.
inline double points_per_width(const MultiSolitonConfig& cfg, const SpatialGrid& g) {
  double worst = INFINITY;
  for (const auto& s : cfg.solitons) worst = std::min(worst, 1.0 / (halfwidth_h(s) * g.spacing));
  return worst;
}

}  // namespace gdnls
