#include <gtest/gtest.h>

#include "gdnls/gdnls.hpp"

using namespace gdnls;

namespace {

const cplx kI(0.0, 1.0);

double amplitude_oracle(const SolitonParams& p, double y) {
  const double h = std::sqrt(4.0 * p.omega - p.c * p.c);
  const double sw = std::sqrt(p.omega);
  return std::pow((p.sigma + 1.0) * h * h / (2.0 * sw * (std::cosh(p.sigma * h * y) - p.c / (2.0 * sw))),
                  1.0 / (2.0 * p.sigma));
}

// theta(y) with the integral of phi^{2 sigma} from -infinity, via
// int dy / (cosh(a y) - b) = 2 / (a sqrt(1 - b^2)) atan(sqrt((1+b)/(1-b)) tanh(a y / 2)).
double phase_oracle(const SolitonParams& p, double y) {
  const double h = std::sqrt(4.0 * p.omega - p.c * p.c);
  const double sw = std::sqrt(p.omega);
  const double K = (p.sigma + 1.0) * h * h / (2.0 * sw), b = p.c / (2.0 * sw), a = p.sigma * h;
  const double r = std::sqrt((1.0 + b) / (1.0 - b));
  const double F = 2.0 / (a * std::sqrt(1.0 - b * b));
  const double integral = K * F * (std::atan(r * std::tanh(0.5 * a * y)) + std::atan(r));
  return 0.5 * p.c * y - integral / (2.0 * p.sigma + 2.0);
}

struct Case {
  double sigma, omega, c;
};

const std::vector<Case> kMatrix = {{1.0, 1.0, 0.8717797887081347}, {1.0, 25.0, -9.797958971132712},
                                   {2.0, 1.0, 0.8717797887081347}, {2.0, 25.0, -9.797958971132712},
                                   {2.5, 1.0, 0.8717797887081347}, {2.5, 25.0, -9.797958971132712},
                                   {3.0, 1.0, 0.8717797887081347}, {3.0, 25.0, -9.797958971132712}};

}  // namespace

TEST(Halfwidth, Values) {
  EXPECT_DOUBLE_EQ(halfwidth_h({1.0, 0.0, 0.0, 0.0, 1.0}), 2.0);
  EXPECT_NEAR(halfwidth_h({1.0, 1.0, 0.0, 0.0, 1.0}), std::sqrt(3.0), 1e-15);
  EXPECT_THROW(halfwidth_h({1.0, 2.0, 0.0, 0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(halfwidth_h({1.0, 0.0, 0.0, 0.0, 0.5}), InvalidArgument);
}

TEST(Amplitude, HandValues) {
  EXPECT_NEAR(amplitude_profile({1.0, 0.0, 0.0, 0.0, 1.0}, 0.0), 2.0, 1e-15);
  EXPECT_NEAR(amplitude_profile({1.0, 1.0, 0.0, 0.0, 2.5}, 0.0), std::pow(10.5, 0.2), 1e-14);
  EXPECT_LT(amplitude_profile({1.0, 0.0, 0.0, 0.0, 1.0}, 400.0), 1e-150);
  EXPECT_LT(amplitude_profile({1.0, 0.0, 0.0, 0.0, 1.0}, -400.0), 1e-150);
}

TEST(Amplitude, MatchesDirectFormula) {
  for (const auto& c : kMatrix) {
    const SolitonParams p{c.omega, c.c, 0.0, 0.0, c.sigma};
    for (double y = -5.0; y <= 5.0; y += 0.37) {
      const double ref = amplitude_oracle(p, y);
      EXPECT_NEAR(amplitude_profile(p, y), ref, 1e-13 * ref) << c.sigma << " " << y;
    }
  }
}

TEST(Phase, LeftEdgeAndSech) {
  const SpatialGrid g = build_grid(2048, 40.0);
  const RVec th = phase_theta({1.0, 0.0, 0.0, 0.0, 1.0}, g);
  EXPECT_NEAR(th.front(), 0.0, 1e-15);
  EXPECT_NEAR(th.back(), -kPi / 2.0, 1e-10);
}

TEST(Phase, MatchesClosedForm) {
  const SpatialGrid g = build_grid(4096, 40.0);
  for (const auto& c : kMatrix) {
    const SolitonParams p{c.omega, c.c, 0.0, 0.0, c.sigma};
    const RVec th = phase_theta(p, g);
    // the grid integral starts at -L/2 rather than -infinity
    const double offset = th.front() - phase_oracle(p, g.x(0));
    for (int m = 0; m < g.num_points; m += 17) EXPECT_NEAR(th[m] - offset, phase_oracle(p, g.x(m)), 1e-9);
  }
}

TEST(Field, AtOriginIsComplexProfile) {
  const SpatialGrid g = build_grid(1024, 30.0);
  const SolitonEvaluation ev = evaluate_soliton({1.0, 0.5, 0.0, 0.0, 2.0}, g);
  for (int m = 0; m < g.num_points; ++m) EXPECT_LT(std::abs(ev.field[m] - ev.complex_profile[m]), 1e-15);
}

TEST(Field, ShiftedAndRotated) {
  const SpatialGrid g = build_grid(4096, 40.0);
  const SolitonParams p{1.3, -0.7, 2.5, 0.4, 2.5};
  const double t = 1.7;
  const ComplexField u = soliton_field(p, t, g);
  double worst = 0.0;
  for (int m = 0; m < g.num_points; ++m) {
    const double y = g.x(m) - p.x0 - p.c * t;
    const cplx ref = std::polar(amplitude_oracle(p, y), p.theta0 + p.omega * t + phase_oracle(p, y));
    worst = std::max(worst, std::abs(u[m] - ref));
  }
  EXPECT_LT(worst, 1e-9);
}

// i u_t + u_xx + i |u|^{2s} u_x with u_t from a centred difference of the closed form.
TEST(Field, SolvesEquation) {
  const SpatialGrid g = build_grid(4096, 40.0);
  for (double s : {1.0, 2.5}) {
    const SolitonParams p{1.0, 0.5, 0.0, 0.0, s};
    const double t = 0.3, d = 1e-4;
    const ComplexField a = soliton_field(p, t - d, g), b = soliton_field(p, t + d, g), u = soliton_field(p, t, g);
    const CVec ux = spectral::derivative(u.values, g, 1), uxx = spectral::derivative(u.values, g, 2);
    double worst = 0.0;
    for (int m = 0; m < g.num_points; ++m) {
      const cplx r = kI * (b[m] - a[m]) / (2.0 * d) + uxx[m] + kI * abs2_pow(u[m], s) * ux[m];
      worst = std::max(worst, std::abs(r));
    }
    EXPECT_LT(worst, 1e-6) << s;
  }
}

TEST(OdeResidual, MatrixBelowThreshold) {
  for (const auto& c : kMatrix) {
    const SolitonParams p{c.omega, c.c, 0.0, 0.0, c.sigma};
    // the sharper sigma > 2 profiles need the finer grid
    for (int n : c.sigma > 2.0 ? std::vector<int>{4096} : std::vector<int>{2048, 4096}) {
      const SpatialGrid g = build_grid(n, 40.0);
      EXPECT_LT(profile_ode_residual(p, g), 1e-8) << c.sigma << " " << c.omega << " " << n;
      EXPECT_LT(phi_ode_residual(p, g), 1e-8) << c.sigma << " " << c.omega << " " << n;
    }
  }
}

TEST(OdeResidual, SpecExamples) {
  EXPECT_LT(profile_ode_residual({1.0, 0.0, 0.0, 0.0, 1.0}, build_grid(2048, 40.0)), 1e-8);
  EXPECT_LT(profile_ode_residual({2.0, -1.0, 0.0, 0.0, 2.5}, build_grid(4096, 40.0)), 1e-8);
  EXPECT_LT(phi_ode_residual({1.0, 0.0, 0.0, 0.0, 1.0}, build_grid(2048, 40.0)), 1e-8);
  EXPECT_LT(phi_ode_residual({1.0, 0.5, 0.0, 0.0, 3.0}, build_grid(4096, 40.0)), 1e-8);
  const SpatialGrid g = build_grid(256, 10.0);
  EXPECT_EQ(phi_ode_residual({1.0, 0.5, 0.0, 0.0, 3.0}, ComplexField::zeros(g)), 0.0);
}

TEST(OdeResidual, DetectsPerturbation) {
  const SpatialGrid g = build_grid(2048, 40.0);
  const SolitonParams p{1.0, 0.0, 0.0, 0.0, 1.0};
  RVec phi(g.num_points);
  for (int m = 0; m < g.num_points; ++m) phi[m] = 1.01 * amplitude_profile(p, g.x(m));
  EXPECT_GT(profile_ode_residual(p, g, phi), 1e-3);
}

TEST(Decay, EnvelopePasses) {
  const SpatialGrid g = build_grid(4096, 40.0);
  const DecayReport r = decay_bound_check({1.0, 0.0, 0.0, 0.0, 1.0}, 0.0, g, 3);
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.fitted_constant.size(), 4u);
  for (double cst : r.fitted_constant) EXPECT_TRUE(std::isfinite(cst));
  EXPECT_TRUE(decay_bound_check({1.0, 0.5, 3.0, 0.0, 2.5}, 0.7, g, 3).pass);
}

TEST(Decay, SteeperEnvelopeFails) {
  const SpatialGrid g = build_grid(4096, 40.0);
  EXPECT_FALSE(decay_bound_check({1.0, 0.0, 0.0, 0.0, 1.0}, 0.0, g, 0, 1.0).pass);
}
