#include <gtest/gtest.h>

#include <random>

#include "gdnls/gdnls.hpp"

using namespace gdnls;

namespace {

const cplx kI(0.0, 1.0);

ComplexField plane_wave(const SpatialGrid& g, int j) {
  const double k0 = 2.0 * kPi * j / g.length();
  CVec v(g.num_points);
  for (int m = 0; m < g.num_points; ++m) v[m] = std::exp(kI * k0 * g.x(m));
  return ComplexField(g, v);
}

// sigma = 1, omega = 1, c = 0: |phi|^2 = 4 sech(2y).
ComplexField sech_soliton(const SpatialGrid& g) {
  CVec v(g.num_points);
  for (int m = 0; m < g.num_points; ++m) v[m] = std::sqrt(4.0 / std::cosh(2.0 * g.x(m)));
  return ComplexField(g, v);
}

}  // namespace

TEST(Grid, SmallGridNodes) {
  const SpatialGrid g = build_grid(8, 4.0);
  EXPECT_DOUBLE_EQ(g.spacing, 1.0);
  const RVec x = g.nodes();
  for (int m = 0; m < 8; ++m) EXPECT_DOUBLE_EQ(x[m], -4.0 + m);
}

TEST(Grid, Spacing) { EXPECT_DOUBLE_EQ(build_grid(2048, 40.0).spacing, 0.0390625); }

TEST(Grid, RejectsBadInputs) {
  EXPECT_THROW(build_grid(12, 4.0), InvalidArgument);
  EXPECT_THROW(build_grid(16, 0.0), InvalidArgument);
  EXPECT_THROW(build_grid(16, -1.0), InvalidArgument);
}

TEST(Derivative, PlaneWaveEigenfunction) {
  const SpatialGrid g = build_grid(64, 5.0);
  const int j = 7;
  const double k0 = 2.0 * kPi * j / g.length();
  const ComplexField f = plane_wave(g, j);
  for (int order = 1; order <= 3; ++order) {
    const ComplexField d = spectral_derivative(f, order);
    const cplx factor = std::pow(kI * k0, order);
    for (int m = 0; m < g.num_points; ++m) EXPECT_LT(std::abs(d[m] - factor * f[m]), 1e-11);
  }
}

TEST(Derivative, ConstantGivesZero) {
  const SpatialGrid g = build_grid(32, 3.0);
  const ComplexField f(g, CVec(32, cplx(2.5, -1.0)));
  for (int order = 1; order <= 3; ++order)
    for (const auto& z : spectral_derivative(f, order).values) EXPECT_LT(std::abs(z), 1e-13);
}

TEST(Derivative, RejectsOrder) {
  const SpatialGrid g = build_grid(32, 3.0);
  EXPECT_THROW(spectral_derivative(ComplexField::zeros(g), 4), UnsupportedOrder);
  EXPECT_THROW(spectral_derivative(ComplexField::zeros(g), 0), UnsupportedOrder);
}

TEST(Derivative, SechProfileOde) {
  // f = 2 sech^{1/2}(2y) has f'' = f (3 tanh^2(2y) - 2)
  const SpatialGrid g = build_grid(2048, 40.0);
  const ComplexField f = sech_soliton(g);
  const ComplexField d2 = spectral_derivative(f, 2);
  double worst = 0.0;
  for (int m = 0; m < g.num_points; ++m) {
    const double y = g.x(m), t = std::tanh(2.0 * y);
    const double exact = f[m].real() * (3.0 * t * t - 2.0);
    worst = std::max(worst, std::abs(d2[m].real() - exact));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Antiderivative, OneGivesRamp) {
  const SpatialGrid g = build_grid(64, 2.0);
  const ComplexField r = antiderivative_from_left(ComplexField(g, CVec(64, cplx(1.0, 0.0))));
  for (int m = 0; m < 64; ++m) EXPECT_NEAR(r[m].real(), g.x(m) + g.half_length, 1e-12);
}

TEST(Antiderivative, ZeroGivesZero) {
  const SpatialGrid g = build_grid(64, 2.0);
  for (const auto& z : antiderivative_from_left(ComplexField::zeros(g)).values) EXPECT_EQ(std::abs(z), 0.0);
}

TEST(Antiderivative, SechIntegral) {
  const SpatialGrid g = build_grid(2048, 40.0);
  CVec v(g.num_points);
  for (int m = 0; m < g.num_points; ++m) v[m] = 4.0 / std::cosh(2.0 * g.x(m));
  QuadratureFlag flag;
  const ComplexField r = antiderivative_from_left(ComplexField(g, v), &flag);
  // last node is one spacing short of +L/2; the missing sliver is negligible
  EXPECT_NEAR(r.values.back().real(), 2.0 * kPi, 1e-10);
  EXPECT_FALSE(flag.boundary_mass);
}

TEST(Antiderivative, FlagsBoundaryMass) {
  const SpatialGrid g = build_grid(256, 5.0);
  CVec v(g.num_points);
  for (int m = 0; m < g.num_points; ++m) v[m] = std::exp(-g.x(m) * g.x(m) / 20.0);
  QuadratureFlag flag;
  antiderivative_from_left(ComplexField(g, v), &flag);
  EXPECT_TRUE(flag.boundary_mass);
}

TEST(Norms, Zero) {
  const SpatialGrid g = build_grid(64, 4.0);
  const ComplexField z = ComplexField::zeros(g);
  for (auto k : {NormKind::L2(), NormKind::H1(), NormKind::H2(), NormKind::Linf(), NormKind::Lp(4)})
    EXPECT_EQ(sobolev_norm(z, k), 0.0);
}

TEST(Norms, PlaneWave) {
  const SpatialGrid g = build_grid(128, 6.0);
  const int j = 5;
  const double k0 = 2.0 * kPi * j / g.length();
  const ComplexField f = plane_wave(g, j);
  EXPECT_NEAR(sobolev_norm(f, NormKind::L2()), std::sqrt(g.length()), 1e-12);
  EXPECT_NEAR(sobolev_norm(f, NormKind::Linf()), 1.0, 1e-14);
  EXPECT_NEAR(sobolev_norm(f, NormKind::Lp(6)), std::pow(g.length(), 1.0 / 6.0), 1e-12);
  EXPECT_NEAR(sobolev_norm(f, NormKind::H1()), std::sqrt(g.length() * (1.0 + k0 * k0)), 1e-10);
  EXPECT_NEAR(sobolev_norm(f, NormKind::H2()), std::sqrt(g.length()) * (1.0 + k0 * k0), 1e-9);
}

TEST(Norms, SechMass) {
  const SpatialGrid g = build_grid(2048, 40.0);
  EXPECT_NEAR(sobolev_norm(sech_soliton(g), NormKind::L2()), std::sqrt(2.0 * kPi), 1e-10);
}

TEST(Propagator, IdentityAtZero) {
  const ComplexField f = sech_soliton(build_grid(64, 4.0));
  const ComplexField p = free_propagator_apply(f, 0.0);
  for (int m = 0; m < 64; ++m) EXPECT_LT(std::abs(p[m] - f[m]), 1e-14);
}

TEST(Propagator, UnitaryAndEigen) {
  const SpatialGrid g = build_grid(256, 10.0);
  const ComplexField f = sech_soliton(g);
  const ComplexField p = free_propagator_apply(f, 0.37);
  EXPECT_NEAR(sobolev_norm(p, NormKind::L2()), sobolev_norm(f, NormKind::L2()), 1e-13);
  EXPECT_NEAR(p.time, f.time + 0.37, 1e-15);

  const int j = 3;
  const double k0 = 2.0 * kPi * j / g.length(), dt = 0.21;
  const ComplexField w = plane_wave(g, j);
  const ComplexField q = free_propagator_apply(w, dt);
  for (int m = 0; m < g.num_points; ++m) EXPECT_LT(std::abs(q[m] - std::exp(-kI * k0 * k0 * dt) * w[m]), 1e-12);
}

TEST(Admissible, Pairs) {
  EXPECT_TRUE(is_admissible(kInf, 2.0));
  EXPECT_TRUE(is_admissible(4.0, kInf));
  EXPECT_TRUE(is_admissible(6.0, 6.0));
  EXPECT_TRUE(is_admissible(8.0, 4.0));
  EXPECT_FALSE(is_admissible(2.0, 2.0));
  for (const auto& p : admissible_pairs()) EXPECT_TRUE(is_admissible(p.q, p.r));
}

TEST(MixedNorm, ConstantInTime) {
  const SpatialGrid g = build_grid(256, 10.0);
  const ComplexField f = sech_soliton(g);
  const TimeGrid tg = make_time_grid(0.0, 2.0, 40);
  std::vector<ComplexField> fs(tg.num_nodes(), f);
  EXPECT_NEAR(mixed_spacetime_norm(fs, tg, kInf, 2.0), sobolev_norm(f, NormKind::L2()), 1e-13);
  EXPECT_NEAR(mixed_spacetime_norm(fs, tg, 4.0, kInf), std::pow(2.0, 0.25) * sobolev_norm(f, NormKind::Linf()), 1e-12);
  std::vector<ComplexField> zs(tg.num_nodes(), ComplexField::zeros(g));
  EXPECT_EQ(mixed_spacetime_norm(zs, tg, 6.0, 6.0), 0.0);
  EXPECT_THROW(mixed_spacetime_norm(fs, tg, 2.0, 2.0), InvalidArgument);
}

TEST(MixedNorm, InfTwoIsMaxSnapshot) {
  const SpatialGrid g = build_grid(128, 8.0);
  const TimeGrid tg = make_time_grid(0.0, 1.0, 10);
  std::vector<ComplexField> fs;
  double best = 0.0;
  for (int i = 0; i < tg.num_nodes(); ++i) {
    ComplexField f = sech_soliton(g);
    for (auto& z : f.values) z *= 1.0 + 0.3 * std::sin(1.7 * i);
    best = std::max(best, sobolev_norm(f, NormKind::L2()));
    fs.push_back(f);
  }
  EXPECT_NEAR(mixed_spacetime_norm(fs, tg, kInf, 2.0), best, 1e-13);
}
