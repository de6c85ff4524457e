#pragma once

#include <cstdint>
#include <random>

#include "gdnls/spectral.hpp"

namespace gdnls {

// Band-limited random field: complex Gaussian coefficients on modes |j| <= k_cut
// (mode index units) with taper exp(-2 (j/k_cut)^2), scaled to unit sup norm.
// k_cut <= 0 selects N/8.
inline ComplexField random_band_limited_field(const SpatialGrid& g, std::uint64_t seed, int k_cut = 0) {
  const int n = g.num_points;
  if (k_cut <= 0) k_cut = n / 8;
  if (k_cut >= n / 2) throw InvalidArgument("k_cut must be below N/2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CVec hat(n, cplx(0.0, 0.0));
  for (int j = -k_cut; j <= k_cut; ++j) {
    const double re = normal(rng), im = normal(rng);
    const double taper = std::exp(-2.0 * (static_cast<double>(j) / k_cut) * (static_cast<double>(j) / k_cut));
    hat[(j + n) % n] = taper * cplx(re, im);
  }
  CVec v = fft::inverse(hat);
  double peak = 0.0;
  for (const auto& z : v) peak = std::max(peak, std::abs(z));
  for (auto& z : v) z /= peak;
  return ComplexField(g, std::move(v), 0.0);
}

// The same field multiplied by a Gaussian envelope of width `width` centred at 0.
inline ComplexField random_localized_field(const SpatialGrid& g, std::uint64_t seed, double width, int k_cut = 0) {
  ComplexField f = random_band_limited_field(g, seed, k_cut);
  for (int m = 0; m < g.num_points; ++m) {
    const double x = g.x(m) / width;
    f[m] *= std::exp(-0.5 * x * x);
  }
  return f;
}

}  // namespace gdnls
