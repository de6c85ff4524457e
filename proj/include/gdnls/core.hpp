#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdnls {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

inline constexpr double kPi = 3.14159265358979323846;

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedOrder : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by the blow-up sentinel; carries the time at which the step diverged.
struct InstabilityError : NumericalFailure {
  double time;
  InstabilityError(const std::string& what, double t) : NumericalFailure(what), time(t) {}
};

struct InvalidState : std::logic_error {
  using std::logic_error::logic_error;
};

inline bool is_power_of_two(long n) { return n > 0 && (n & (n - 1)) == 0; }

struct SpatialGrid {
  int num_points = 0;
  double half_length = 0.0;
  double spacing = 0.0;

  double length() const { return 2.0 * half_length; }
  double x(int m) const { return -half_length + m * spacing; }
  RVec nodes() const {
    RVec out(num_points);
    for (int m = 0; m < num_points; ++m) out[m] = x(m);
    return out;
  }
  bool operator==(const SpatialGrid& o) const {
    return num_points == o.num_points && half_length == o.half_length;
  }
};

inline SpatialGrid build_grid(int num_points, double half_length) {
  if (num_points < 8 || !is_power_of_two(num_points))
    throw InvalidArgument("grid size must be a power of two >= 8, got " + std::to_string(num_points));
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw InvalidArgument("grid half-length must be positive");
  return SpatialGrid{num_points, half_length, 2.0 * half_length / num_points};
}

// Uniform time grid with num_steps intervals, hence num_steps + 1 nodes.
struct TimeGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  int num_steps = 1;
  double step = 1.0;

  int num_nodes() const { return num_steps + 1; }
  double time(int i) const { return i == num_steps ? t_end : t_start + i * step; }
  RVec times() const {
    RVec out(num_nodes());
    for (int i = 0; i < num_nodes(); ++i) out[i] = time(i);
    return out;
  }
};

inline TimeGrid make_time_grid(double t_start, double t_end, int num_steps) {
  if (!(t_end > t_start)) throw InvalidArgument("time grid needs t_end > t_start");
  if (num_steps < 1) throw InvalidArgument("time grid needs at least one step");
  return TimeGrid{t_start, t_end, num_steps, (t_end - t_start) / num_steps};
}

struct ComplexField {
  SpatialGrid grid;
  CVec values;
  double time = 0.0;

  ComplexField() = default;
  ComplexField(const SpatialGrid& g, CVec v, double t = 0.0) : grid(g), values(std::move(v)), time(t) {
    if (static_cast<int>(values.size()) != grid.num_points)
      throw InvalidArgument("field length does not match grid");
  }
  static ComplexField zeros(const SpatialGrid& g, double t = 0.0) {
    return ComplexField(g, CVec(g.num_points, cplx(0.0, 0.0)), t);
  }
  std::size_t size() const { return values.size(); }
  cplx& operator[](std::size_t i) { return values[i]; }
  const cplx& operator[](std::size_t i) const { return values[i]; }
};

inline bool all_finite(const CVec& v) {
  for (const auto& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

inline bool all_finite(const ComplexField& f) { return all_finite(f.values); }

inline void require_same_grid(const SpatialGrid& a, const SpatialGrid& b) {
  if (!(a == b)) throw InvalidArgument("fields live on different grids");
}

struct NormKind {
  enum class Tag { L2, H1, H2, Linf, Lp };
  Tag tag = Tag::L2;
  double p = 2.0;

  static NormKind L2() { return {Tag::L2, 2.0}; }
  static NormKind H1() { return {Tag::H1, 2.0}; }
  static NormKind H2() { return {Tag::H2, 2.0}; }
  static NormKind Linf() { return {Tag::Linf, INFINITY}; }
  static NormKind Lp(double p) {
    if (!(p >= 1.0)) throw InvalidArgument("Lp norm needs p >= 1");
    return {Tag::Lp, p};
  }
};

// Set by quadratures when the integrand carries mass at the left box edge.
struct QuadratureFlag {
  bool boundary_mass = false;
};

// Pointwise helpers shared by several modules.
inline double abs_pow(cplx z, double e) {
  const double a = std::abs(z);
  if (e == 0.0) return 1.0;
  return std::pow(a, e);
}

// |z|^e with the zero-amplitude guard used for negative exponents.
inline double guarded_abs_pow(cplx z, double e, double floor = 1e-14) {
  const double a = std::abs(z);
  if (e < 0.0 && a < floor) return 0.0;
  if (e == 0.0) return 1.0;
  return std::pow(a, e);
}

}  // namespace gdnls

namespace gdnls {

// |z|^{2s}, with fast paths for the integer exponents that dominate test matrices.
inline double abs2_pow(cplx z, double s) {
  const double n = std::norm(z);
  if (s == 1.0) return n;
  if (s == 2.0) return n * n;
  if (s == 3.0) return n * n * n;
  if (s == 0.0) return 1.0;
  if (s == 0.5) return std::sqrt(n);
  if (s == 1.5) return n * std::sqrt(n);
  if (s == 2.5) return n * n * std::sqrt(n);
  return std::pow(n, s);
}

}  // namespace gdnls
