#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>

#include "gdnls/core.hpp"

namespace gdnls::fft {

namespace detail {

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// Plans are created once per size and kept for the process lifetime.
// Creation is serialized; execution through the new-array interface is thread safe.
inline const Plans& plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, Plans> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto* in = fftw_alloc_complex(n);
  auto* out = fftw_alloc_complex(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Plans p;
  p.forward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, flags);
  p.backward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_BACKWARD, flags);
  fftw_free(in);
  fftw_free(out);
  if (!p.forward || !p.backward) throw NumericalFailure("FFTW plan creation failed");
  return cache.emplace(n, p).first->second;
}

inline fftw_complex* as_fftw(const cplx* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
}

}  // namespace detail

// Unnormalized forward transform.
inline void forward(const CVec& in, CVec& out) {
  if (&in == &out) {
    CVec tmp(in);
    forward(tmp, out);
    return;
  }
  out.resize(in.size());
  const auto& p = detail::plans_for(in.size());
  fftw_execute_dft(p.forward, detail::as_fftw(in.data()), detail::as_fftw(out.data()));
}

// Inverse transform including the 1/N factor.
inline void inverse(const CVec& in, CVec& out) {
  if (&in == &out) {
    CVec tmp(in);
    inverse(tmp, out);
    return;
  }
  out.resize(in.size());
  const auto& p = detail::plans_for(in.size());
  fftw_execute_dft(p.backward, detail::as_fftw(in.data()), detail::as_fftw(out.data()));
  const double s = 1.0 / static_cast<double>(in.size());
  for (auto& z : out) z *= s;
}

inline CVec forward(const CVec& in) {
  CVec out;
  forward(in, out);
  return out;
}

inline CVec inverse(const CVec& in) {
  CVec out;
  inverse(in, out);
  return out;
}

}  // namespace gdnls::fft
