#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "gdnls/evolution.hpp"

namespace gdnls::io {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write '" + path + "'");
    row_strings(header);
  }
  void row(const RVec& values) {
    std::vector<std::string> s;
    for (double v : values) s.push_back(fmt(v));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// Snapshot container, little-endian throughout:
//   "GDNLSNAP" | u32 version | u32 N | f64 L | f64 sigma | f64 dt | u32 tag length | tag bytes | u64 count
//   then per snapshot: f64 time, N interleaved (re, im) f64 pairs.
struct SnapshotHeader {
  std::uint32_t num_points = 0;
  double length = 0.0;
  double sigma = 1.0;
  double dt = 0.0;
  std::string scheme_tag;
};

namespace detail {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

template <class T>
void put(std::ostream& o, T v) {
  v = to_little(v);
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated snapshot container");
  return to_little(v);
}

inline constexpr char kMagic[8] = {'G', 'D', 'N', 'L', 'S', 'N', 'A', 'P'};

}  // namespace detail

inline void write_snapshots(const std::string& path, const SnapshotHeader& h, const RVec& times,
                            const std::vector<ComplexField>& snaps) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write '" + path + "'");
  o.write(detail::kMagic, 8);
  detail::put<std::uint32_t>(o, 1);
  detail::put<std::uint32_t>(o, h.num_points);
  detail::put<double>(o, h.length);
  detail::put<double>(o, h.sigma);
  detail::put<double>(o, h.dt);
  detail::put<std::uint32_t>(o, static_cast<std::uint32_t>(h.scheme_tag.size()));
  o.write(h.scheme_tag.data(), static_cast<std::streamsize>(h.scheme_tag.size()));
  detail::put<std::uint64_t>(o, snaps.size());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    if (snaps[i].size() != h.num_points) throw InvalidArgument("snapshot length does not match header");
    detail::put<double>(o, times[i]);
    for (const auto& z : snaps[i].values) {
      detail::put<double>(o, z.real());
      detail::put<double>(o, z.imag());
    }
  }
}

inline void write_trajectory(const std::string& path, const Trajectory& tr, double sigma, double dt,
                             const std::string& tag) {
  if (tr.snapshots.empty()) throw InvalidArgument("empty trajectory");
  const auto& g = tr.snapshots.front().grid;
  write_snapshots(path, {static_cast<std::uint32_t>(g.num_points), g.length(), sigma, dt, tag}, tr.times,
                  tr.snapshots);
}

struct SnapshotFile {
  SnapshotHeader header;
  RVec times;
  std::vector<ComplexField> snapshots;
};

inline SnapshotFile read_snapshots(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kMagic, 8) != 0) throw std::runtime_error("not a snapshot container");
  if (detail::take<std::uint32_t>(in) != 1) throw std::runtime_error("unsupported container version");
  SnapshotFile f;
  f.header.num_points = detail::take<std::uint32_t>(in);
  f.header.length = detail::take<double>(in);
  f.header.sigma = detail::take<double>(in);
  f.header.dt = detail::take<double>(in);
  const auto tag_len = detail::take<std::uint32_t>(in);
  f.header.scheme_tag.resize(tag_len);
  in.read(f.header.scheme_tag.data(), tag_len);
  const auto count = detail::take<std::uint64_t>(in);
  const SpatialGrid g = build_grid(static_cast<int>(f.header.num_points), 0.5 * f.header.length);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double t = detail::take<double>(in);
    CVec v(f.header.num_points);
    for (auto& z : v) {
      const double re = detail::take<double>(in);
      const double im = detail::take<double>(in);
      z = cplx(re, im);
    }
    f.times.push_back(t);
    f.snapshots.emplace_back(g, std::move(v), t);
  }
  return f;
}

}  // namespace gdnls::io
