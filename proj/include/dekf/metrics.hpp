#pragma once

// Trajectory and control-signal metrics: per-channel RMSE, contouring error
// (lag-insensitive path distance), and spectral SNR of command signals.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "dekf/errors.hpp"
#include "dekf/frames.hpp"

namespace dekf {

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw ConfigError("rmse: length mismatch or empty input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

namespace detail {

inline double point_segment_dist2(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).squaredNorm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).squaredNorm();
}

inline std::vector<Vec3> decimate(const std::vector<Vec3>& v,
                                  std::size_t max_n) {
  if (v.size() <= max_n) return v;
  std::vector<Vec3> out;
  const std::size_t stride = (v.size() + max_n - 1) / max_n;
  for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
  if ((v.size() - 1) % stride != 0) out.push_back(v.back());
  return out;
}

}  // namespace detail

// Mean minimum distance from flown samples to the reference polyline.
// Both paths are decimated to keep the pairwise sweep cheap.
inline double contouring_error(const std::vector<Vec3>& path,
                               const std::vector<Vec3>& reference,
                               std::size_t max_samples = 2000) {
  if (path.empty() || reference.size() < 2) {
    throw ConfigError("contouring_error: empty path or degenerate reference");
  }
  const std::vector<Vec3> p = detail::decimate(path, max_samples);
  const std::vector<Vec3> r = detail::decimate(reference, 2 * max_samples);
  double acc = 0.0;
  for (const Vec3& s : p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      best = std::min(best, detail::point_segment_dist2(s, r[i], r[i + 1]));
    }
    acc += std::sqrt(best);
  }
  return acc / static_cast<double>(p.size());
}

namespace detail {

// In-place iterative radix-2 FFT (input zero-padded by the caller).
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl{std::cos(ang), std::sin(ang)};
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w{1.0, 0.0};
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace detail

struct SnrResult {
  double snr_db = 0.0;
  double energy_low = 0.0;
  double energy_high = 0.0;
};

// Spectral SNR of a command signal: energy below the cutoff is treated as
// signal, energy above as noise. The mean is removed first so the DC bin
// does not swamp the low band.
inline SnrResult signal_snr(const std::vector<double>& u, double dt,
                            double cutoff_hz = 5.0) {
  if (u.size() < 4 || dt <= 0.0 || cutoff_hz <= 0.0) {
    throw ConfigError("signal_snr: bad input");
  }
  std::size_t n = 1;
  while (n < u.size()) n <<= 1;
  std::vector<std::complex<double>> a(n, {0.0, 0.0});
  double mean = 0.0;
  for (double v : u) mean += v;
  mean /= static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) a[i] = u[i] - mean;
  detail::fft(a);

  SnrResult r;
  const double df = 1.0 / (static_cast<double>(n) * dt);
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * df;
    const double e = std::norm(a[k]);
    (f <= cutoff_hz ? r.energy_low : r.energy_high) += e;
  }
  if (r.energy_high <= 0.0) {
    r.snr_db = std::numeric_limits<double>::infinity();
  } else {
    r.snr_db = 10.0 * std::log10(r.energy_low / r.energy_high);
  }
  return r;
}

// Lag (in samples, positive = `b` trails `a`) maximizing the cross
// correlation of the mean-removed signals over +/- max_lag samples.
inline long xcorr_lag(const std::vector<double>& a, const std::vector<double>& b,
                      long max_lag) {
  if (a.size() != b.size() || a.size() < 8 || max_lag < 0) {
    throw ConfigError("xcorr_lag: bad input");
  }
  const long n = static_cast<long>(a.size());
  double ma = 0.0, mb = 0.0;
  for (long i = 0; i < n; ++i) {
    ma += a[static_cast<std::size_t>(i)];
    mb += b[static_cast<std::size_t>(i)];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double best = -std::numeric_limits<double>::infinity();
  long best_lag = 0;
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    long count = 0;
    for (long i = std::max(0L, lag); i < std::min(n, n + lag); ++i) {
      acc += (a[static_cast<std::size_t>(i - lag)] - ma) *
             (b[static_cast<std::size_t>(i)] - mb);
      ++count;
    }
    acc /= static_cast<double>(count);
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  return best_lag;
}

}  // namespace dekf
