#pragma once

// Modified relay feedback test: relay with hysteresis parameter beta,
// closed-loop excitation, and steady limit-cycle extraction.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "dekf/errors.hpp"
#include "dekf/siso.hpp"

namespace dekf {

struct MrftConfig {
  double h = 1.0;          // relay amplitude [command units]
  double beta = -0.73;     // hysteresis parameter, (-1, 1)
  int min_settled_cycles = 3;
  double period_tolerance = 0.05;     // per-cycle deviation from the median
  double amplitude_tolerance = 0.15;  // per-cycle deviation from the median
  // Refractory interval after each switch, in samples. Measurement noise can
  // sit right on a switching threshold and re-trigger the relay every sample;
  // holding the output briefly rejects those re-crossings. Switches that do
  // occur still satisfy the switching equation at their instant.
  int lock_samples = 0;
  // Noise floor for the process variable. With beta < 0 the switching
  // threshold is a fraction of the running extremum, so while the oscillation
  // amplitude is still at the noise level the threshold sits inside the noise
  // band and the relay flips on noise alone, never letting the cycle grow.
  // Until the extremum on the firing side exceeds this floor, the relay
  // instead behaves as a plain hysteresis relay with band +/- min_amplitude,
  // which forces the oscillation to develop past the floor first.
  double min_amplitude = 0.0;

  double psi() const { return std::asin(beta); }

  void validate() const {
    if (!(h > 0.0) || beta <= -1.0 || beta >= 1.0) {
      throw ConfigError("MrftConfig: h must be > 0 and beta in (-1, 1)");
    }
  }
};

struct MrftState {
  double e_max = 0.0;  // running extrema since the last switch
  double e_min = 0.0;
  double last_u = 1.0;  // sign of the previous command (+1 => +h)
  long samples_since_switch = std::numeric_limits<long>::max();
};

// One relay decision. The relay is a latch that holds its previous output
// until the clause for the opposite output fires:
//   +h -> -h : e <= -b2, with b2 = beta*e_max
//   -h -> +h : e >= b1,  with b1 = -beta*e_min
// where e_max/e_min are the error extrema accumulated since the last switch.
// For beta < 0 a switching threshold sits on the same side of zero as the
// extremum it is derived from, so each clause is armed only once the error
// has actually moved past that extremum; otherwise the threshold would chase
// the error itself and fire immediately after a switch.
inline double mrft_step(double e, MrftState& st, const MrftConfig& cfg) {
  st.e_max = std::max(st.e_max, e);
  st.e_min = std::min(st.e_min, e);
  if (st.samples_since_switch < std::numeric_limits<long>::max()) {
    ++st.samples_since_switch;
  }
  if (st.samples_since_switch < cfg.lock_samples) {
    return st.last_u > 0.0 ? cfg.h : -cfg.h;
  }
  const double b1 = -cfg.beta * st.e_min;
  const double b2 = cfg.beta * st.e_max;

  bool plus;
  if (st.last_u > 0.0) {
    const bool armed =
        cfg.min_amplitude <= 0.0 || st.e_max >= cfg.min_amplitude;
    // Fallback hysteresis switch. Requiring the error to sit a full band
    // below the extremum reached since the switch means it fires during
    // startup (or after a noise-induced premature switch, when the output
    // drives the error away from zero), but not on the tail of a large
    // half-cycle whose own switch just fired beyond the band.
    const bool fire =
        armed ? (e <= -b2 && e < st.e_max)
              : (e <= -cfg.min_amplitude && e <= st.e_max - cfg.min_amplitude);
    plus = !fire;
  } else {
    const bool armed =
        cfg.min_amplitude <= 0.0 || st.e_min <= -cfg.min_amplitude;
    const bool fire =
        armed ? (e >= b1 && e > st.e_min)
              : (e >= cfg.min_amplitude && e >= st.e_min + cfg.min_amplitude);
    plus = fire;
  }
  const double u = plus ? cfg.h : -cfg.h;
  if ((u > 0.0) != (st.last_u > 0.0)) {
    st.last_u = plus ? 1.0 : -1.0;
    st.e_max = e;
    st.e_min = e;
    st.samples_since_switch = 0;
  }
  return u;
}

struct RawWaveforms {
  double sample_period = 1e-3;
  std::vector<double> u;  // relay command
  std::vector<double> y;  // process variable
  double h = 1.0;
};

struct LimitCycle {
  double sample_period = 1e-3;
  std::vector<double> u;
  std::vector<double> y;
  double period = 0.0;  // [s]
  double h = 1.0;
  double y_amplitude = 0.0;  // max |y - mean|
  double u_plus_fraction = 0.5;  // fraction of the cycle spent at +h
};

// Indices of -h -> +h transitions (cycle boundaries).
inline std::vector<std::size_t> rising_switches(const RawWaveforms& w) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 1; i < w.u.size(); ++i) {
    if (w.u[i - 1] < 0.0 && w.u[i] > 0.0) idx.push_back(i);
  }
  return idx;
}

// Drive a plant with the MRFT relay about its current output. The plant is
// any callable double(double u) advancing one sample. Errors out if not even
// one full cycle fits into the requested duration.
template <typename PlantStep>
RawWaveforms run_mrft_loop(PlantStep&& plant, const MrftConfig& cfg,
                           double duration, double dt = 1e-3,
                           double y_initial = 0.0) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  RawWaveforms w;
  w.sample_period = dt;
  w.h = cfg.h;
  w.u.reserve(n);
  w.y.reserve(n);

  MrftState st;
  double y = y_initial;
  const double ref = y_initial;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ref - y;
    const double u = mrft_step(e, st, cfg);
    y = plant(u);
    w.u.push_back(u);
    w.y.push_back(y);
  }
  if (rising_switches(w).size() < 2) {
    throw IdentificationTimeoutError(
        "run_mrft_loop: no full oscillation cycle within duration");
  }
  return w;
}

inline double cycle_amplitude(const std::vector<double>& y, std::size_t a,
                              std::size_t b) {
  double mean = 0.0;
  for (std::size_t i = a; i < b; ++i) mean += y[i];
  mean /= static_cast<double>(b - a);
  double amp = 0.0;
  for (std::size_t i = a; i < b; ++i) amp = std::max(amp, std::abs(y[i] - mean));
  return amp;
}

// Representative cycle of a settled oscillation. Individual switch times
// jitter when the process variable is noisy, so settling is judged on window
// averages: the mean period and mean amplitude over the last
// `min_settled_cycles` complete cycles must agree with the means over the
// preceding window of the same size, within the configured tolerances. The
// cycles of the final window are then resampled to the window's mean length
// and averaged, which also suppresses measurement noise in the returned
// waveform.
inline LimitCycle extract_steady_cycle(const RawWaveforms& w,
                                       const MrftConfig& cfg) {
  const auto idx = rising_switches(w);
  std::vector<double> periods;
  for (std::size_t k = 1; k < idx.size(); ++k) {
    periods.push_back(static_cast<double>(idx[k] - idx[k - 1]) *
                      w.sample_period);
  }
  const auto n_avg = static_cast<std::size_t>(cfg.min_settled_cycles);
  if (periods.size() < 2 * n_avg) {
    throw NotSettledError("extract_steady_cycle: too few cycles", periods);
  }
  const std::size_t m = periods.size();
  auto window_means = [&](std::size_t first) {
    double p_sum = 0.0, a_sum = 0.0;
    for (std::size_t k = first; k < first + n_avg; ++k) {
      p_sum += periods[k];
      a_sum += cycle_amplitude(w.y, idx[k], idx[k + 1]);
    }
    return std::pair<double, double>(p_sum / static_cast<double>(n_avg),
                                     a_sum / static_cast<double>(n_avg));
  };
  const auto [p_prev, a_prev] = window_means(m - 2 * n_avg);
  const auto [p_mean, a_mean] = window_means(m - n_avg);
  if (std::abs(p_mean - p_prev) > cfg.period_tolerance * p_mean) {
    throw NotSettledError("extract_steady_cycle: period not settled", periods);
  }
  if (std::abs(a_mean - a_prev) >
      cfg.amplitude_tolerance * std::max(a_mean, 1e-300)) {
    throw NotSettledError("extract_steady_cycle: amplitude not settled",
                          periods);
  }

  LimitCycle c;
  c.sample_period = w.sample_period;
  c.h = w.h;
  const auto len =
      static_cast<std::size_t>(std::llround(p_mean / w.sample_period));
  c.u.assign(len, 0.0);
  c.y.assign(len, 0.0);
  for (std::size_t k = m - n_avg; k < m; ++k) {
    const std::size_t a = idx[k];
    const std::size_t cl = idx[k + 1] - idx[k];
    for (std::size_t i = 0; i < len; ++i) {
      const double pos = static_cast<double>(i) * static_cast<double>(cl) /
                         static_cast<double>(len);
      const auto lo = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(lo);
      const std::size_t hi = std::min(lo + 1, cl - 1);
      c.u[i] += ((1.0 - frac) * w.u[a + lo] + frac * w.u[a + hi]) /
                static_cast<double>(n_avg);
      c.y[i] += ((1.0 - frac) * w.y[a + lo] + frac * w.y[a + hi]) /
                static_cast<double>(n_avg);
    }
  }
  c.period = p_mean;
  c.y_amplitude = cycle_amplitude(c.y, 0, len);
  std::size_t plus = 0;
  for (double u : c.u) {
    if (u > 0.0) ++plus;
  }
  c.u_plus_fraction = static_cast<double>(plus) / static_cast<double>(c.u.size());
  return c;
}

struct FeatureVector {
  std::vector<double> u;  // scaled by 1/h, zero-padded
  std::vector<double> y;  // mean-removed, scaled by 1/max|y|, zero-padded
  std::size_t cycle_len = 0;
  double sample_period = 1e-3;
  // Scale factors retained for gain recovery.
  double h = 1.0;
  double y_scale = 1.0;
  double y_mean = 0.0;

  double period() const {
    return static_cast<double>(cycle_len) * sample_period;
  }
};

// Decimate a cycle so it fits in n_input samples; the stride is folded into
// the sample period, which downstream consumers read back from the feature.
inline LimitCycle fit_cycle(LimitCycle c, std::size_t n_input) {
  if (c.u.size() <= n_input) return c;
  const std::size_t stride = (c.u.size() + n_input - 1) / n_input;
  LimitCycle d = c;
  d.u.clear();
  d.y.clear();
  for (std::size_t i = 0; i < c.u.size(); i += stride) {
    d.u.push_back(c.u[i]);
    d.y.push_back(c.y[i]);
  }
  d.sample_period = c.sample_period * static_cast<double>(stride);
  return d;
}

// Scale-normalize one cycle and zero-pad both waveforms to n_input samples.
inline FeatureVector normalize_and_pad(const LimitCycle& c,
                                       std::size_t n_input) {
  if (c.u.size() > n_input) {
    throw InputSizeExceededError(
        "normalize_and_pad: cycle longer than feature size");
  }
  FeatureVector f;
  f.cycle_len = c.u.size();
  f.sample_period = c.sample_period;
  f.h = c.h;
  double mean = 0.0;
  for (double v : c.y) mean += v;
  mean /= static_cast<double>(c.y.size());
  f.y_mean = mean;
  double scale = 0.0;
  for (double v : c.y) scale = std::max(scale, std::abs(v - mean));
  f.y_scale = scale > 0.0 ? scale : 1.0;

  f.u.assign(n_input, 0.0);
  f.y.assign(n_input, 0.0);
  for (std::size_t i = 0; i < c.u.size(); ++i) {
    f.u[i] = c.u[i] / c.h;
    f.y[i] = (c.y[i] - mean) / f.y_scale;
  }
  return f;
}

// Resample a cycle's y waveform to n samples over one period (linear
// interpolation), mean-removed. Shared by keyset construction and the
// classifier.
inline std::vector<double> resample_cycle(const std::vector<double>& y,
                                          std::size_t cycle_len,
                                          std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) *
                       static_cast<double>(cycle_len) / static_cast<double>(n);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    const std::size_t hi = std::min(lo + 1, cycle_len - 1);
    out[i] = (1.0 - frac) * y[lo] + frac * y[hi];
  }
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : out) v -= mean;
  return out;
}

}  // namespace dekf
