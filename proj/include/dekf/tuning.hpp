#pragma once

// ISE performance index, derivative-free optimal tuning, and the relative
// sensitivity function used for key-process set construction.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "dekf/errors.hpp"
#include "dekf/siso.hpp"

namespace dekf {

enum class ControllerFamily { PD, PDD };

struct ControllerGains {
  double kp = 0.0;
  double kd = 0.0;
  double kdd = 0.0;  // zero for PD
};

struct IseScenario {
  double step_amplitude = 1.0;
  double duration = 0.0;  // 0 => auto: 30 * (t_drag + t_prop + tau)
  double dt = 1e-3;
  double cost_cap = 1e7;  // treated as unstable beyond this
};

inline double ise_auto_duration(const SisoParams& p) {
  return 15.0 * (p.t_drag + p.t_prop + p.tau) + 1.0;
}

// Integral square error of a step-reference closed loop: u = Kp e + Kd de +
// Kdd dde, with ideal derivative feedback from the plant states. Unstable
// loops return +inf.
inline double ise_cost(const ControllerGains& g, const SisoParams& plant,
                       IseScenario sc = {}) {
  plant.validate();
  if (sc.duration <= 0.0) sc.duration = ise_auto_duration(plant);
  SisoSim sim(plant, sc.dt);
  const auto n = static_cast<std::size_t>(std::llround(sc.duration / sc.dt));
  const double r = sc.step_amplitude;
  double q = 0.0;
  const double blow_up = 50.0 * std::abs(r) + 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = r - sim.output();
    const double de = -sim.velocity();
    const double dde = -sim.acceleration();
    const double u = g.kp * e + g.kd * de + g.kdd * dde;
    sim.step(u);
    q += e * e * sc.dt;
    if (!std::isfinite(q) || q > sc.cost_cap ||
        std::abs(sim.output()) > blow_up) {
      return std::numeric_limits<double>::infinity();
    }
  }
  // Reject loops that have not converged by the end of the horizon.
  if (std::abs(r - sim.output()) > 0.2 * std::abs(r)) {
    return std::numeric_limits<double>::infinity();
  }
  return q;
}

struct TuneOptions {
  // Time scale used to normalize the plant before optimizing; 0 => auto
  // (the drag time constant when present).
  double time_scale = 0.0;
  double gain_min = 1e-3;  // bounds in normalized gain space
  double gain_max = 1e4;
  int nelder_mead_iters = 220;
  double dt = 1e-3;  // integration step in normalized time
};

namespace detail {

// Nelder-Mead in log-gain space. Deterministic for a fixed start point.
template <typename F>
std::vector<double> nelder_mead(F&& f, std::vector<double> x0, int iters) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += 0.35;
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

  auto order = [&] {
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = i + 1; j <= n; ++j) {
        if (fv[j] < fv[i]) {
          std::swap(fv[i], fv[j]);
          std::swap(simplex[i], simplex[j]);
        }
      }
    }
  };
  order();

  for (int it = 0; it < iters; ++it) {
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) {
        x[j] = centroid[j] + t * (centroid[j] - simplex[n][j]);
      }
      return x;
    };

    auto xr = blend(1.0);
    const double fr = f(xr);
    if (fr < fv[0]) {
      auto xe = blend(2.0);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[n] = xe;
        fv[n] = fe;
      } else {
        simplex[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      simplex[n] = xr;
      fv[n] = fr;
    } else {
      auto xc = blend(fr < fv[n] ? 0.5 : -0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fv[n])) {
        simplex[n] = xc;
        fv[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            simplex[i][j] = 0.5 * (simplex[i][j] + simplex[0][j]);
          }
          fv[i] = f(simplex[i]);
        }
      }
    }
    order();
  }
  return simplex[0];
}

}  // namespace detail

// Normalize a plant to unit drag time constant and unit gain. Gains found on
// the normalized plant map back via:
//   kp = kp_n / (K T),  kd = kd_n / K,  kdd = kdd_n * T / K
inline SisoParams normalize_plant(const SisoParams& p, double time_scale) {
  SisoParams n = p;
  n.k_eq = 1.0;
  n.t_prop = p.t_prop / time_scale;
  n.t_drag = p.t_drag / time_scale;
  n.tau = p.tau / time_scale;
  return n;
}

inline ControllerGains descale_gains(const ControllerGains& gn, double k_eq,
                                     double time_scale) {
  return {gn.kp / (k_eq * time_scale), gn.kd / k_eq,
          gn.kdd * time_scale / k_eq};
}

// ISE-optimal gains by multi-start Nelder-Mead on the normalized plant.
// Deterministic: fixed seed list, best result kept.
inline ControllerGains tune_optimal(const SisoParams& plant,
                                    ControllerFamily family,
                                    TuneOptions opt = {}) {
  plant.validate();
  double ts = opt.time_scale;
  if (ts <= 0.0) {
    ts = plant.t_drag > 0.0 ? plant.t_drag
                            : (plant.t_prop > 0.0 ? plant.t_prop
                                                  : std::max(plant.tau, 1.0));
  }
  const SisoParams np = normalize_plant(plant, ts);
  IseScenario sc;
  sc.dt = opt.dt;

  const std::size_t dim = family == ControllerFamily::PDD ? 3 : 2;
  const double lo = std::log(opt.gain_min);
  const double hi = std::log(opt.gain_max);

  auto objective = [&](const std::vector<double>& logg) {
    ControllerGains g;
    for (double v : logg) {
      if (v < lo || v > hi || !std::isfinite(v)) {
        return std::numeric_limits<double>::infinity();
      }
    }
    g.kp = std::exp(logg[0]);
    g.kd = std::exp(logg[1]);
    g.kdd = dim == 3 ? std::exp(logg[2]) : 0.0;
    return ise_cost(g, np, sc);
  };

  // Seeds spread over the stabilizing region of typical normalized loops.
  static constexpr std::array<std::array<double, 3>, 5> kSeeds = {{
      {0.3, 0.8, 0.1},
      {1.0, 2.0, 0.3},
      {3.0, 6.0, 1.0},
      {0.1, 0.3, 0.03},
      {8.0, 20.0, 3.0},
  }};

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  for (const auto& seed : kSeeds) {
    std::vector<double> x0(dim);
    for (std::size_t i = 0; i < dim; ++i) x0[i] = std::log(seed[i]);
    if (!std::isfinite(objective(x0))) continue;
    auto x = detail::nelder_mead(objective, x0, opt.nelder_mead_iters);
    const double fx = objective(x);
    if (fx < best) {
      best = fx;
      best_x = x;
    }
  }
  if (!std::isfinite(best)) {
    throw TuningFailedError("tune_optimal: no stabilizing seed found");
  }
  ControllerGains gn;
  gn.kp = std::exp(best_x[0]);
  gn.kd = std::exp(best_x[1]);
  gn.kdd = dim == 3 ? std::exp(best_x[2]) : 0.0;
  return descale_gains(gn, plant.k_eq, ts);
}

// Relative sensitivity J(d_bar, d) in percent: ISE degradation of running
// d_bar's optimal controller on the actual process d.
inline double relative_sensitivity(const SisoParams& d_bar, const SisoParams& d,
                                   ControllerFamily family,
                                   TuneOptions opt = {}) {
  const ControllerGains c_dbar = tune_optimal(d_bar, family, opt);
  const ControllerGains c_d = tune_optimal(d, family, opt);
  IseScenario sc;
  const double q_cross = ise_cost(c_dbar, d, sc);
  const double q_opt = ise_cost(c_d, d, sc);
  if (!std::isfinite(q_cross)) {
    return std::numeric_limits<double>::infinity();
  }
  return (q_cross - q_opt) / q_opt * 100.0;
}

}  // namespace dekf
