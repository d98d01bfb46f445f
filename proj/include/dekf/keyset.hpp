#pragma once

// Key-process set: a log-spaced grid over normalized SISO parameter ratios,
// with per-entry ISE-optimal gains and reference limit cycles. Classification
// is nearest-neighbor by normalized cross-correlation over time-aligned
// reference cycles; the equivalent gain and absolute time scale are recovered
// from the measured cycle's amplitude and period.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dekf/errors.hpp"
#include "dekf/mrft.hpp"
#include "dekf/siso.hpp"
#include "dekf/tuning.hpp"

namespace dekf {

struct ParamBounds {
  double t_prop_min = 0.0, t_prop_max = 0.0;  // ignored for FOIPTD
  double t_drag_min = 1.0, t_drag_max = 1.0;
  double tau_min = 0.0, tau_max = 0.0;

  static ParamBounds around(const SisoParams& p, double factor) {
    ParamBounds b;
    b.t_prop_min = p.t_prop / factor;
    b.t_prop_max = p.t_prop * factor;
    b.t_drag_min = p.t_drag / factor;
    b.t_drag_max = p.t_drag * factor;
    b.tau_min = p.tau / factor;
    b.tau_max = p.tau * factor;
    return b;
  }
};

struct GridSpec {
  int n_prop = 7;  // grid points along T_prop/T_drag (SOIPTD only)
  int n_tau = 13;  // grid points along tau/T_drag
  int n_ref_samples = 256;
  int n_verify = 100;
  unsigned long long verify_seed = 1;
  bool run_verification = true;
};

struct KeysetEntry {
  double r_prop = 0.0;  // T_prop / T_drag
  double r_tau = 0.0;   // tau / T_drag
  ControllerGains gains_norm;  // tuned on the unit-gain, unit-drag plant
  double t_cyc_norm = 0.0;     // limit-cycle period, normalized time
  double amp_norm = 0.0;       // cycle amplitude at K=1, h=1
  double u_plus_fraction = 0.5;
  std::vector<double> ref_y;   // mean-removed resampled cycle
};

struct KeyProcessSet {
  int version = 1;
  SisoKind kind = SisoKind::SOIPTD;
  double beta = -0.73;
  GridSpec grid;
  ParamBounds bounds;
  std::vector<KeysetEntry> entries;
};

struct ClassifyResult {
  std::size_t index = 0;
  SisoParams recovered;
  double score = 0.0;
};

namespace detail {

inline std::vector<double> log_space(double lo, double hi, int n) {
  std::vector<double> v;
  if (n <= 1 || hi <= lo * (1.0 + 1e-12)) {
    v.push_back(std::sqrt(lo * hi));
    return v;
  }
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    v.push_back(lo * std::pow(hi / lo, t));
  }
  return v;
}

inline SisoParams normalized_of(SisoKind kind, double r_prop, double r_tau) {
  if (kind == SisoKind::SOIPTD) return SisoParams::soiptd(1.0, r_prop, 1.0, r_tau);
  return SisoParams::foiptd(1.0, 1.0, r_tau);
}

// Limit cycle of the normalized plant under MRFT.
inline LimitCycle reference_cycle(const SisoParams& np, double beta) {
  MrftConfig cfg;
  cfg.h = 1.0;
  cfg.beta = beta;
  const double dt = std::min(1e-3, np.tau > 0.0 ? np.tau / 20.0 : 1e-3);
  SisoSim sim(np, dt);
  double duration = 60.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    SisoSim s(np, dt);
    auto w = run_mrft_loop([&](double u) { return s.step(u); }, cfg, duration,
                           dt);
    try {
      return extract_steady_cycle(w, cfg);
    } catch (const NotSettledError&) {
      duration *= 2.0;
    }
  }
  SisoSim s(np, dt);
  auto w = run_mrft_loop([&](double u) { return s.step(u); }, cfg, duration, dt);
  return extract_steady_cycle(w, cfg);  // let the error propagate
}

inline std::vector<double> l2_normalized(std::vector<double> v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double s = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 1.0;
  for (double& x : v) x *= s;
  return v;
}

// Max dot product over a small window of circular shifts.
inline double aligned_correlation(const std::vector<double>& a,
                                  const std::vector<double>& b) {
  const std::size_t n = a.size();
  const long w = static_cast<long>(n / 16);
  double best = -2.0;
  for (long shift = -w; shift <= w; ++shift) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j =
          static_cast<std::size_t>((static_cast<long>(i) + shift +
                                    static_cast<long>(n)) %
                                   static_cast<long>(n));
      dot += a[i] * b[j];
    }
    best = std::max(best, dot);
  }
  return best;
}

}  // namespace detail

// Relative sensitivity evaluated in the actual process's normalized space,
// reusing pre-tuned normalized gains for the key process.
inline double sensitivity_vs_entry(const ControllerGains& entry_gains_norm,
                                   const SisoParams& d, double q_opt_norm,
                                   const SisoParams& d_norm) {
  const double q_cross = ise_cost(entry_gains_norm, d_norm);
  if (!std::isfinite(q_cross)) return std::numeric_limits<double>::infinity();
  (void)d;
  return (q_cross - q_opt_norm) / q_opt_norm * 100.0;
}

inline ControllerFamily family_of(SisoKind kind) {
  return kind == SisoKind::SOIPTD ? ControllerFamily::PDD
                                  : ControllerFamily::PD;
}

// Build the discretized key-process set over the given absolute bounds, then
// verify the covering criterion (min over entries of J < 10%) on randomly
// sampled processes.
inline KeyProcessSet build_key_processes(SisoKind kind,
                                         const ParamBounds& bounds,
                                         const GridSpec& grid,
                                         double beta = -0.73) {
  KeyProcessSet set;
  set.kind = kind;
  set.beta = beta;
  set.grid = grid;
  set.bounds = bounds;

  const double rp_lo = kind == SisoKind::SOIPTD
                           ? bounds.t_prop_min / bounds.t_drag_max
                           : 0.0;
  const double rp_hi = kind == SisoKind::SOIPTD
                           ? bounds.t_prop_max / bounds.t_drag_min
                           : 0.0;
  const double rt_lo = bounds.tau_min / bounds.t_drag_max;
  const double rt_hi = bounds.tau_max / bounds.t_drag_min;

  const auto rp_grid = kind == SisoKind::SOIPTD
                           ? detail::log_space(rp_lo, rp_hi, grid.n_prop)
                           : std::vector<double>{0.0};
  const auto rt_grid = detail::log_space(rt_lo, rt_hi, grid.n_tau);

  const ControllerFamily family = family_of(kind);
  for (double rp : rp_grid) {
    for (double rt : rt_grid) {
      KeysetEntry e;
      e.r_prop = rp;
      e.r_tau = rt;
      const SisoParams np = detail::normalized_of(kind, rp, rt);
      e.gains_norm = tune_optimal(np, family, TuneOptions{.time_scale = 1.0});
      const LimitCycle c = detail::reference_cycle(np, beta);
      e.t_cyc_norm = c.period;
      e.amp_norm = c.y_amplitude;
      e.u_plus_fraction = c.u_plus_fraction;
      e.ref_y = resample_cycle(c.y, c.y.size(),
                               static_cast<std::size_t>(grid.n_ref_samples));
      set.entries.push_back(std::move(e));
    }
  }

  if (grid.run_verification) {
    std::mt19937_64 rng(grid.verify_seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto log_uniform = [&](double lo, double hi) {
      if (hi <= lo * (1.0 + 1e-12)) return lo;
      return lo * std::pow(hi / lo, uni(rng));
    };
    double worst = 0.0;
    SisoParams worst_d;
    for (int i = 0; i < grid.n_verify; ++i) {
      SisoParams d;
      d.kind = kind;
      d.k_eq = 1.0;  // gain handled by cycle normalization
      d.t_prop = kind == SisoKind::SOIPTD
                     ? log_uniform(bounds.t_prop_min, bounds.t_prop_max)
                     : 0.0;
      d.t_drag = log_uniform(bounds.t_drag_min, bounds.t_drag_max);
      d.tau = log_uniform(bounds.tau_min, bounds.tau_max);

      const SisoParams dn = normalize_plant(d, d.t_drag);
      const ControllerGains c_d =
          tune_optimal(dn, family, TuneOptions{.time_scale = 1.0});
      const double q_opt = ise_cost(c_d, dn);

      // Try entries nearest in log-ratio space first.
      std::vector<std::size_t> order(set.entries.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      auto dist = [&](const KeysetEntry& e) {
        double dd = std::pow(std::log(std::max(e.r_tau, 1e-12) /
                                      std::max(dn.tau, 1e-12)),
                             2.0);
        if (kind == SisoKind::SOIPTD) {
          dd += std::pow(std::log(std::max(e.r_prop, 1e-12) /
                                  std::max(dn.t_prop, 1e-12)),
                         2.0);
        }
        return dd;
      };
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dist(set.entries[a]) < dist(set.entries[b]);
      });

      double min_j = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& e = set.entries[order[k]];
        min_j = std::min(
            min_j, sensitivity_vs_entry(e.gains_norm, d, q_opt, dn));
        if (k >= 3 && min_j < 10.0) break;  // nearest entries usually suffice
      }
      if (min_j > worst) {
        worst = min_j;
        worst_d = d;
      }
      if (!(min_j < 10.0)) {
        throw GridTooCoarseError(
            "build_key_processes: covering criterion violated (J=" +
                std::to_string(min_j) + "% at T_prop=" +
                std::to_string(d.t_prop) + " T_drag=" +
                std::to_string(d.t_drag) + " tau=" + std::to_string(d.tau) +
                ")",
            min_j);
      }
    }
  }
  return set;
}

inline ClassifyResult classify_cycle(const FeatureVector& f,
                                     const KeyProcessSet& set) {
  if (set.entries.empty()) {
    throw ConfigError("classify_cycle: empty key-process set");
  }
  const std::size_t n_ref = set.entries.front().ref_y.size();
  std::vector<double> y_cycle(f.y.begin(),
                              f.y.begin() + static_cast<long>(f.cycle_len));
  const auto probe =
      detail::l2_normalized(resample_cycle(y_cycle, f.cycle_len, n_ref));

  double best_score = -2.0;
  std::size_t best_idx = 0;
  for (std::size_t k = 0; k < set.entries.size(); ++k) {
    const auto ref = detail::l2_normalized(set.entries[k].ref_y);
    const double s = detail::aligned_correlation(probe, ref);
    if (s > best_score) {
      best_score = s;
      best_idx = k;
    }
  }

  const auto& e = set.entries[best_idx];
  ClassifyResult r;
  r.index = best_idx;
  r.score = best_score;
  const double t_drag = f.period() / e.t_cyc_norm;
  const double k_eq = f.y_scale / (f.h * t_drag * e.amp_norm);
  r.recovered = set.kind == SisoKind::SOIPTD
                    ? SisoParams::soiptd(k_eq, e.r_prop * t_drag, t_drag,
                                         e.r_tau * t_drag)
                    : SisoParams::foiptd(k_eq, t_drag, e.r_tau * t_drag);
  return r;
}

// ---- persistence (versioned JSON) ----

inline nlohmann::json keyset_to_json(const KeyProcessSet& set) {
  nlohmann::json j;
  j["version"] = set.version;
  j["kind"] = set.kind == SisoKind::SOIPTD ? "SOIPTD" : "FOIPTD";
  j["beta"] = set.beta;
  j["grid"] = {{"n_prop", set.grid.n_prop},
               {"n_tau", set.grid.n_tau},
               {"n_ref_samples", set.grid.n_ref_samples}};
  j["bounds"] = {{"t_prop_min", set.bounds.t_prop_min},
                 {"t_prop_max", set.bounds.t_prop_max},
                 {"t_drag_min", set.bounds.t_drag_min},
                 {"t_drag_max", set.bounds.t_drag_max},
                 {"tau_min", set.bounds.tau_min},
                 {"tau_max", set.bounds.tau_max}};
  j["entries"] = nlohmann::json::array();
  for (const auto& e : set.entries) {
    j["entries"].push_back({{"r_prop", e.r_prop},
                            {"r_tau", e.r_tau},
                            {"kp", e.gains_norm.kp},
                            {"kd", e.gains_norm.kd},
                            {"kdd", e.gains_norm.kdd},
                            {"t_cyc_norm", e.t_cyc_norm},
                            {"amp_norm", e.amp_norm},
                            {"u_plus_fraction", e.u_plus_fraction},
                            {"ref_y", e.ref_y}});
  }
  return j;
}

inline KeyProcessSet keyset_from_json(const nlohmann::json& j) {
  KeyProcessSet set;
  set.version = j.at("version").get<int>();
  if (set.version != 1) {
    throw ConfigError("keyset: unsupported version " +
                      std::to_string(set.version));
  }
  set.kind = j.at("kind").get<std::string>() == "SOIPTD" ? SisoKind::SOIPTD
                                                         : SisoKind::FOIPTD;
  set.beta = j.at("beta").get<double>();
  set.grid.n_prop = j.at("grid").at("n_prop").get<int>();
  set.grid.n_tau = j.at("grid").at("n_tau").get<int>();
  set.grid.n_ref_samples = j.at("grid").at("n_ref_samples").get<int>();
  const auto& b = j.at("bounds");
  set.bounds = {b.at("t_prop_min"), b.at("t_prop_max"), b.at("t_drag_min"),
                b.at("t_drag_max"), b.at("tau_min"), b.at("tau_max")};
  for (const auto& je : j.at("entries")) {
    KeysetEntry e;
    e.r_prop = je.at("r_prop");
    e.r_tau = je.at("r_tau");
    e.gains_norm = {je.at("kp"), je.at("kd"), je.at("kdd")};
    e.t_cyc_norm = je.at("t_cyc_norm");
    e.amp_norm = je.at("amp_norm");
    e.u_plus_fraction = je.at("u_plus_fraction");
    e.ref_y = je.at("ref_y").get<std::vector<double>>();
    set.entries.push_back(std::move(e));
  }
  return set;
}

inline void save_keyset(const KeyProcessSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_keyset: cannot write " + path);
  out << keyset_to_json(set).dump(1) << "\n";
}

inline KeyProcessSet load_keyset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_keyset: cannot read " + path);
  nlohmann::json j;
  in >> j;
  return keyset_from_json(j);
}

}  // namespace dekf
