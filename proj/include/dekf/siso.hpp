#pragma once

// Lumped SISO models: SOIPTD and FOIPTD transfer-function structures and a
// discrete-time simulator for them. The SOIPTD chain is
//   K_eq / ((T_prop s + 1)(T_drag s + 1)) * 1/s * e^(-tau s)
// and FOIPTD drops the propulsion lag. K_eq is the DC gain from input to the
// integrated state's rate (velocity), matching the identified-parameter
// convention. All of the delay sits in the forward path.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "dekf/errors.hpp"

namespace dekf {

enum class SisoKind { SOIPTD, FOIPTD };

struct SisoParams {
  SisoKind kind = SisoKind::SOIPTD;
  double k_eq = 1.0;     // equivalent gain
  double t_prop = 0.0;   // propulsion lag [s], SOIPTD only
  double t_drag = 1.0;   // drag lag [s] (T_lambda or T_gamma)
  double tau = 0.0;      // forward-path delay [s]

  static SisoParams soiptd(double k, double tp, double td, double delay) {
    return {SisoKind::SOIPTD, k, tp, td, delay};
  }
  static SisoParams foiptd(double k, double td, double delay) {
    return {SisoKind::FOIPTD, k, 0.0, td, delay};
  }

  // Table-of-reference altitude loop parameters.
  static SisoParams reference_altitude() {
    return soiptd(0.2949, 0.0177, 0.5793, 0.053);
  }
  static SisoParams reference_attitude() {
    return soiptd(72.6454, 0.0177, 0.2494, 0.0009);
  }
  static SisoParams reference_lateral() {
    return foiptd(9.81 * 1.1629, 1.1629, 0.053);
  }

  void validate() const {
    if (!(k_eq > 0.0) || t_prop < 0.0 || t_drag < 0.0 || tau < 0.0) {
      throw ConfigError("SisoParams: gains/time constants out of range");
    }
    if (kind == SisoKind::FOIPTD && t_prop != 0.0) {
      throw ConfigError("SisoParams: FOIPTD has no propulsion lag");
    }
  }
};

// Fixed-step simulator for a SisoParams plant. Input is applied zero-order
// hold per step; the delay is a ring buffer of whole samples on the input.
class SisoSim {
 public:
  explicit SisoSim(const SisoParams& p, double dt = 1e-3) : p_(p), dt_(dt) {
    p_.validate();
    delay_samples_ = static_cast<std::size_t>(std::llround(p_.tau / dt_));
    delay_line_.assign(delay_samples_, 0.0);
  }

  // Advance one sample with input u; returns the output y (position-like).
  double step(double u) {
    double ud = u;
    if (delay_samples_ > 0) {
      ud = delay_line_[head_];
      delay_line_[head_] = u;
      head_ = (head_ + 1) % delay_samples_;
    }
    // RK4 on the lag chain; input held constant across the step.
    auto deriv = [&](double x1, double v) {
      double dx1, dv;
      if (p_.kind == SisoKind::SOIPTD && p_.t_prop > 0.0) {
        dx1 = (p_.k_eq * ud - x1) / p_.t_prop;
      } else {
        dx1 = 0.0;
        x1 = p_.k_eq * ud;
      }
      if (p_.t_drag > 0.0) {
        dv = (x1 - v) / p_.t_drag;
      } else {
        dv = 0.0;
        v = x1;
      }
      return std::pair<double, double>(dx1, dv);
    };
    auto value_v = [&](double x1, double v) {
      if (p_.t_drag > 0.0) return v;
      if (p_.kind == SisoKind::SOIPTD && p_.t_prop > 0.0) return x1;
      return p_.k_eq * ud;
    };

    const auto [k1x, k1v] = deriv(x1_, v_);
    const auto [k2x, k2v] = deriv(x1_ + 0.5 * dt_ * k1x, v_ + 0.5 * dt_ * k1v);
    const auto [k3x, k3v] = deriv(x1_ + 0.5 * dt_ * k2x, v_ + 0.5 * dt_ * k2v);
    const auto [k4x, k4v] = deriv(x1_ + dt_ * k3x, v_ + dt_ * k3v);

    const double v0 = value_v(x1_, v_);
    x1_ += dt_ / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v_ += dt_ / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (p_.t_drag <= 0.0) v_ = value_v(x1_, v_);
    // Trapezoidal integration of the output integrator.
    y_ += 0.5 * dt_ * (v0 + value_v(x1_, v_));
    return y_;
  }

  double output() const { return y_; }
  double velocity() const {
    if (p_.t_drag > 0.0) return v_;
    return v_;
  }
  // Acceleration of the output (rate of the integrated state's rate).
  double acceleration() const {
    if (p_.t_drag > 0.0) return (x1_eff() - v_) / p_.t_drag;
    return 0.0;
  }
  double lag_state() const { return x1_; }
  double dt() const { return dt_; }
  const SisoParams& params() const { return p_; }

  void set_state(double x1, double v, double y) {
    x1_ = x1;
    v_ = v;
    y_ = y;
  }

 private:
  double x1_eff() const { return x1_; }

  SisoParams p_;
  double dt_;
  std::size_t delay_samples_ = 0;
  std::vector<double> delay_line_;
  std::size_t head_ = 0;
  double x1_ = 0.0;  // propulsion lag output
  double v_ = 0.0;   // drag lag output (rate of y)
  double y_ = 0.0;   // integrated output
};

// Loop phase of the plant frequency response at omega [rad/s], in radians.
// Used by the describing-function verification hook.
inline double siso_phase(const SisoParams& p, double omega) {
  double ph = -M_PI / 2.0;  // integrator
  if (p.kind == SisoKind::SOIPTD && p.t_prop > 0.0) {
    ph -= std::atan(omega * p.t_prop);
  }
  if (p.t_drag > 0.0) ph -= std::atan(omega * p.t_drag);
  ph -= omega * p.tau;
  return ph;
}

inline double siso_magnitude(const SisoParams& p, double omega) {
  double mag = p.k_eq / omega;
  if (p.kind == SisoKind::SOIPTD && p.t_prop > 0.0) {
    mag /= std::sqrt(1.0 + omega * omega * p.t_prop * p.t_prop);
  }
  if (p.t_drag > 0.0) {
    mag /= std::sqrt(1.0 + omega * omega * p.t_drag * p.t_drag);
  }
  return mag;
}

}  // namespace dekf
