#pragma once

// Cascaded position/attitude control on top of the fused state estimate.
//
// Outer lateral loops (PD on position error) output desired tilt angles;
// inner attitude loops (PDD) output differential motor commands; the
// altitude loop (PDD) outputs the collective command around hover
// feedforward. Yaw is held at zero with a PD on yaw angle / rate.

#include <algorithm>
#include <cmath>

#include "dekf/errors.hpp"
#include "dekf/estimators.hpp"
#include "dekf/frames.hpp"
#include "dekf/tuning.hpp"

namespace dekf {

struct CascadeGains {
  ControllerGains lat_x;  // PD (kdd unused)
  ControllerGains lat_y;
  ControllerGains att_x;  // PDD
  ControllerGains att_y;
  ControllerGains alt;    // PDD (or PD when pd_altitude)
  double yaw_kp = 2.0;
  double yaw_kd = 0.5;

  // ISE-optimal gains for every loop from the identified lumped models.
  // Normalized gains are capped well below the tuner's default bound so
  // short-delay loops (attitude) stay clear of command saturation.
  static CascadeGains from_models(const FilterModelConfig& m,
                                  bool pd_altitude = false) {
    TuneOptions opt;
    opt.gain_max = 100.0;
    // Outer loops command tilt angles with a hard ceiling, so they get a
    // tighter cap still.
    TuneOptions lat_opt = opt;
    lat_opt.gain_max = 20.0;
    CascadeGains g;
    g.lat_x = tune_optimal(m.lat_x, ControllerFamily::PD, lat_opt);
    g.lat_y = tune_optimal(m.lat_y, ControllerFamily::PD, lat_opt);
    g.att_x = tune_optimal(m.att_x, ControllerFamily::PDD, opt);
    g.att_y = tune_optimal(m.att_y, ControllerFamily::PDD, opt);
    g.alt = tune_optimal(
        m.alt, pd_altitude ? ControllerFamily::PD : ControllerFamily::PDD,
        opt);
    return g;
  }
};

struct ControlLimits {
  double tilt_max = 0.6;      // [rad]
  double u_m_max = 0.4;       // differential command saturation
  double u_t_min = 0.0;
  double u_t_max = 60.0;
};

// kp*e + kd*de + kdd*dde
inline double pdd_law(const ControllerGains& g, double e, double de,
                      double dde) {
  return g.kp * e + g.kd * de + g.kdd * dde;
}

struct ReferencePoint {
  Vec3 p{0, 0, 0};
  Vec3 v{0, 0, 0};
  Vec3 a{0, 0, 0};
  double yaw = 0.0;
};

// Lemniscate-style figure eight in the horizontal plane at fixed altitude.
inline ReferencePoint figure_eight_ref(double t, double size, double period,
                                       double altitude) {
  if (size <= 0.0 || period <= 0.0) throw ConfigError("figure_eight_ref: bad shape");
  const double w = 2.0 * M_PI / period;
  ReferencePoint r;
  r.p = {size * std::sin(w * t), 0.5 * size * std::sin(2.0 * w * t), altitude};
  r.v = {size * w * std::cos(w * t), size * w * std::cos(2.0 * w * t), 0.0};
  r.a = {-size * w * w * std::sin(w * t),
         -2.0 * size * w * w * std::sin(2.0 * w * t), 0.0};
  return r;
}

// Constant-rate climb starting at t=0, then hold.
inline ReferencePoint ramp_ref(double t, double speed, double duration,
                               double altitude) {
  if (duration <= 0.0) throw ConfigError("ramp_ref: bad duration");
  ReferencePoint r;
  const double tc = std::clamp(t, 0.0, duration);
  r.p = {0.0, 0.0, altitude + speed * tc};
  r.v = {0.0, 0.0, t >= 0.0 && t < duration ? speed : 0.0};
  return r;
}

struct ControlCommand {
  double u_t = 0.0;
  Eigen::Vector2d u_m{0, 0};  // roll, pitch differential commands
  double u_yaw = 0.0;
  double roll_des = 0.0;
  double pitch_des = 0.0;
};

class CascadeController {
 public:
  // The hover trim is the absolute collective command at equilibrium; it
  // cannot be recovered from the (incremental) lumped gain when the thrust
  // map is nonlinear, so callers that know it should pass it in.
  CascadeController(const CascadeGains& gains, const FilterModelConfig& models,
                    ControlLimits limits = {}, double hover_feedforward = -1.0)
      : g_(gains), lim_(limits) {
    u_hover_ = hover_feedforward >= 0.0
                   ? hover_feedforward
                   : 9.81 * models.alt.t_drag / models.alt.k_eq;
  }

  double hover_command() const { return u_hover_; }

  ControlCommand step(const ReferencePoint& ref, const FusedRecord& est) const {
    ControlCommand cmd;
    const Vec3 ep = ref.p - est.position;

    // Outer lateral PD -> desired tilt, with reference-velocity feedforward
    // for trajectory tracking. Small angles: a_x ~ +g*pitch, a_y ~ -g*roll
    // (yaw held near zero).
    const double ux =
        pdd_law(g_.lat_x, ep.x(), ref.v.x() - est.velocity.x(), 0.0);
    const double uy =
        pdd_law(g_.lat_y, ep.y(), ref.v.y() - est.velocity.y(), 0.0);
    cmd.pitch_des = std::clamp(ux, -lim_.tilt_max, lim_.tilt_max);
    cmd.roll_des = std::clamp(-uy, -lim_.tilt_max, lim_.tilt_max);

    // Inner attitude PDD on angle error; reference rates taken as zero.
    const double roll = roll_of(est.q);
    const double pitch = pitch_of(est.q);
    const double umx = pdd_law(g_.att_x, cmd.roll_des - roll, -est.omega(0),
                               -est.alpha(0));
    const double umy = pdd_law(g_.att_y, cmd.pitch_des - pitch, -est.omega(1),
                               -est.alpha(1));
    cmd.u_m = {std::clamp(umx, -lim_.u_m_max, lim_.u_m_max),
               std::clamp(umy, -lim_.u_m_max, lim_.u_m_max)};

    // Altitude PDD around hover feedforward, tilt-compensated. Plain
    // setpoint loop: derivative terms act on the estimate only, so the
    // PD-vs-PDD comparison is not masked by reference feedforward.
    const double uz = pdd_law(g_.alt, ep.z(), -est.velocity.z(),
                              -est.world_accel.z());
    const double tilt = std::cos(roll) * std::cos(pitch);
    cmd.u_t = std::clamp((u_hover_ + uz) / std::max(tilt, 0.5), lim_.u_t_min,
                         lim_.u_t_max);

    // Yaw hold.
    const double yaw = yaw_of(est.q);
    cmd.u_yaw = g_.yaw_kp * (ref.yaw - yaw) - g_.yaw_kd * est.yaw_rate;

    return cmd;
  }

 private:
  CascadeGains g_;
  ControlLimits lim_;
  double u_hover_ = 0.0;
};

}  // namespace dekf
