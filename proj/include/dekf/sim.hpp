#pragma once

// Ground-truth nonlinear quadrotor plant: rigid-body dynamics with per-rotor
// thrust, motion-inflow and profile drag, reaction torques, gyroscopic and
// blade-flapping moments, first-order motor lag with command delay, and
// synthetic multi-rate sensors.

#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "dekf/errors.hpp"
#include "dekf/frames.hpp"
#include "dekf/siso.hpp"

namespace dekf {

struct PhysicalParams {
  double m = 1.0;                    // [kg]
  Vec3 inertia{5e-3, 5e-3, 9e-3};    // diag(I_x, I_y, I_z) [kg m^2]
  double k_t = 2.64e-6;              // thrust coefficient [N s^2/rad^2]
  double k_c = 25.0;                 // command -> rotor speed [rad/s per unit]
  double k_m = 4.2e-8;               // reaction torque coefficient [N m s^2/rad^2]
  double k_f = 1e-6;                 // blade flapping coefficient
  double c_r = 0.0;                  // rotor inflow constant
  Vec3 lambda_b{0.86, 0.86, 1.55};   // profile drag, translation [N s/m]
  Vec3 gamma_b{0.018, 0.018, 0.002}; // profile drag, rotation [N m s/rad]
  double arm_length = 0.15;          // rotor distance from CoM [m]
  double motor_time_constant = 0.0177;  // T_m [s]
  double motor_delay = 0.001;           // command delay [s]
  double mix_gain_attitude = 1.0;    // differential-command scale (roll/pitch)
  double mix_gain_yaw = 1.0;
  double gravity = 9.81;
  // Optional exogenous effective-thrust drift (fractional k_T ramp per
  // second), exercises the thrust bias state.
  double k_t_drift_rate = 0.0;
  // Constant IMU biases, default zero (calibrated sensors).
  Vec3 gyro_bias{0.0, 0.0, 0.0};
  Vec3 accel_bias{0.0, 0.0, 0.0};

  // "X" configuration: rotor i at 45 deg between body axes.
  std::array<Vec3, 4> rotor_positions() const {
    const double a = arm_length / std::sqrt(2.0);
    return {Vec3{a, -a, 0}, Vec3{a, a, 0}, Vec3{-a, a, 0}, Vec3{-a, -a, 0}};
  }
  static constexpr std::array<double, 4> rotor_directions() {
    return {+1.0, -1.0, +1.0, -1.0};  // two CW, two CCW
  }
  // Mixer signs per motor for (roll, pitch, yaw) differential commands.
  static constexpr std::array<double, 4> roll_signs() {
    return {-1.0, +1.0, +1.0, -1.0};  // sign(y_i)
  }
  static constexpr std::array<double, 4> pitch_signs() {
    return {-1.0, -1.0, +1.0, +1.0};  // -sign(x_i)
  }
  static constexpr std::array<double, 4> yaw_signs() {
    return {-1.0, +1.0, -1.0, +1.0};  // -d(i)
  }

  double hover_rotor_speed() const {
    return std::sqrt(m * gravity / (4.0 * k_t));
  }
  double hover_command() const { return hover_rotor_speed() / k_c; }

  void validate() const {
    if (!(m > 0.0) || !(inertia.minCoeff() > 0.0) ||
        !(motor_time_constant > 0.0) || !(k_t > 0.0) || !(k_c > 0.0)) {
      throw ConfigError("PhysicalParams: non-positive mass/inertia/constants");
    }
  }

  // Default airframe, constructed so that the linearized loops reproduce the
  // reference identified parameters:
  //   altitude:  K_eq_z = 0.2949, T_prop = T_m = 0.0177 s, T_lambda_z = 0.5793 s
  //   attitude:  K_eq = 72.6454,  T_gamma = 0.2494 s
  //   lateral:   T_lambda_xy = 1.1629 s
  // Closed-form inversion; see lumped_from_physical for the forward map.
  static PhysicalParams reference() {
    PhysicalParams p;
    const double k_eq_z = 0.2949, t_lam_z = 0.5793;
    const double k_eq_att = 72.6454, t_gam = 0.2494;
    const double t_lam_xy = 1.1629;

    p.m = 1.0;
    p.k_c = 25.0;
    p.motor_time_constant = 0.0177;
    p.motor_delay = 0.001;
    p.inertia = Vec3{5e-3, 5e-3, 9e-3};
    p.arm_length = 0.15;

    // Incremental collective thrust gain: P = 8 k_T mu_h k_C = K_eq_z m / T_lambda_z
    const double gain_p = k_eq_z * p.m / t_lam_z;
    const double mu_h = 2.0 * p.m * p.gravity * p.k_c / gain_p;
    p.k_t = p.m * p.gravity / (4.0 * mu_h * mu_h);
    p.k_m = 0.016 * p.k_t;

    // Vertical damping m/T_lambda_z split 10% rotor inflow, 90% profile drag.
    const double damp_z = p.m / t_lam_z;
    p.c_r = 0.1 * damp_z / (4.0 * mu_h);
    p.lambda_b = Vec3{p.m / t_lam_xy, p.m / t_lam_xy, 0.9 * damp_z};

    // Rotational damping I_x/T_gamma = inflow + profile.
    const double inflow_rot =
        2.0 * p.c_r * mu_h * p.arm_length * p.arm_length;
    const double gam = p.inertia.x() / t_gam - inflow_rot;
    p.gamma_b = Vec3{gam, gam, gam};

    // Attitude channel mixer gain chosen to reproduce the identified K_eq.
    const double dm_du = gain_p * p.arm_length / std::sqrt(2.0);
    p.mix_gain_attitude = k_eq_att * p.inertia.x() / (dm_du * t_gam);
    p.mix_gain_yaw = p.mix_gain_attitude;
    p.k_f = 1e-6;
    return p;
  }
};

// Forward map from physical to lumped SISO parameters (linearized at hover).
struct LumpedLoops {
  SisoParams altitude;
  SisoParams attitude_x;
  SisoParams lateral_x;
};

inline LumpedLoops lumped_from_physical(const PhysicalParams& p,
                                        double position_sensor_delay = 0.052) {
  const double mu_h = p.hover_rotor_speed();
  const double gain_p = 8.0 * p.k_t * mu_h * p.k_c;  // N per collective unit
  const double t_lam_z = p.m / (4.0 * p.c_r * mu_h + p.lambda_b.z());
  const double k_eq_z = gain_p * t_lam_z / p.m;
  const double tau_z = p.motor_delay + position_sensor_delay;

  const double inflow_rot = 2.0 * p.c_r * mu_h * p.arm_length * p.arm_length;
  const double t_gam = p.inertia.x() / (inflow_rot + p.gamma_b.x());
  const double dm_du =
      gain_p * p.arm_length / std::sqrt(2.0) * p.mix_gain_attitude;
  const double k_eq_att = dm_du * t_gam / p.inertia.x();

  const double t_lam_x = p.m / p.lambda_b.x();
  const double k_lat = p.gravity * t_lam_x;

  LumpedLoops l;
  l.altitude = SisoParams::soiptd(k_eq_z, p.motor_time_constant, t_lam_z, tau_z);
  l.attitude_x =
      SisoParams::soiptd(k_eq_att, p.motor_time_constant, t_gam, p.motor_delay);
  l.lateral_x = SisoParams::foiptd(k_lat, t_lam_x, position_sensor_delay);
  return l;
}

struct PlantState {
  Vec3 p_w{0, 0, 0};
  Vec3 v_w{0, 0, 0};
  Quaternion q;  // body -> world
  Vec3 omega_b{0, 0, 0};
  std::array<double, 4> rotor_speed{0, 0, 0, 0};  // [rad/s]

  bool finite() const {
    bool ok = p_w.allFinite() && v_w.allFinite() && omega_b.allFinite() &&
              std::isfinite(q.norm());
    for (double mu : rotor_speed) ok = ok && std::isfinite(mu);
    return ok;
  }
};

// Exact discrete first-order motor response toward k_C * cmd.
inline double motor_dynamics_step(double mu, double cmd,
                                  const PhysicalParams& p, double dt) {
  const double a = 1.0 - std::exp(-dt / p.motor_time_constant);
  return mu + a * (p.k_c * cmd - mu);
}

namespace detail {

struct BodyForcesMoments {
  Vec3 force_bs;  // contact/aero forces in body frame (gravity excluded)
  Vec3 moment;
};

inline BodyForcesMoments forces_moments(const PlantState& s,
                                        const PhysicalParams& p,
                                        double k_t_scale) {
  const auto r = p.rotor_positions();
  const auto d = PhysicalParams::rotor_directions();
  const RotMat3 R = quat_to_rotmat(s.q);
  const Vec3 v_b = R.transpose() * s.v_w;

  Vec3 force{0, 0, 0};
  Vec3 moment{0, 0, 0};
  for (int i = 0; i < 4; ++i) {
    const double mu = s.rotor_speed[i];
    const Vec3 v_hub = v_b + s.omega_b.cross(r[i]);
    // Thrust with motion-inflow increment.
    const double f_i = k_t_scale * p.k_t * mu * mu + p.c_r * mu * v_hub.z();
    const Vec3 f_vec{0, 0, f_i};
    force += f_vec;
    moment += r[i].cross(f_vec);
    moment -= Vec3{0, 0, d[i] * p.k_m * mu * mu};
    // Blade flapping moment.
    moment += p.k_f * mu * v_hub.cross(Vec3{0, 0, 1});
  }
  // Profile drag (translation and rotation) and gyroscopic moment.
  force -= Vec3(p.lambda_b.array() * v_b.array());
  moment -= Vec3(p.gamma_b.array() * s.omega_b.array());
  moment -= s.omega_b.cross(Vec3(p.inertia.array() * s.omega_b.array()));

  return {force, moment};
}

}  // namespace detail

// Body-specific acceleration (what an ideal accelerometer reads).
inline Vec3 body_specific_accel(const PlantState& s, const PhysicalParams& p,
                                double k_t_scale = 1.0) {
  return detail::forces_moments(s, p, k_t_scale).force_bs / p.m;
}

// One RK4 step of the full nonlinear ODE. motor_cmds are the already-delayed
// per-motor commands, held constant across the step.
inline PlantState step_rigid_body(const PlantState& state,
                                  const PhysicalParams& p,
                                  const std::array<double, 4>& motor_cmds,
                                  double dt, double k_t_scale = 1.0,
                                  long step_index = 0) {
  struct Deriv {
    Vec3 dp, dv, domega;
    Quaternion dq;
    std::array<double, 4> dmu;
  };
  auto f = [&](const PlantState& s) {
    Deriv d;
    const auto fm = detail::forces_moments(s, p, k_t_scale);
    const RotMat3 R = quat_to_rotmat(s.q);
    d.dp = s.v_w;
    d.dv = R * (fm.force_bs / p.m) + Vec3{0, 0, -p.gravity};
    d.domega = Vec3(fm.moment.array() / p.inertia.array());
    const Quaternion qdot =
        quat_multiply(s.q, {0, s.omega_b.x(), s.omega_b.y(), s.omega_b.z()});
    d.dq = {0.5 * qdot.w, 0.5 * qdot.x, 0.5 * qdot.y, 0.5 * qdot.z};
    for (int i = 0; i < 4; ++i) {
      d.dmu[i] =
          (p.k_c * motor_cmds[i] - s.rotor_speed[i]) / p.motor_time_constant;
    }
    return d;
  };
  auto advance = [&](const PlantState& s, const Deriv& d, double h) {
    PlantState o = s;
    o.p_w += h * d.dp;
    o.v_w += h * d.dv;
    o.omega_b += h * d.domega;
    o.q = {s.q.w + h * d.dq.w, s.q.x + h * d.dq.x, s.q.y + h * d.dq.y,
           s.q.z + h * d.dq.z};
    for (int i = 0; i < 4; ++i) o.rotor_speed[i] = s.rotor_speed[i] + h * d.dmu[i];
    return o;
  };

  const Deriv k1 = f(state);
  const Deriv k2 = f(advance(state, k1, 0.5 * dt));
  const Deriv k3 = f(advance(state, k2, 0.5 * dt));
  const Deriv k4 = f(advance(state, k3, dt));

  PlantState out = state;
  out.p_w += dt / 6.0 * (k1.dp + 2 * k2.dp + 2 * k3.dp + k4.dp);
  out.v_w += dt / 6.0 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv);
  out.omega_b += dt / 6.0 * (k1.domega + 2 * k2.domega + 2 * k3.domega + k4.domega);
  out.q = {state.q.w + dt / 6.0 * (k1.dq.w + 2 * k2.dq.w + 2 * k3.dq.w + k4.dq.w),
           state.q.x + dt / 6.0 * (k1.dq.x + 2 * k2.dq.x + 2 * k3.dq.x + k4.dq.x),
           state.q.y + dt / 6.0 * (k1.dq.y + 2 * k2.dq.y + 2 * k3.dq.y + k4.dq.y),
           state.q.z + dt / 6.0 * (k1.dq.z + 2 * k2.dq.z + 2 * k3.dq.z + k4.dq.z)};
  out.q = quat_normalize(out.q);
  for (int i = 0; i < 4; ++i) {
    out.rotor_speed[i] = std::max(
        0.0, state.rotor_speed[i] + dt / 6.0 * (k1.dmu[i] + 2 * k2.dmu[i] +
                                                2 * k3.dmu[i] + k4.dmu[i]));
  }
  if (!out.finite()) {
    throw SimulationDivergedError("step_rigid_body: non-finite state",
                                  step_index);
  }
  return out;
}

struct SensorChannelConfig {
  bool enabled = true;
  double rate_hz = 1000.0;
  double delay_s = 0.0;
  double noise_std = 0.0;  // per-axis standard deviation
};

struct SensorConfig {
  SensorChannelConfig gyro{true, 1000.0, 0.0, 0.01};      // [rad/s]
  SensorChannelConfig accel{true, 1000.0, 0.0, 0.05};     // [m/s^2]
  SensorChannelConfig orientation{true, 1000.0, 0.0, 0.002};  // [rad]
  SensorChannelConfig position{true, 300.0, 0.052, 0.001};    // [m]
  unsigned long long seed = 42;

  void validate() const {
    for (const auto* c : {&gyro, &accel, &orientation, &position}) {
      if (!(c->rate_hz > 0.0) || c->delay_s < 0.0 || c->noise_std < 0.0) {
        throw ConfigError("SensorConfig: rate/delay/noise out of range");
      }
    }
  }
};

struct ImuSample {
  double t_emit = 0.0;
  Vec3 gyro{0, 0, 0};
  Vec3 accel{0, 0, 0};
};

struct PoseSample {
  double t_emit = 0.0;
  Vec3 position{0, 0, 0};
  Quaternion orientation;
  bool has_position = false;
  bool has_orientation = false;
};

// Simulator with sensor synthesis. Stepping is single-threaded; distinct
// instances are independent.
class UavSim {
 public:
  UavSim(const PhysicalParams& params, const SensorConfig& sensors,
         double dt = 1e-3)
      : p_(params),
        cfg_(sensors),
        dt_(dt),
        gyro_rng_(sensors.seed * 4ull + 0),
        accel_rng_(sensors.seed * 4ull + 1),
        orient_rng_(sensors.seed * 4ull + 2),
        pos_rng_(sensors.seed * 4ull + 3) {
    p_.validate();
    cfg_.validate();
    delay_len_ = static_cast<std::size_t>(std::llround(p_.motor_delay / dt_));
    reset_hover();
  }

  // Rest at the hover fixed point, command delay line primed with hover.
  void reset_hover() {
    state_ = PlantState{};
    const double mu_h = p_.hover_rotor_speed();
    state_.rotor_speed = {mu_h, mu_h, mu_h, mu_h};
    const double u_h = p_.hover_command();
    cmd_delay_.assign(delay_len_, {u_h, u_h, u_h, u_h});
    tick_ = 0;
    history_.clear();
    push_history();
    next_emit_ = {0.0, 0.0, 0.0, 0.0};
  }

  void reset_rest() {
    state_ = PlantState{};
    cmd_delay_.assign(delay_len_, {0, 0, 0, 0});
    tick_ = 0;
    history_.clear();
    push_history();
    next_emit_ = {0.0, 0.0, 0.0, 0.0};
  }

  // Reposition before flight; re-seeds the delayed-measurement history so
  // early samples reflect the new pose.
  void set_initial_position(const Vec3& p_w) {
    state_.p_w = p_w;
    history_.clear();
    push_history();
  }

  double t() const { return static_cast<double>(tick_) * dt_; }
  double dt() const { return dt_; }
  const PlantState& state() const { return state_; }
  PlantState& mutable_state() { return state_; }
  const PhysicalParams& params() const { return p_; }
  const SensorConfig& sensors() const { return cfg_; }

  double k_t_scale() const {
    return 1.0 + p_.k_t_drift_rate * t();
  }

  // Advance one tick with raw per-motor commands (clamped at zero).
  void step(std::array<double, 4> motor_cmds) {
    for (double& c : motor_cmds) c = std::max(0.0, c);
    std::array<double, 4> delayed = motor_cmds;
    if (delay_len_ > 0) {
      cmd_delay_.push_back(motor_cmds);
      delayed = cmd_delay_.front();
      cmd_delay_.pop_front();
    }
    state_ = step_rigid_body(state_, p_, delayed, dt_, k_t_scale(), tick_);
    ++tick_;
    push_history();
  }

  // Mix (collective, roll, pitch, yaw) loop outputs into motor commands.
  std::array<double, 4> mix(double u_t, double u_mx, double u_my,
                            double u_mz) const {
    const auto sx = PhysicalParams::roll_signs();
    const auto sy = PhysicalParams::pitch_signs();
    const auto sz = PhysicalParams::yaw_signs();
    std::array<double, 4> u{};
    for (int i = 0; i < 4; ++i) {
      u[i] = u_t + p_.mix_gain_attitude * (sx[i] * u_mx + sy[i] * u_my) +
             p_.mix_gain_yaw * sz[i] * u_mz;
      u[i] = std::max(0.0, u[i]);
    }
    return u;
  }

  // IMU emission for the tick that just completed; empty between emissions.
  std::optional<ImuSample> sample_imu() {
    if (!cfg_.gyro.enabled && !cfg_.accel.enabled) return std::nullopt;
    if (!due(0, cfg_.gyro.rate_hz)) return std::nullopt;
    const auto& snap = delayed_snapshot(cfg_.gyro.delay_s);
    ImuSample s;
    s.t_emit = t();
    s.gyro = snap.omega_b + p_.gyro_bias + noise3(gyro_rng_, cfg_.gyro.noise_std);
    s.accel =
        snap.a_bs + p_.accel_bias + noise3(accel_rng_, cfg_.accel.noise_std);
    return s;
  }

  std::optional<PoseSample> sample_position_orientation() {
    PoseSample s;
    s.t_emit = t();
    if (cfg_.orientation.enabled && due(1, cfg_.orientation.rate_hz)) {
      const auto& snap = delayed_snapshot(cfg_.orientation.delay_s);
      const Vec3 pert = noise3(orient_rng_, cfg_.orientation.noise_std);
      s.orientation =
          quat_normalize(quat_multiply(snap.q, quat_from_axis_angle(pert)));
      s.has_orientation = true;
    }
    if (cfg_.position.enabled && due(2, cfg_.position.rate_hz)) {
      const auto& snap = delayed_snapshot(cfg_.position.delay_s);
      s.position = snap.p_w + noise3(pos_rng_, cfg_.position.noise_std);
      s.has_position = true;
    }
    if (!s.has_position && !s.has_orientation) return std::nullopt;
    return s;
  }

  Vec3 true_body_specific_accel() const {
    return body_specific_accel(state_, p_, k_t_scale());
  }

 private:
  struct Snapshot {
    Vec3 p_w, omega_b, a_bs;
    Quaternion q;
  };

  void push_history() {
    Snapshot s{state_.p_w, state_.omega_b,
               body_specific_accel(state_, p_, k_t_scale()), state_.q};
    history_.push_back(s);
    const std::size_t max_delay = static_cast<std::size_t>(std::llround(
        std::max({cfg_.gyro.delay_s, cfg_.accel.delay_s,
                  cfg_.orientation.delay_s, cfg_.position.delay_s}) /
        dt_));
    while (history_.size() > max_delay + 1) history_.pop_front();
  }

  const Snapshot& delayed_snapshot(double delay) const {
    const auto back = static_cast<std::size_t>(std::llround(delay / dt_));
    const std::size_t idx =
        history_.size() > back ? history_.size() - 1 - back : 0;
    return history_[idx];
  }

  // Emission scheduler: channel fires when sim time reaches its next slot.
  bool due(int channel, double rate_hz) {
    const double now = t();
    if (now + 1e-12 >= next_emit_[static_cast<std::size_t>(channel)]) {
      next_emit_[static_cast<std::size_t>(channel)] += 1.0 / rate_hz;
      // Re-anchor if the schedule fell far behind (rate changes in tests).
      if (next_emit_[static_cast<std::size_t>(channel)] < now) {
        next_emit_[static_cast<std::size_t>(channel)] = now + 1.0 / rate_hz;
      }
      return true;
    }
    return false;
  }

  Vec3 noise3(std::mt19937_64& rng, double std_dev) {
    if (std_dev <= 0.0) return Vec3{0, 0, 0};
    std::normal_distribution<double> n(0.0, std_dev);
    return Vec3{n(rng), n(rng), n(rng)};
  }

  PhysicalParams p_;
  SensorConfig cfg_;
  double dt_;
  PlantState state_;
  std::size_t delay_len_ = 0;
  std::deque<std::array<double, 4>> cmd_delay_;
  long tick_ = 0;
  std::deque<Snapshot> history_;
  std::array<double, 4> next_emit_{0, 0, 0, 0};
  std::mt19937_64 gyro_rng_, accel_rng_, orient_rng_, pos_rng_;
};

}  // namespace dekf
