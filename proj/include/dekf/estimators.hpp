#pragma once

// RDEKF and TDEKF: decoupled dynamic EKFs with truncated-Taylor
// discretization, multi-rate measurement updates, and bias states.
//
// RDEKF state (12): q(4), omega_xy(2), alpha_xy(2), alpha_t_xy(2), u_bias(2)
// TDEKF state (11): p(3), v(3), a_bs(3), a_T(1), u_T_bias(1)
//
// The quaternion is propagated nonlinearly (quat_integrate) and corrected
// through the printed 4-column H block, renormalized afterwards. Yaw rate is
// fed through kinematically from the gyro; yaw is not an estimated state.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dekf/errors.hpp"
#include "dekf/frames.hpp"
#include "dekf/siso.hpp"
#include "dekf/taylor.hpp"

namespace dekf {

struct FilterModelConfig {
  // Identified lumped models (injected by the identification phase).
  SisoParams att_x = SisoParams::reference_attitude();
  SisoParams att_y = SisoParams::reference_attitude();
  SisoParams alt = SisoParams::reference_altitude();
  SisoParams lat_x = SisoParams::reference_lateral();
  SisoParams lat_y = SisoParams::reference_lateral();

  double dt = 1e-3;
  int taylor_order = 4;

  // Process noise PSDs per state block (variance per second).
  double q_quat = 1e-9;
  double q_omega = 1e-4;
  double q_alpha = 10.0;
  double q_alpha_t = 10.0;
  double q_m_bias = 1e-5;
  double q_pos = 1e-9;
  double q_vel = 1e-7;
  double q_abs = 0.35;
  double q_a_t = 0.8;
  double q_t_bias = 1e-3;

  // Measurement noise variances.
  double r_gyro = 1e-4;
  double r_ang = 4e-6;
  double r_acc = 2.5e-3;
  double r_pos = 1e-6;

  double init_cov = 1e2;

  void validate() const {
    if (dt <= 0.0 || taylor_order < 2) {
      throw ConfigError("FilterModelConfig: bad dt/order");
    }
    for (double v : {q_quat, q_omega, q_alpha, q_alpha_t, q_m_bias, q_pos,
                     q_vel, q_abs, q_a_t, q_t_bias, r_gyro, r_ang, r_acc,
                     r_pos}) {
      if (v < 0.0) throw ConfigError("FilterModelConfig: negative variance");
    }
  }
};

namespace detail {

inline void check_finite(const Eigen::VectorXd& x, const char* who) {
  if (!x.allFinite()) throw FilterDivergedError(std::string(who) + ": non-finite state");
}

// Generic Kalman correction: x += K(z - Hx), P = (I - KH)P symmetrized.
inline void kalman_correct(Eigen::VectorXd& x, Eigen::MatrixXd& p,
                           const Eigen::MatrixXd& h, const Eigen::VectorXd& z,
                           double r_var, double* innovation_norm = nullptr) {
  const Eigen::VectorXd innov = z - h * x;
  Eigen::MatrixXd s = h * p * h.transpose();
  s.diagonal().array() += r_var;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw SingularUpdateError("kalman_correct: innovation covariance singular");
  }
  const Eigen::MatrixXd k = p * h.transpose() * ldlt.solve(
      Eigen::MatrixXd::Identity(s.rows(), s.cols()));
  x += k * innov;
  const Eigen::MatrixXd ikh =
      Eigen::MatrixXd::Identity(p.rows(), p.cols()) - k * h;
  p = ikh * p;
  p = 0.5 * (p + p.transpose()).eval();
  if (innovation_norm) *innovation_norm = innov.norm();
}

// Whole-sample input delay line.
class DelayLine {
 public:
  void configure(double tau, double dt, double fill = 0.0) {
    n_ = static_cast<std::size_t>(std::llround(tau / dt));
    buf_.assign(n_, fill);
    head_ = 0;
  }
  double push(double u) {
    if (n_ == 0) return u;
    const double out = buf_[head_];
    buf_[head_] = u;
    head_ = (head_ + 1) % n_;
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> buf_;
  std::size_t head_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Rotational filter
// ---------------------------------------------------------------------------

class Rdekf {
 public:
  static constexpr int kDim = 12;

  explicit Rdekf(const FilterModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    x_ = Eigen::VectorXd::Zero(kDim);
    x_(0) = 1.0;  // identity quaternion
    p_ = Eigen::MatrixXd::Identity(kDim, kDim) * cfg_.init_cov;
    delay_x_.configure(cfg_.att_x.tau, cfg_.dt);
    delay_y_.configure(cfg_.att_y.tau, cfg_.dt);
  }

  const Eigen::VectorXd& state() const { return x_; }
  const Eigen::MatrixXd& covariance() const { return p_; }

  Quaternion quat() const { return {x_(0), x_(1), x_(2), x_(3)}; }
  Eigen::Vector2d omega() const { return x_.segment<2>(4); }
  Eigen::Vector2d alpha() const { return x_.segment<2>(6); }
  Eigen::Vector2d alpha_t() const { return x_.segment<2>(8); }
  // Bias reported in command units (internally stored scaled by the chain
  // gain; see predict()).
  Eigen::Vector2d command_bias() const {
    return {x_(10) * cfg_.att_x.t_drag / cfg_.att_x.k_eq,
            x_(11) * cfg_.att_y.t_drag / cfg_.att_y.k_eq};
  }

  void init_orientation(const Quaternion& q) {
    x_(0) = q.w;
    x_(1) = q.x;
    x_(2) = q.y;
    x_(3) = q.z;
  }

  // Yaw rate pass-through for quaternion propagation (kinematic yaw).
  void set_yaw_rate(double wz) { yaw_rate_ = wz; }

  void predict(const Eigen::Vector2d& u_m) {
    const double dt = cfg_.dt;
    const Eigen::Vector2d u{delay_x_.push(u_m(0)), delay_y_.push(u_m(1))};

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kDim, kDim);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(kDim, 2);
    const Vec3 w{x_(4), x_(5), yaw_rate_};
    // d/dt q = 1/2 Omega(w) q, linearized around the current estimate.
    Eigen::Matrix4d omega_m;
    omega_m << 0, -w.x(), -w.y(), -w.z(),
        w.x(), 0, w.z(), -w.y(),
        w.y(), -w.z(), 0, w.x(),
        w.z(), w.y(), -w.x(), 0;
    a.block<4, 4>(0, 0) = 0.5 * omega_m;
    const double qw = x_(0), qx = x_(1), qy = x_(2), qz = x_(3);
    a.block<4, 1>(0, 4) << -0.5 * qx, 0.5 * qw, 0.5 * qz, -0.5 * qy;
    a.block<4, 1>(0, 5) << -0.5 * qy, -0.5 * qz, 0.5 * qw, 0.5 * qx;

    const double tg[2] = {cfg_.att_x.t_drag, cfg_.att_y.t_drag};
    const double tp[2] = {cfg_.att_x.t_prop, cfg_.att_y.t_prop};
    const double kc[2] = {cfg_.att_x.k_eq / cfg_.att_x.t_drag,
                          cfg_.att_y.k_eq / cfg_.att_y.t_drag};
    // Bias states are stored pre-multiplied by the chain gain (alpha_t
    // drive units) so A stays well-scaled for the truncated-Taylor step.
    for (int i = 0; i < 2; ++i) {
      a(4 + i, 4 + i) = -1.0 / tg[i];
      a(4 + i, 8 + i) = 1.0;
      a(6 + i, 6 + i) = -1.0 / tg[i];
      a(6 + i, 8 + i) = -1.0 / tp[i];
      a(6 + i, 10 + i) = 1.0 / tp[i];
      b(6 + i, i) = kc[i] / tp[i];
      a(8 + i, 8 + i) = -1.0 / tp[i];
      a(8 + i, 10 + i) = 1.0 / tp[i];
      b(8 + i, i) = kc[i] / tp[i];
    }

    const auto [f, g] = taylor_transition(a, b, dt, cfg_.taylor_order);
    const Eigen::VectorXd xn = f * x_ + g * u;
    // Quaternion advances on the unit sphere instead of through F.
    const Quaternion q = quat_integrate(quat(), w, dt);
    x_ = xn;
    x_(0) = q.w;
    x_(1) = q.x;
    x_(2) = q.y;
    x_(3) = q.z;

    p_ = f * p_ * f.transpose() + process_noise();
    p_ = 0.5 * (p_ + p_.transpose()).eval();
    detail::check_finite(x_, "rdekf_predict");
  }

  // z: gyro x/y measurement [rad/s].
  double update_gyro(const Eigen::Vector2d& z) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, kDim);
    h(0, 4) = 1.0;
    h(1, 5) = 1.0;
    double innov = 0.0;
    detail::kalman_correct(x_, p_, h, z, cfg_.r_gyro, &innov);
    detail::check_finite(x_, "rdekf_update");
    return innov;
  }

  double update_orientation(Quaternion z) {
    // Double-cover tie-break: align the measurement with the estimate.
    if (z.w * x_(0) + z.x * x_(1) + z.y * x_(2) + z.z * x_(3) < 0.0) {
      z = {-z.w, -z.x, -z.y, -z.z};
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(4, kDim);
    h.block<4, 4>(0, 0).setIdentity();
    double innov = 0.0;
    detail::kalman_correct(x_, p_, h, z.as_vec(), cfg_.r_ang, &innov);
    const Quaternion qn = quat_normalize(quat());
    x_(0) = qn.w;
    x_(1) = qn.x;
    x_(2) = qn.y;
    x_(3) = qn.z;
    detail::check_finite(x_, "rdekf_update");
    return innov;
  }

 private:
  Eigen::MatrixXd process_noise() const {
    Eigen::VectorXd d(kDim);
    d << cfg_.q_quat, cfg_.q_quat, cfg_.q_quat, cfg_.q_quat, cfg_.q_omega,
        cfg_.q_omega, cfg_.q_alpha, cfg_.q_alpha, cfg_.q_alpha_t,
        cfg_.q_alpha_t, cfg_.q_m_bias, cfg_.q_m_bias;
    return (d * cfg_.dt).asDiagonal();
  }

  FilterModelConfig cfg_;
  Eigen::VectorXd x_;
  Eigen::MatrixXd p_;
  detail::DelayLine delay_x_, delay_y_;
  double yaw_rate_ = 0.0;
};

// ---------------------------------------------------------------------------
// Translational filter
// ---------------------------------------------------------------------------

class Tdekf {
 public:
  static constexpr int kDim = 11;

  explicit Tdekf(const FilterModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    x_ = Eigen::VectorXd::Zero(kDim);
    p_ = Eigen::MatrixXd::Identity(kDim, kDim) * cfg_.init_cov;
    delay_.configure(cfg_.alt.tau, cfg_.dt);
  }

  const Eigen::VectorXd& state() const { return x_; }
  const Eigen::MatrixXd& covariance() const { return p_; }

  Vec3 position() const { return x_.segment<3>(0); }
  Vec3 velocity() const { return x_.segment<3>(3); }
  Vec3 body_accel() const { return x_.segment<3>(6); }
  double thrust_accel() const { return x_(9); }
  double thrust_bias() const { return x_(10); }

  void set_state(const Eigen::VectorXd& x) { x_ = x; }

  Vec3 world_accel(const RotMat3& r_wb) const {
    return r_wb * body_accel() + Vec3{0, 0, -9.81};
  }

  void predict(double u_t, const RotMat3& r_wb) {
    const double dt = cfg_.dt;
    const double ud = delay_.push(u_t);
    const double tp = cfg_.alt.t_prop;
    const double k = cfg_.alt.k_eq / cfg_.alt.t_drag;
    const Vec3 t_lambda_inv{1.0 / cfg_.lat_x.t_drag, 1.0 / cfg_.lat_y.t_drag,
                            1.0 / cfg_.alt.t_drag};
    const Vec3 gvec{0, 0, -9.81};

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kDim, kDim);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(kDim, 2);  // [u_T, 1]
    a.block<3, 3>(0, 3).setIdentity();
    a.block<3, 3>(3, 6) = r_wb;
    b.block<3, 1>(3, 1) = gvec;
    a.block<3, 3>(6, 6) = (-t_lambda_inv).asDiagonal();
    a(6 + 2, 9) = -1.0 / tp;
    a(6 + 2, 10) = k / tp;
    b(6 + 2, 0) = k / tp;
    b.block<3, 1>(6, 1) =
        -(t_lambda_inv.array() * (r_wb.transpose() * gvec).array()).matrix();
    a(9, 9) = -1.0 / tp;
    a(9, 10) = k / tp;
    b(9, 0) = k / tp;

    const auto [f, g] = taylor_transition(a, b, dt, cfg_.taylor_order);
    x_ = f * x_ + g * Eigen::Vector2d{ud, 1.0};
    p_ = f * p_ * f.transpose() + process_noise();
    p_ = 0.5 * (p_ + p_.transpose()).eval();
    detail::check_finite(x_, "tdekf_predict");
  }

  double update_accel(const Vec3& z) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, kDim);
    h.block<3, 3>(0, 6).setIdentity();
    double innov = 0.0;
    detail::kalman_correct(x_, p_, h, z, cfg_.r_acc, &innov);
    detail::check_finite(x_, "tdekf_update");
    return innov;
  }

  double update_position(const Vec3& z) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, kDim);
    h.block<3, 3>(0, 0).setIdentity();
    double innov = 0.0;
    detail::kalman_correct(x_, p_, h, z, cfg_.r_pos, &innov);
    detail::check_finite(x_, "tdekf_update");
    return innov;
  }

 private:
  Eigen::MatrixXd process_noise() const {
    Eigen::VectorXd d(kDim);
    d << cfg_.q_pos, cfg_.q_pos, cfg_.q_pos, cfg_.q_vel, cfg_.q_vel,
        cfg_.q_vel, cfg_.q_abs, cfg_.q_abs, cfg_.q_abs, cfg_.q_a_t,
        cfg_.q_t_bias;
    return (d * cfg_.dt).asDiagonal();
  }

  FilterModelConfig cfg_;
  Eigen::VectorXd x_;
  Eigen::MatrixXd p_;
  detail::DelayLine delay_;
};

// ---------------------------------------------------------------------------
// Fused pipeline tick
// ---------------------------------------------------------------------------

struct PipelineInputs {
  Eigen::Vector2d u_m{0, 0};  // attitude differential commands
  double u_t = 0.0;           // collective command
  bool has_gyro = false;
  Vec3 gyro{0, 0, 0};
  bool has_accel = false;
  Vec3 accel{0, 0, 0};
  bool has_orientation = false;
  Quaternion orientation;
  bool has_position = false;
  Vec3 position{0, 0, 0};
};

struct FusedRecord {
  double t = 0.0;
  Quaternion q;
  Eigen::Vector2d omega{0, 0};
  Eigen::Vector2d alpha{0, 0};
  Vec3 position{0, 0, 0};
  Vec3 velocity{0, 0, 0};
  Vec3 body_accel{0, 0, 0};
  Vec3 world_accel{0, 0, 0};
  double yaw_rate = 0.0;
  double thrust_accel = 0.0;
  double thrust_bias = 0.0;
  Eigen::Vector2d command_bias{0, 0};
  double innov_gyro = 0.0, innov_orient = 0.0, innov_accel = 0.0,
         innov_pos = 0.0;
  Eigen::VectorXd rdekf_cov_diag;
  Eigen::VectorXd tdekf_cov_diag;
};

class EstimatorPipeline {
 public:
  explicit EstimatorPipeline(const FilterModelConfig& cfg)
      : cfg_(cfg), rdekf_(cfg), tdekf_(cfg) {}

  Rdekf& rdekf() { return rdekf_; }
  Tdekf& tdekf() { return tdekf_; }
  const Rdekf& rdekf() const { return rdekf_; }
  const Tdekf& tdekf() const { return tdekf_; }

  // One 1 kHz tick: predict both filters, then apply due measurements
  // (position before accel; orientation before gyro).
  FusedRecord tick(const PipelineInputs& in, double t) {
    if (!initialized_ && in.has_orientation) {
      rdekf_.init_orientation(in.orientation);
      initialized_ = true;
    }
    if (in.has_gyro) {
      rdekf_.set_yaw_rate(in.gyro.z());
      yaw_rate_ = in.gyro.z();
    }

    rdekf_.predict(in.u_m);
    const RotMat3 r_wb = quat_to_rotmat(quat_normalize(rdekf_.quat()));
    tdekf_.predict(in.u_t, r_wb);

    FusedRecord rec;
    if (in.has_position) rec.innov_pos = tdekf_.update_position(in.position);
    if (in.has_accel) rec.innov_accel = tdekf_.update_accel(in.accel);
    if (in.has_orientation) {
      rec.innov_orient = rdekf_.update_orientation(in.orientation);
    }
    if (in.has_gyro) {
      rec.innov_gyro = rdekf_.update_gyro(in.gyro.head<2>());
    }

    rec.t = t;
    rec.q = rdekf_.quat();
    rec.omega = rdekf_.omega();
    rec.alpha = rdekf_.alpha();
    rec.command_bias = rdekf_.command_bias();
    rec.position = tdekf_.position();
    rec.velocity = tdekf_.velocity();
    rec.body_accel = tdekf_.body_accel();
    rec.world_accel =
        quat_to_rotmat(quat_normalize(rec.q)) * rec.body_accel +
        Vec3{0, 0, -9.81};
    rec.yaw_rate = yaw_rate_;
    rec.thrust_accel = tdekf_.thrust_accel();
    rec.thrust_bias = tdekf_.thrust_bias();
    rec.rdekf_cov_diag = rdekf_.covariance().diagonal();
    rec.tdekf_cov_diag = tdekf_.covariance().diagonal();
    return rec;
  }

 private:
  FilterModelConfig cfg_;
  Rdekf rdekf_;
  Tdekf tdekf_;
  bool initialized_ = false;
  double yaw_rate_ = 0.0;
};

}  // namespace dekf
