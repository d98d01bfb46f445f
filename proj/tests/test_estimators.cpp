#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "dekf/estimators.hpp"
#include "dekf/taylor.hpp"
#include "doctest.h"

using namespace dekf;

TEST_CASE("taylor_transition matches the matrix exponential") {
  // Oracle: F = expm(A dt) via Eigen's scaling-and-squaring, and
  // G = A^{-1}(F - I)B for invertible A.
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  const double dt = 1e-3;
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 2 + trial % 7;
    Eigen::MatrixXd a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a(i, j) = 20.0 * n(rng);
    Eigen::MatrixXd b(dim, 2);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < 2; ++j) b(i, j) = n(rng);

    const auto [f, g] = taylor_transition(a, b, dt, 6);
    const Eigen::MatrixXd f_ref = (a * dt).exp();
    CHECK((f - f_ref).norm() < 1e-10 * std::max(1.0, f_ref.norm()));

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.isInvertible()) {
      const Eigen::MatrixXd g_ref =
          lu.solve((f_ref - Eigen::MatrixXd::Identity(dim, dim)) * b);
      CHECK((g - g_ref).norm() < 1e-10 * std::max(1.0, g_ref.norm()));
    }
  }
}

TEST_CASE("taylor_transition rejects bad order and large steps") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3) * 1e5;
  const Eigen::MatrixXd b = Eigen::MatrixXd::Ones(3, 1);
  CHECK_THROWS_AS(taylor_transition(a, b, 1e-3, 4), ConfigError);
  CHECK_THROWS_AS(
      taylor_transition(Eigen::MatrixXd::Identity(3, 3), b, 1e-3, 1),
      ConfigError);
}

TEST_CASE("kalman_correct with huge R leaves the state untouched") {
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, 3.0;
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(1, 3);
  h(0, 0) = 1.0;
  const Eigen::VectorXd x0 = x;
  detail::kalman_correct(x, p, h, Eigen::VectorXd::Constant(1, 50.0), 1e18);
  CHECK((x - x0).norm() < 1e-12);
}

TEST_CASE("kalman_correct with zero innovation is a covariance-only update") {
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, 3.0;
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(3, 3) * 4.0;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(1, 3);
  h(0, 1) = 1.0;
  detail::kalman_correct(x, p, h, Eigen::VectorXd::Constant(1, 2.0), 1.0);
  CHECK(x(0) == 1.0);
  CHECK(x(1) == 2.0);
  CHECK(x(2) == 3.0);
  // Measuring shrinks the measured direction's variance: 4 -> 4*1/(4+1).
  CHECK(p(1, 1) == doctest::Approx(0.8));
  CHECK(p(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("RDEKF converges to truth on noise-free synthetic rotations") {
  FilterModelConfig cfg;
  Rdekf filt(cfg);
  filt.init_orientation(Quaternion{1, 0, 0, 0});

  // Truth: quaternion integrated from a slowly varying body rate; the
  // filter sees perfect orientation and gyro measurements.
  Quaternion q_true{1, 0, 0, 0};
  const double dt = cfg.dt;
  double max_err_late = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double t = i * dt;
    const Vec3 w{0.3 * std::sin(2.0 * t), -0.2 * std::cos(1.5 * t), 0.0};
    q_true = quat_integrate(q_true, w, dt);
    filt.predict(Eigen::Vector2d::Zero());
    filt.update_orientation(q_true);
    filt.update_gyro(w.head<2>());
    if (t > 2.0) {
      const Quaternion qe = quat_normalize(filt.quat());
      const double err = std::abs(roll_of(qe) - roll_of(q_true)) +
                         std::abs(pitch_of(qe) - pitch_of(q_true));
      max_err_late = std::max(max_err_late, err);
      max_err_late =
          std::max(max_err_late, (filt.omega() - w.head<2>()).norm());
    }
  }
  CHECK(max_err_late < 1e-3);
}

TEST_CASE("RDEKF covariance stays positive semi-definite") {
  FilterModelConfig cfg;
  Rdekf filt(cfg);
  filt.init_orientation(Quaternion{1, 0, 0, 0});
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.01);
  for (int i = 0; i < 20000; ++i) {
    filt.predict(Eigen::Vector2d{n(rng), n(rng)});
    filt.update_gyro(Eigen::Vector2d{n(rng), n(rng)});
    if (i % 10 == 0) {
      filt.update_orientation(quat_normalize(
          Quaternion{1.0, 0.01 * n(rng), 0.01 * n(rng), 0.0}));
    }
    if (i % 500 == 0) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          filt.covariance());
      CHECK(es.eigenvalues().minCoeff() > -1e-9);
    }
  }
}

TEST_CASE("TDEKF tracks a vertical maneuver with perfect measurements") {
  FilterModelConfig cfg;
  // Drive the filter's own model as truth: then the estimate must match to
  // numerical precision once the initial covariance has collapsed.
  Tdekf filt(cfg);
  Tdekf truth(cfg);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(Tdekf::kDim);
  x0(2) = 1.0;                         // z
  x0(8) = 9.81;                        // hovering specific accel
  x0(9) = 9.81;                        // thrust accel state
  truth.set_state(x0);

  const RotMat3 r = RotMat3::Identity();
  const double u_hover = 9.81 * cfg.alt.t_drag / cfg.alt.k_eq;
  double max_err_late = 0.0;
  for (int i = 0; i < 6000; ++i) {
    const double t = i * cfg.dt;
    const double u = u_hover * (1.0 + 0.05 * std::sin(2.0 * t));
    truth.predict(u, r);
    filt.predict(u, r);
    filt.update_position(truth.position());
    filt.update_accel(truth.body_accel());
    if (t > 3.0) {
      max_err_late = std::max(
          max_err_late, (filt.position() - truth.position()).norm() +
                            (filt.velocity() - truth.velocity()).norm());
    }
  }
  CHECK(max_err_late < 1e-4);
}

TEST_CASE("TDEKF estimates a constant thrust-command bias") {
  FilterModelConfig cfg;
  Tdekf filt(cfg);
  Tdekf truth(cfg);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(Tdekf::kDim);
  x0(8) = 9.81;
  x0(9) = 9.81;
  const double bias = 0.7;
  x0(10) = bias;
  truth.set_state(x0);

  const RotMat3 r = RotMat3::Identity();
  const double u_hover = 9.81 * cfg.alt.t_drag / cfg.alt.k_eq - bias;
  for (int i = 0; i < 10000; ++i) {
    truth.predict(u_hover, r);
    filt.predict(u_hover, r);
    filt.update_position(truth.position());
    filt.update_accel(truth.body_accel());
  }
  CHECK(filt.thrust_bias() == doctest::Approx(bias).epsilon(0.05));
}

TEST_CASE("pipeline initializes orientation from the first pose sample") {
  FilterModelConfig cfg;
  EstimatorPipeline pipe(cfg);
  PipelineInputs in;
  in.has_orientation = true;
  in.orientation = quat_from_axis_angle(Vec3{0.2, -0.1, 0.0});
  const FusedRecord rec = pipe.tick(in, 0.0);
  CHECK(roll_of(rec.q) == doctest::Approx(0.2).epsilon(0.05));
  CHECK(pitch_of(rec.q) == doctest::Approx(-0.1).epsilon(0.05));
}

TEST_CASE("delay line reproduces whole-sample input delays") {
  detail::DelayLine d;
  d.configure(0.005, 1e-3, 0.0);
  std::vector<double> out;
  for (int i = 1; i <= 10; ++i) out.push_back(d.push(i));
  for (int i = 0; i < 5; ++i) CHECK(out[i] == 0.0);
  for (int i = 5; i < 10; ++i) CHECK(out[i] == i - 4);
}
