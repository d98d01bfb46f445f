#pragma once

// Truncated-Taylor discretization of a continuous linear model:
//   F_k = sum_{i=0..order} (A dt)^i / i!
//   G_k = (sum_{i=0..order} A^i dt^(i+1) / (i+1)!) B

#include <Eigen/Dense>

#include "dekf/errors.hpp"

namespace dekf {

struct Transition {
  Eigen::MatrixXd f;  // state transition
  Eigen::MatrixXd g;  // input matrix
};

inline Transition taylor_transition(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b, double dt,
                                    int order = 4) {
  if (order < 2) throw ConfigError("taylor_transition: order must be >= 2");
  const auto n = a.rows();
  const Eigen::MatrixXd adt = a * dt;
  if (adt.norm() > 2.0) {
    throw ConfigError("taylor_transition: ||A dt|| too large for truncation");
  }
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n) * dt;  // integral terms
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  double factorial = 1.0;
  double dt_pow = dt;
  for (int i = 1; i <= order; ++i) {
    term = term * adt;            // (A dt)^i
    factorial *= static_cast<double>(i);
    f += term / factorial;
    dt_pow *= dt;                 // dt^(i+1)
    // A^i dt^(i+1) / (i+1)! == (A dt)^i dt / (i+1)!
    s += term * dt / (factorial * static_cast<double>(i + 1));
  }
  return {f, s * b};
}

}  // namespace dekf
