#pragma once

#include "oracles/frozen.hpp"

#include "ssi/model.hpp"
#include "ssi/params.hpp"

#include <Eigen/Dense>

#include <limits>

namespace testing {

/// dx = A x dt + chol(Q) dW with streams x1 (sd 0.3) and x1 + x2 (sd 0.5),
/// matching tests/oracles/oracle.py.
inline ssi::ModelDef linear_gaussian_model() {
  Eigen::Matrix2d a;
  a << -0.5, 0.3, -0.2, -0.4;
  Eigen::Matrix2d q;
  q << 0.2, 0.05, 0.05, 0.1;
  ssi::ModelDef m;
  m.k = 2;
  m.state_names = {"x1", "x2"};
  m.drift = [a](const ssi::StateRef& x, const Eigen::VectorXd&, double, Eigen::Ref<Eigen::VectorXd> dx) {
    dx.noalias() = a * x;
  };
  m.jacobian = [a](const ssi::StateRef&, const Eigen::VectorXd&, double, Eigen::Ref<Eigen::MatrixXd> j) { j = a; };
  m.diffusion = [q](const ssi::StateRef&, const Eigen::VectorXd&, double, Eigen::Ref<Eigen::MatrixXd> out) {
    out = q;
  };
  m.initial_state = [](const Eigen::VectorXd&) { return Eigen::Vector2d(1.0, -0.5).eval(); };
  ssi::ObservationStream s1{"x1", ssi::StreamKind::prevalence, {0}, {1.0}, 0.0, 0.3};
  ssi::ObservationStream s2{"sum", ssi::StreamKind::prevalence, {0, 1}, {1.0, 1.0}, 0.0, 0.5};
  m.streams = {s1, s2};
  m.validate();
  return m;
}

inline ssi::ObservationSeries linear_gaussian_series(std::size_t n_frames = 50) {
  ssi::ObservationSeries s;
  for (const auto& f : oracle::kLinearGaussianFrames) {
    if (s.frames.size() == n_frames) break;
    s.frames.push_back({f.time, f.stream, f.value});
  }
  return s;
}

/// A static model whose EKF likelihood is exactly N(theta; mu, C): the state
/// is theta itself and three noise-free-prior streams observe L^{-1} theta
/// with unit variance, where C = L L^T.
struct GaussianTarget {
  ssi::ModelDef model;
  ssi::ParamList params;
  ssi::ObservationSeries series;
  Eigen::Vector3d mu;
  Eigen::Matrix3d cov;
};

inline Eigen::Matrix3d full_optimal_cov() {
  Eigen::Matrix3d c;
  c << 3.6, 0.8, 1.2, 0.8, 4.0, 2.2, 1.2, 2.2, 3.4;
  return c * 1e-4;
}

inline GaussianTarget gaussian_target(const Eigen::Matrix3d& cov = full_optimal_cov(),
                                      const Eigen::Vector3d& mu = Eigen::Vector3d(0.3, -0.2, 0.5)) {
  GaussianTarget t;
  t.mu = mu;
  t.cov = cov;
  const Eigen::Matrix3d l = cov.llt().matrixL();
  const Eigen::Matrix3d h = l.inverse();
  ssi::ModelDef& m = t.model;
  m.k = 3;
  m.state_names = {"a", "b", "c"};
  m.drift = [](const ssi::StateRef&, const Eigen::VectorXd&, double, Eigen::Ref<Eigen::VectorXd> dx) {
    dx.setZero();
  };
  m.jacobian = [](const ssi::StateRef&, const Eigen::VectorXd&, double, Eigen::Ref<Eigen::MatrixXd> j) {
    j.setZero();
  };
  m.initial_state = [](const Eigen::VectorXd& theta) { return theta; };
  for (int r = 0; r < 3; ++r) {
    ssi::ObservationStream s;
    s.name = "w" + std::to_string(r);
    s.indices = {0, 1, 2};
    s.weights = {h(r, 0), h(r, 1), h(r, 2)};
    s.tau = 0.0;
    s.sigma_min = 1.0;
    m.streams.push_back(s);
  }
  m.validate();
  const Eigen::Vector3d y = h * mu;
  for (int r = 0; r < 3; ++r) t.series.frames.push_back({1.0, r, y[r]});
  for (int i = 0; i < 3; ++i)
    t.params.push_back({m.state_names[static_cast<std::size_t>(i)], ssi::Transform::identity, mu[i], 0.02,
                        mu[i] - 1.0, mu[i] + 1.0});
  return t;
}

/// Exact log density of the target up to its normalizing constant, for oracles.
inline double gaussian_target_logdensity(const GaussianTarget& t, const Eigen::Vector3d& x) {
  const Eigen::Vector3d r = x - t.mu;
  return -0.5 * r.dot(t.cov.ldlt().solve(r));
}

}  // namespace testing
