#include "ssi/two_city.hpp"

#include <cmath>

namespace ssi {

namespace {

constexpr int kPerCity = 4;
enum : int { S = 0, I = 1, L = 2, Z = 3 };

// (stream, observation number) pairs reported as missing
constexpr std::array<std::pair<int, int>, 7> kMissingMask{{
    {1, 4}, {1, 5}, {1, 6}, {1, 7}, {2, 11}, {3, 19}, {3, 20}}};

}  // namespace

TwoCityProblem build_two_city_si(const TwoCityConfig& config) {
  TwoCityProblem p;
  p.config = config;
  ModelDef& m = p.model;
  m.k = 2 * kPerCity;
  m.state_names = {"S1", "I1", "logR0_1", "Z1", "S2", "I2", "logR0_2", "Z2"};
  m.t0 = 0.0;

  const auto pop = config.population;
  m.drift = [pop](const StateRef& x, const Eigen::VectorXd& theta, double,
                  Eigen::Ref<Eigen::VectorXd> dx) {
    const double v = theta[2];
    for (int c = 0; c < 2; ++c) {
      const int o = c * kPerCity;
      const double infection = std::exp(x[o + L]) / v * x[o + S] * x[o + I] / pop[c];
      const double recovery = x[o + I] / v;
      dx[o + S] = recovery - infection;
      dx[o + I] = infection - recovery;
      dx[o + L] = 0.0;
      dx[o + Z] = infection;
    }
  };
  m.jacobian = [pop](const StateRef& x, const Eigen::VectorXd& theta, double,
                     Eigen::Ref<Eigen::MatrixXd> jac) {
    const double v = theta[2];
    jac.setZero();
    for (int c = 0; c < 2; ++c) {
      const int o = c * kPerCity;
      const double beta = std::exp(x[o + L]) / (v * pop[c]);
      const double infection = beta * x[o + S] * x[o + I];
      const double d_s = beta * x[o + I];
      const double d_i = beta * x[o + S];
      jac(o + S, o + S) = -d_s;
      jac(o + S, o + I) = 1.0 / v - d_i;
      jac(o + S, o + L) = -infection;
      jac(o + I, o + S) = d_s;
      jac(o + I, o + I) = d_i - 1.0 / v;
      jac(o + I, o + L) = infection;
      jac(o + Z, o + S) = d_s;
      jac(o + Z, o + I) = d_i;
      jac(o + Z, o + L) = infection;
    }
  };
  const double q = config.sigma_vol * config.sigma_vol;
  if (q > 0.0) {
    m.diffusion = [q](const StateRef&, const Eigen::VectorXd&, double, Eigen::Ref<Eigen::MatrixXd> out) {
      out.setZero();
      out(L, L) = q;
      out(kPerCity + L, kPerCity + L) = q;
    };
  }
  const auto infected = config.initial_infected;
  m.initial_state = [pop, infected](const Eigen::VectorXd& theta) {
    Eigen::VectorXd x(2 * kPerCity);
    for (int c = 0; c < 2; ++c) {
      const int o = c * kPerCity;
      x[o + S] = pop[c] - infected[c];
      x[o + I] = infected[c];
      x[o + L] = std::log(theta[c]);
      x[o + Z] = 0.0;
    }
    return x;
  };

  const auto stream = [&](std::string name, StreamKind kind, std::vector<int> idx, int slot) {
    ObservationStream s;
    s.name = std::move(name);
    s.kind = kind;
    s.weights.assign(idx.size(), 1.0);
    s.indices = std::move(idx);
    s.tau = config.tau[static_cast<std::size_t>(slot)];
    s.sigma_min = config.sigma_min[static_cast<std::size_t>(slot)];
    return s;
  };
  m.streams = {
      stream("grouped_incidence_cdc", StreamKind::incidence, {Z, kPerCity + Z}, 0),
      stream("grouped_incidence_flutrend", StreamKind::incidence, {Z, kPerCity + Z}, 1),
      stream("incidence_city2", StreamKind::incidence, {kPerCity + Z}, 2),
      stream("prevalence_city1", StreamKind::prevalence, {I}, 3),
  };

  p.params = {
      {"R0_1", Transform::log, 2.0, 0.02, 0.5, 20.0},
      {"R0_2", Transform::log, 2.0, 0.02, 0.5, 20.0},
      {"v", Transform::log, 10.0, 0.02, 1.0, 30.0},
  };
  m.validate();
  return p;
}

std::vector<ScheduledFrame> TwoCityProblem::schedule() const {
  auto frames = regular_schedule(model, config.first_observation, config.observation_step,
                                 config.observation_count);
  const auto n_streams = model.streams.size();
  for (const auto& [stream, obs] : kMissingMask) {
    const auto idx = static_cast<std::size_t>(obs) * n_streams + static_cast<std::size_t>(stream);
    if (idx < frames.size()) frames[idx].missing = true;
  }
  return frames;
}

double TwoCityProblem::dt() const { return config.observation_step / 10.0; }

SimulationResult two_city_data(const TwoCityProblem& problem) {
  Eigen::Vector3d theta(problem.config.theta_true[0], problem.config.theta_true[1],
                        problem.config.theta_true[2]);
  return simulate(problem.model, theta, problem.schedule(), problem.dt(), problem.config.data_seed);
}

}  // namespace ssi
