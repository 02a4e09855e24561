#include "doctest.h"
#include "support.hpp"

#include "ssi/integrate.hpp"
#include "ssi/model.hpp"
#include "ssi/params.hpp"
#include "ssi/two_city.hpp"

#include <cmath>
#include <random>

using namespace ssi;

namespace {

const double kNegInf = -std::numeric_limits<double>::infinity();

ParamSpec spec(Transform t, double lo, double hi, double guess) { return {"p", t, guess, 0.1, lo, hi}; }

// 1-D model dx = drift dt + sigma dW with a single prevalence stream.
ModelDef scalar_model(double drift, double sigma, double x0, double sigma_obs) {
  ModelDef m;
  m.k = 1;
  m.drift = [drift](const StateRef&, const Eigen::VectorXd&, double, Eigen::Ref<Eigen::VectorXd> dx) {
    dx[0] = drift;
  };
  if (sigma > 0.0)
    m.diffusion = [sigma](const StateRef&, const Eigen::VectorXd&, double, Eigen::Ref<Eigen::MatrixXd> q) {
      q(0, 0) = sigma * sigma;
    };
  m.initial_state = [x0](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, x0); };
  m.streams = {{"x", StreamKind::prevalence, {0}, {1.0}, 0.0, sigma_obs}};
  return m;
}

}  // namespace

TEST_SUITE("params") {
  TEST_CASE("transform fixed points") {
    CHECK(to_transformed(spec(Transform::log, 0.1, 20, 1), 1.0) == 0.0);
    CHECK(to_transformed(spec(Transform::logit, 0.0, 1.0, 0.5), 0.5) == doctest::Approx(0.0).epsilon(1e-15));
    const auto s = spec(Transform::log, 0.5, 20, 2);
    CHECK(to_transformed(s, 13.0) == doctest::Approx(oracle::kLogOf13).epsilon(1e-15));
    CHECK(to_natural(s, to_transformed(s, 13.0)) == doctest::Approx(13.0).epsilon(1e-14));
  }

  TEST_CASE("out of domain values are rejected") {
    CHECK_THROWS_AS(to_transformed(spec(Transform::log, 0.1, 20, 1), 0.0), OutOfDomain);
    CHECK_THROWS_AS(to_transformed(spec(Transform::log, 0.1, 20, 1), -3.0), OutOfDomain);
    CHECK_THROWS_AS(to_transformed(spec(Transform::logit, 0.0, 1.0, 0.5), 1.0), OutOfDomain);
  }

  TEST_CASE("spec invariants") {
    CHECK_THROWS(validate(ParamSpec{"a", Transform::identity, 2.0, 0.1, 0.0, 1.0}));
    CHECK_THROWS(validate(ParamSpec{"a", Transform::identity, 0.5, 0.0, 0.0, 1.0}));
    CHECK_THROWS(validate(ParamSpec{"a", Transform::log, -1.0, 0.1, -2.0, 1.0}));
    CHECK_NOTHROW(validate(ParamSpec{"a", Transform::logit, 0.5, 0.1, 0.0, 1.0}));
  }

  TEST_CASE("round trip over random in-bounds vectors") {
    ParamList specs{{"a", Transform::identity, 0.0, 0.1, -5, 5},
                    {"b", Transform::log, 1.0, 0.1, 1e-3, 1e3},
                    {"c", Transform::logit, 0.5, 0.1, -2, 7}};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
      Eigen::Vector3d x(-5 + 10 * u(rng), std::exp(std::log(1e-3) + u(rng) * std::log(1e6)), -2 + 9 * u(rng));
      if (x[2] <= -2 || x[2] >= 7) continue;
      const Eigen::VectorXd back = to_natural(specs, to_transformed(specs, x));
      for (int i = 0; i < 3; ++i) CHECK(std::abs(back[i] - x[i]) <= 1e-12 * std::max(1.0, std::abs(x[i])));
    }
  }

  TEST_CASE("log prior values") {
    CHECK(log_prior(spec(Transform::identity, 0, 1, 0.5), 0.3) == 0.0);
    CHECK(log_prior(spec(Transform::identity, 0, 1, 0.5), 1.3) == kNegInf);
    CHECK(log_prior(spec(Transform::log, 1, 20, 2), std::log(25.0)) == kNegInf);
    const auto s = spec(Transform::log, 1.0, std::exp(1.0), 1.5);
    CHECK(log_prior(s, 0.5) == doctest::Approx(-std::log(std::exp(1.0) - 1.0) + 0.5).epsilon(1e-14));
  }

  TEST_CASE("prior integrates to one in transformed space") {
    for (const auto& s : {spec(Transform::identity, -1, 3, 0), spec(Transform::log, 1.0, std::exp(1.0), 1.5),
                          spec(Transform::log, 0.5, 20, 2), spec(Transform::logit, -2, 5, 1)}) {
      auto [lo, hi] = transformed_bounds(s);
      if (!std::isfinite(lo)) lo = -40.0;
      if (!std::isfinite(hi)) hi = 40.0;
      const int n = 200000;
      const double h = (hi - lo) / n;
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const double lp = log_prior(s, lo + (i + 0.5) * h);
        if (lp > kNegInf) total += std::exp(lp) * h;
      }
      CHECK(total >= 0.999);
      CHECK(total <= 1.001);
    }
  }

  TEST_CASE("diagonal covariance from sd_transf") {
    ParamList specs{{"a", Transform::log, 2, 0.02, 0.5, 20}, {"b", Transform::log, 2, 0.05, 0.5, 20}};
    const Eigen::MatrixXd c = diagonal_covariance(specs);
    CHECK(c(0, 0) == doctest::Approx(0.0004));
    CHECK(c(1, 1) == doctest::Approx(0.0025));
    CHECK(c(0, 1) == 0.0);
  }

  TEST_CASE("transform names") {
    CHECK(parse_transform("logit") == Transform::logit);
    CHECK(transform_name(Transform::log) == "log");
    CHECK_THROWS(parse_transform("probit"));
  }
}

TEST_SUITE("model") {
  TEST_CASE("frozen system reports its initial prevalence") {
    const ModelDef m = scalar_model(0.0, 0.0, 42.0, 0.0);
    const auto sched = regular_schedule(m, 1.0, 1.0, 10);
    const auto r = simulate(m, Eigen::VectorXd(), sched, 0.1, 3);
    REQUIRE(r.series.frames.size() == 10);
    for (const auto& f : r.series.frames) CHECK(f.value == 42.0);
  }

  TEST_CASE("simulation is deterministic in the seed") {
    const auto p = build_two_city_si();
    const auto a = two_city_data(p), b = two_city_data(p);
    REQUIRE(a.series.frames.size() == b.series.frames.size());
    for (std::size_t i = 0; i < a.series.frames.size(); ++i) {
      const double x = a.series.frames[i].value, y = b.series.frames[i].value;
      CHECK(((std::isnan(x) && std::isnan(y)) || x == y));
    }
    const auto c = simulate(p.model, Eigen::Vector3d(1.8, 1.4, 7.0), p.schedule(), p.dt(), 999);
    CHECK(c.series.frames[0].value != a.series.frames[0].value);
  }

  TEST_CASE("pure diffusion variance matches sigma^2 T") {
    const double sigma = 0.7, horizon = 2.0;
    const ModelDef m = scalar_model(0.0, sigma, 0.0, 1.0);
    const auto sched = regular_schedule(m, horizon, 1.0, 1);
    double sum = 0.0, sum2 = 0.0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
      const auto res = simulate(m, Eigen::VectorXd(), sched, 0.1, static_cast<std::uint64_t>(r));
      const double x = res.path.states.back()[0];
      sum += x;
      sum2 += x * x;
    }
    const double var = (sum2 - sum * sum / reps) / (reps - 1);
    CHECK(var == doctest::Approx(sigma * sigma * horizon).epsilon(0.05));
  }

  TEST_CASE("missing mask and accumulator resets") {
    const auto p = build_two_city_si();
    const auto r = two_city_data(p);
    const auto& frames = r.series.frames;
    REQUIRE(frames.size() == 100);
    CHECK(r.series.n_observed() == 93);
    CHECK(std::isnan(frames[4 * 4 + 1].value));
    CHECK(std::isnan(frames[11 * 4 + 2].value));
    CHECK(std::isnan(frames[20 * 4 + 3].value));
    CHECK_FALSE(std::isnan(frames[0].value));

    const int z1 = p.model.state_index("Z1"), z2 = p.model.state_index("Z2");
    for (std::size_t i = 0; i < r.path.times.size(); ++i) {
      CHECK(r.path.states[i][z1] >= 0.0);
      CHECK(r.path.states[i][z2] >= 0.0);
      const double t = r.path.times[i];
      if (t > 0 && std::fmod(t + 1e-9, 7.0) < 1e-6) {
        CHECK(r.path.states[i][z1] == 0.0);
        CHECK(r.path.states[i][z2] == 0.0);
      }
    }
  }

  TEST_CASE("bundled model shape") {
    const auto p = build_two_city_si();
    CHECK(p.params.size() == 3);  // R0_1(t0), R0_2(t0), v
    CHECK(p.model.k == 8);
    CHECK(p.model.streams.size() == 4);
    CHECK(p.model.stochastic());
    const Eigen::Vector3d poor(13.0, 13.0, 16.0);
    const Theta t = to_transformed(p.params, poor);
    CHECK(std::isfinite(log_prior(p.params, t)));
  }

  TEST_CASE("analytic jacobian agrees with finite differences") {
    const auto p = build_two_city_si();
    ModelDef fd = p.model;
    fd.jacobian = nullptr;
    const Eigen::Vector3d theta(1.8, 1.4, 7.0);
    Eigen::VectorXd x = p.model.initial_state(theta);
    x[1] = 3000;
    x[5] = 1200;
    x[3] = 400;
    Eigen::MatrixXd ja(8, 8), jf(8, 8);
    p.model.eval_jacobian(x, theta, 0.0, ja);
    fd.eval_jacobian(x, theta, 0.0, jf);
    CHECK((ja - jf).cwiseAbs().maxCoeff() < 1e-5 * (1.0 + ja.cwiseAbs().maxCoeff()));
  }

  TEST_CASE("deterministic collapse") {
    const auto p = build_two_city_si();
    const ModelDef c = deterministic_collapse(p.model);
    CHECK_FALSE(c.stochastic());
    const ModelDef cc = deterministic_collapse(c);
    CHECK_FALSE(cc.stochastic());
    CHECK(cc.k == c.k);
    const Eigen::Vector3d theta(1.8, 1.4, 7.0);
    const auto a = simulate(c, theta, p.schedule(), p.dt(), 1);
    const auto b = simulate(c, theta, p.schedule(), p.dt(), 2);
    for (std::size_t i = 0; i < a.path.states.size(); ++i) CHECK(a.path.states[i] == b.path.states[i]);

    TwoCityConfig still;
    still.sigma_vol = 0.0;
    const auto z = build_two_city_si(still);
    const auto s = simulate(z.model, theta, z.schedule(), z.dt(), 5);
    for (std::size_t i = 0; i < a.path.states.size(); ++i) CHECK(a.path.states[i] == s.path.states[i]);
  }

  TEST_CASE("noise-free simulation follows the ODE solution") {
    const auto p = build_two_city_si();
    const ModelDef c = deterministic_collapse(p.model);
    const Eigen::Vector3d theta(1.8, 1.4, 7.0);
    const double dt = 0.001;
    const auto sim = simulate(c, theta, regular_schedule(c, 7.0, 7.0, 3), dt, 1);
    Eigen::VectorXd x = c.initial_state(theta);
    double t = 0.0;
    IntegratorConfig cfg;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-10;
    for (double t_obs : {7.0, 14.0, 21.0}) {
      const auto r = integrate<double>(
          [&](double tt, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { c.drift(y, theta, tt, dy); }, x, t, t_obs, cfg);
      x = r.x;
      t = t_obs;
      const auto it = std::find(sim.path.times.begin(), sim.path.times.end(), t_obs);
      REQUIRE(it != sim.path.times.end());
      const Eigen::VectorXd& s = sim.path.states[static_cast<std::size_t>(it - sim.path.times.begin())];
      // Euler error is O(dt); prevalence compartments only (accumulators were just reset)
      CHECK(std::abs(s[1] - x[1]) < 1e-2 * std::abs(x[1]));
      CHECK(std::abs(s[5] - x[5]) < 1e-2 * std::abs(x[5]));
      x[3] = 0.0;
      x[7] = 0.0;
    }
  }

  TEST_CASE("series validation") {
    const auto m = testing::linear_gaussian_model();
    ObservationSeries bad;
    bad.frames = {{1.0, 0, 0.0}, {0.5, 0, 0.0}};
    CHECK_THROWS(validate(bad, m));
    bad.frames = {{1.0, 7, 0.0}};
    CHECK_THROWS(validate(bad, m));
    CHECK_NOTHROW(validate(testing::linear_gaussian_series(), m));
  }

  TEST_CASE("default dt is a tenth of the smallest gap") {
    const auto m = testing::linear_gaussian_model();
    CHECK(default_dt(m, std::vector<double>{2.0, 3.0, 3.0, 3.5}) == doctest::Approx(0.05));
  }

  TEST_CASE("observation variance floor") {
    ObservationStream s{"s", StreamKind::prevalence, {0}, {1.0}, 0.1, 10.0};
    CHECK(s.variance(0.0) == 100.0);
    CHECK(s.variance(200.0) == doctest::Approx(500.0));
  }
}
