#include "doctest.h"

#include "ssi/ekf.hpp"
#include "ssi/optimize.hpp"
#include "ssi/two_city.hpp"

#include <cmath>

using namespace ssi;

namespace {

// True when every column of the design has exactly one point per stratum.
bool stratified(const LhsDesign& design) {
  const auto m = design.size();
  for (Eigen::Index j = 0; j < design.points.cols(); ++j) {
    std::vector<int> hits(static_cast<std::size_t>(m), 0);
    const double width = (design.upper[j] - design.lower[j]) / static_cast<double>(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double x = design.points(i, j);
      if (x < design.lower[j] || x >= design.upper[j]) return false;
      const auto b = static_cast<std::size_t>(std::floor((x - design.lower[j]) / width));
      if (b >= hits.size() || static_cast<int>(b) != design.strata(i, j)) return false;
      ++hits[b];
    }
    for (int h : hits)
      if (h != 1) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("optimize") {
  TEST_CASE("lhs: two strata on the unit interval") {
    const auto d = lhs_sample(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), 2, 3);
    const double lo = std::min(d.points(0, 0), d.points(1, 0));
    const double hi = std::max(d.points(0, 0), d.points(1, 0));
    CHECK(lo >= 0.0);
    CHECK(lo < 0.5);
    CHECK(hi >= 0.5);
    CHECK(hi < 1.0);
  }

  TEST_CASE("lhs: stratification over many seeds") {
    Eigen::VectorXd lo(7), hi(7);
    lo << -3.0, 0.0, 1e-3, -1e4, 2.0, -0.5, 10.0;
    hi << 3.0, 1.0, 2e-3, 1e4, 2.5, 0.5, 11.0;
    bool all = true;
    for (int m : {2, 10, 100})
      for (int d : {1, 3, 7})
        for (std::uint64_t seed = 0; seed < 1000; ++seed)
          all = all && stratified(lhs_sample(lo.head(d), hi.head(d), m, seed));
    CHECK(all);
  }

  TEST_CASE("lhs: stratification moment") {
    const Eigen::Vector3d lo(-2.0, 0.0, 5.0), hi(2.0, 1.0, 9.0);
    const auto d = lhs_sample(lo, hi, 100, 42);
    for (int j = 0; j < 3; ++j) {
      const double range = hi[j] - lo[j];
      const double mid = 0.5 * (lo[j] + hi[j]);
      const double strata_mid = lo[j] + range * (d.strata.col(j).cast<double>().array() + 0.5).mean() / 100.0;
      CHECK(std::abs(strata_mid - mid) < 0.02 * range);
      CHECK(std::abs(d.points.col(j).mean() - mid) < 0.02 * range);
    }
  }

  TEST_CASE("lhs: seeds and errors") {
    const auto a = lhs_sample(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), 10, 5);
    const auto b = lhs_sample(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), 10, 5);
    const auto c = lhs_sample(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), 10, 6);
    CHECK(a.points == b.points);
    CHECK(a.points != c.points);
    CHECK_THROWS_AS(lhs_sample(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, INFINITY), 10, 1), UnboundedDimension);
    CHECK_THROWS(lhs_sample(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), 1, 1));

    const ParamList open = {{"x", Transform::log, 1.0, 0.1, 0.0, INFINITY}};
    CHECK_THROWS_AS(lhs_sample(open, 10, 1), UnboundedDimension);
    const auto p = build_two_city_si();
    const auto design = lhs_sample(p.params, 20, 1);
    for (std::size_t j = 0; j < p.params.size(); ++j) {
      const auto [lo, hi] = transformed_bounds(p.params[j]);
      CHECK(design.lower[static_cast<Eigen::Index>(j)] == lo);
      CHECK(design.upper[static_cast<Eigen::Index>(j)] == hi);
    }
  }

  TEST_CASE("lhs screen ordering") {
    const auto p = build_two_city_si();
    const auto data = two_city_data(p);
    const auto design = lhs_sample(p.params, 12, 9);
    const auto r1 = lhs_screen(p.model, p.params, data.series, design, 1);
    const auto r4 = lhs_screen(p.model, p.params, data.series, design, 4);
    REQUIRE(r1.size() == 12);
    for (std::size_t i = 0; i < r1.size(); ++i) {
      CHECK(r1[i].index == r4[i].index);
      CHECK(r1[i].loglik == r4[i].loglik);
      if (i > 0) CHECK(r1[i - 1].loglik >= r1[i].loglik);
      CHECK(r1[i].theta == design.points.row(r1[i].index).transpose());
      CHECK(r1[i].loglik == run_ekf(p.model, to_natural(p.params, r1[i].theta), data.series).loglik);
    }

    LhsDesign one = design;
    one.points = design.points.topRows(1);
    const auto single = lhs_screen(p.model, p.params, data.series, one, 3);
    CHECK(single.size() == 1);
  }

  TEST_CASE("nelder-mead on a quadratic") {
    const Eigen::Vector3d target(1.0, -2.0, 0.5);
    const auto f = [&](const Theta& x) { return -(x - target).squaredNorm() - 0.1 * (x[0] - target[0]) * (x[1] - target[1]); };
    NelderMeadOptions o;
    o.tol_f = 1e-14;
    o.tol_x = 1e-9;
    const auto r = nelder_mead(f, Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(0.5), o);
    CHECK((r.theta - target).norm() < 1e-5);
    CHECK(r.reason != StopReason::budget);
    CHECK(r.value >= f(Eigen::Vector3d::Zero()));
  }

  TEST_CASE("nelder-mead: converged start, flat objective, budget, degenerate simplex") {
    const auto bowl = [](const Theta& x) { return -x.squaredNorm(); };
    const auto at_opt = nelder_mead(bowl, Eigen::Vector2d::Zero(), Eigen::Vector2d::Constant(1e-10));
    CHECK(at_opt.theta.norm() < 1e-9);
    CHECK(at_opt.evals <= 10);

    const auto flat = nelder_mead([](const Theta&) { return 3.0; }, Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 1));
    CHECK(flat.reason == StopReason::tol_f);
    CHECK(flat.value == 3.0);

    NelderMeadOptions tight;
    tight.tol_f = 0.0;
    tight.tol_x = 0.0;
    tight.max_evals = 40;
    const auto capped = nelder_mead(bowl, Eigen::Vector2d(5, 5), Eigen::Vector2d(1, 1), tight);
    CHECK(capped.reason == StopReason::budget);
    CHECK(capped.evals >= 40);
    CHECK(capped.evals <= 45);

    CHECK_THROWS_AS(nelder_mead(bowl, Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 0)), DegenerateSimplex);

    // NaN regions are treated as -inf and avoided
    const auto holes = [](const Theta& x) { return x[0] > 0.5 ? std::nan("") : -(x[0] + 1) * (x[0] + 1); };
    const auto r = nelder_mead(holes, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 0.3));
    CHECK(r.theta[0] == doctest::Approx(-1.0).epsilon(1e-3));
  }

  TEST_CASE("ksimplex recovers the generating parameters") {
    const auto p = build_two_city_si();
    const auto data = two_city_data(p);
    const auto ranked = lhs_screen(p.model, p.params, data.series, lhs_sample(p.params, 50, 1), 4);
    FitOptions o;
    o.include_prior = false;
    const auto fit = ksimplex(p.model, p.params, data.series, ranked.front().theta, o);
    const Eigen::Vector3d truth(p.config.theta_true[0], p.config.theta_true[1], p.config.theta_true[2]);
    const double at_truth = run_ekf(p.model, truth, data.series).loglik;
    CHECK(fit.loglik >= at_truth - 5.0);
    CHECK(fit.loglik >= ranked.front().loglik);
    CHECK(fit.loglik == doctest::Approx(run_ekf(p.model, to_natural(p.params, fit.theta), data.series).loglik));
  }

  TEST_CASE("simplex and ksimplex agree without process noise") {
    TwoCityConfig cfg;
    cfg.sigma_vol = 0.0;
    const auto p = build_two_city_si(cfg);
    const auto data = two_city_data(p);
    const Theta start = to_transformed(p.params, Eigen::Vector3d(2.0, 1.6, 6.0));
    FitOptions o;
    o.simplex.tol_f = 1e-9;
    o.simplex.tol_x = 1e-8;
    o.integrator.rtol = o.integrator.atol = 1e-9;
    const auto det = simplex(p.model, p.params, data.series, start, o);
    const auto kal = ksimplex(p.model, p.params, data.series, start, o);
    CHECK(std::abs(det.objective - kal.objective) < 1e-5);
    CHECK((det.theta - kal.theta).lpNorm<Eigen::Infinity>() < 1e-3);
  }

  TEST_CASE("fit failure when nothing is finite") {
    const auto p = build_two_city_si();
    const auto data = two_city_data(p);
    Theta outside = initial_theta(p.params);
    outside[0] = 1e3;
    FitOptions o;
    o.step = Eigen::Vector3d::Constant(1e-3);
    CHECK_THROWS_AS(ksimplex(p.model, p.params, data.series, outside, o), FitFailure);
  }
}
