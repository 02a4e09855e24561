#include "ssi/optimize.hpp"

#include "ssi/ekf.hpp"
#include "ssi/parallel.hpp"
#include "ssi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ssi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Uniform integer in [0, bound) by rejection.
std::uint64_t bounded(CounterRng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % bound;
}

double sanitize(double v) { return std::isnan(v) ? kNegInf : v; }

}  // namespace

LhsDesign lhs_sample(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int m,
                     std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("lhs_sample: need m >= 2");
  if (lower.size() != upper.size()) throw std::invalid_argument("lhs_sample: bound size mismatch");
  const Eigen::Index d = lower.size();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]))
      throw UnboundedDimension("lhs_sample: dimension " + std::to_string(j) + " has an infinite range");
    if (!(lower[j] < upper[j])) throw std::invalid_argument("lhs_sample: empty range");
  }

  LhsDesign design;
  design.lower = lower;
  design.upper = upper;
  design.points.resize(m, d);
  design.strata.resize(m, d);
  CounterRng rng(stream_key(seed, 0x6c6873));
  std::vector<int> perm(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i)
      std::swap(perm[i], perm[static_cast<std::size_t>(bounded(rng, i + 1))]);
    const double width = (upper[j] - lower[j]) / m;
    for (int i = 0; i < m; ++i) {
      const int stratum = perm[static_cast<std::size_t>(i)];
      design.strata(i, j) = stratum;
      double x = lower[j] + width * (stratum + rng.uniform());
      // keep rounding from pushing a point into the next stratum
      x = std::clamp(x, lower[j] + width * stratum, std::nextafter(lower[j] + width * (stratum + 1), lower[j]));
      design.points(i, j) = x;
    }
  }
  return design;
}

LhsDesign lhs_sample(const ParamList& specs, int m, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(specs.size());
  Eigen::VectorXd lo(d), hi(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto [a, b] = transformed_bounds(specs[static_cast<std::size_t>(j)]);
    if (!std::isfinite(a) || !std::isfinite(b))
      throw UnboundedDimension("lhs_sample: parameter " + specs[static_cast<std::size_t>(j)].name +
                               " has an unbounded transformed range");
    lo[j] = a;
    hi[j] = b;
  }
  return lhs_sample(lo, hi, m, seed);
}

std::vector<RankedPoint> lhs_screen(const ModelDef& model, const ParamList& specs,
                                    const ObservationSeries& series, const LhsDesign& design,
                                    int workers, const IntegratorConfig& integrator) {
  const auto m = static_cast<std::size_t>(design.size());
  std::vector<RankedPoint> ranked(m);
  parallel_for(m, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RankedPoint& p = ranked[i];
      p.index = static_cast<int>(i);
      p.theta = design.points.row(static_cast<Eigen::Index>(i)).transpose();
      p.loglik = sanitize(run_ekf(model, to_natural(specs, p.theta), series, integrator, false).loglik);
    }
  });
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedPoint& a, const RankedPoint& b) { return a.loglik > b.loglik; });
  return ranked;
}

NelderMeadResult nelder_mead(const Objective& objective, const Theta& theta_init,
                             const Eigen::VectorXd& step, const NelderMeadOptions& options) {
  const Eigen::Index d = theta_init.size();
  if (d < 1 || step.size() != d) throw std::invalid_argument("nelder_mead: dimension mismatch");
  if (!theta_init.allFinite()) throw std::invalid_argument("nelder_mead: non-finite start");
  if (!step.allFinite() || (step.array() == 0.0).any())
    throw DegenerateSimplex("nelder_mead: initial simplex is degenerate (zero or non-finite step)");

  NelderMeadResult res;
  const auto eval = [&](const Theta& x) {
    ++res.evals;
    return sanitize(objective(x));
  };

  const auto n = static_cast<std::size_t>(d) + 1;
  std::vector<Theta> x(n, theta_init);
  std::vector<double> f(n);
  f[0] = eval(x[0]);
  for (Eigen::Index j = 0; j < d; ++j) {
    x[static_cast<std::size_t>(j) + 1][j] += step[j];
    f[static_cast<std::size_t>(j) + 1] = eval(x[static_cast<std::size_t>(j) + 1]);
  }

  std::vector<std::size_t> order(n);
  Theta centroid(d), xr(d), xe(d), xc(d);
  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
    const std::size_t best = order.front(), worst = order.back(), second_worst = order[n - 2];

    const double spread = f[best] - f[worst];
    double diameter = 0.0;
    for (std::size_t i = 0; i < n; ++i) diameter = std::max(diameter, (x[i] - x[best]).lpNorm<Eigen::Infinity>());
    res.theta = x[best];
    res.value = f[best];
    if (f[best] > kNegInf && spread < options.tol_f) {
      res.reason = StopReason::tol_f;
      break;
    }
    if (diameter < options.tol_x) {
      res.reason = StopReason::tol_x;
      break;
    }
    if (res.evals >= options.max_evals) {
      res.reason = StopReason::budget;
      break;
    }
    ++res.iterations;

    centroid.setZero();
    for (std::size_t i = 0; i < n; ++i)
      if (i != worst) centroid += x[i];
    centroid /= static_cast<double>(d);

    xr = centroid + (centroid - x[worst]);
    const double fr = eval(xr);
    if (fr > f[best]) {
      xe = centroid + 2.0 * (xr - centroid);
      const double fe = eval(xe);
      if (fe > fr) {
        x[worst] = xe;
        f[worst] = fe;
      } else {
        x[worst] = xr;
        f[worst] = fr;
      }
      continue;
    }
    if (fr > f[second_worst]) {
      x[worst] = xr;
      f[worst] = fr;
      continue;
    }
    bool contracted = false;
    if (fr > f[worst]) {
      xc = centroid + 0.5 * (xr - centroid);
      const double fc = eval(xc);
      if (fc >= fr) {
        x[worst] = xc;
        f[worst] = fc;
        contracted = true;
      }
    } else {
      xc = centroid + 0.5 * (x[worst] - centroid);
      const double fc = eval(xc);
      if (fc > f[worst]) {
        x[worst] = xc;
        f[worst] = fc;
        contracted = true;
      }
    }
    if (!contracted) {
      for (std::size_t i = 0; i < n; ++i) {
        if (i == best) continue;
        x[i] = x[best] + 0.5 * (x[i] - x[best]);
        f[i] = eval(x[i]);
      }
    }
  }
  return res;
}

namespace {

FitResult fit(const std::function<double(const Eigen::VectorXd&)>& loglik, const ParamList& specs,
              const Theta& theta_init, const FitOptions& options) {
  const Eigen::VectorXd step =
      options.step.size() == theta_init.size() ? options.step : diagonal_covariance(specs).diagonal().cwiseSqrt();
  const auto objective = [&](const Theta& theta) {
    const double lp = log_prior(specs, theta);
    if (lp == kNegInf) return kNegInf;
    const double ll = loglik(to_natural(specs, theta));
    return options.include_prior ? ll + lp : ll;
  };
  const auto nm = nelder_mead(objective, theta_init, step, options.simplex);
  if (nm.value == kNegInf)
    throw FitFailure("simplex: every evaluated point diverged or left the prior support", nm.theta);
  FitResult r;
  r.theta = nm.theta;
  r.objective = nm.value;
  r.loglik = options.include_prior ? nm.value - log_prior(specs, nm.theta) : nm.value;
  r.evals = nm.evals;
  r.reason = nm.reason;
  return r;
}

}  // namespace

FitResult ksimplex(const ModelDef& model, const ParamList& specs, const ObservationSeries& series,
                   const Theta& theta_init, const FitOptions& options) {
  return fit([&](const Eigen::VectorXd& p) { return run_ekf(model, p, series, options.integrator, false).loglik; },
             specs, theta_init, options);
}

FitResult simplex(const ModelDef& model, const ParamList& specs, const ObservationSeries& series,
                  const Theta& theta_init, const FitOptions& options) {
  const ModelDef collapsed = deterministic_collapse(model);
  return fit([&](const Eigen::VectorXd& p) { return deterministic_loglik(collapsed, p, series, options.integrator); },
             specs, theta_init, options);
}

}  // namespace ssi
