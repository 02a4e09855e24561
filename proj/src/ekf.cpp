#include "ssi/ekf.hpp"

#include "ssi/linalg.hpp"

#include <cmath>
#include <limits>

namespace ssi {

Eigen::Index packed_dimension(Eigen::Index n) {
  for (Eigen::Index k = 0; packed_size(k) <= n; ++k)
    if (packed_size(k) == n) return k;
  return -1;
}

GaussianBelief predict(const GaussianBelief& belief, const ModelDef& model,
                       const Eigen::VectorXd& params, double t_next,
                       const IntegratorConfig& integrator, double* h_hint) {
  if (t_next < belief.time) throw std::invalid_argument("predict: t_next precedes belief time");
  const int k = model.k;
  if (t_next == belief.time) return belief;

  Eigen::VectorXd m(k), f(k);
  Eigen::MatrixXd p(k, k), jac(k, k), q(k, k), dp(k, k);
  const auto rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    unpack_into(y, m, p);
    model.drift(m, params, t, f);
    model.eval_jacobian(m, params, t, jac);
    model.eval_diffusion(m, params, t, q);
    dp.noalias() = jac * p;
    dp += dp.transpose().eval();
    dp += q;
    pack_into(f, dp, dy);
  };

  IntegratorConfig cfg = integrator;
  if (h_hint && *h_hint > 0.0) cfg.h_init = *h_hint;
  const Eigen::VectorXd y0 = pack(belief);
  auto res = integrate<double>(rhs, y0, belief.time, t_next, cfg);
  if (h_hint) *h_hint = res.h_next;

  GaussianBelief out = unpack<double>(res.x, k, t_next);
  out.cov = stabilize(out.cov);
  return out;
}

UpdateResult update(const GaussianBelief& belief, const ObservationStream& stream, double value) {
  if (is_missing(value)) throw std::invalid_argument("update: value is missing");
  const Eigen::Index k = belief.mean.size();
  const Eigen::RowVectorXd h = stream.row(static_cast<int>(k));

  UpdateResult r;
  r.predicted_mean = stream.expected(belief.mean);
  const double noise = stream.variance(r.predicted_mean);
  const Eigen::VectorXd ph = belief.cov * h.transpose();
  r.innovation_var = h.dot(ph) + noise;
  if (!(r.innovation_var > 0.0) || !std::isfinite(r.innovation_var))
    throw SingularInnovation("update: innovation variance is not positive for stream " + stream.name);
  r.innovation = value - r.predicted_mean;

  const Eigen::VectorXd gain = ph / r.innovation_var;
  r.belief.time = belief.time;
  r.belief.mean = belief.mean + gain * r.innovation;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
  a.noalias() -= gain * h;
  r.belief.cov.noalias() = a * belief.cov * a.transpose();
  r.belief.cov.noalias() += noise * gain * gain.transpose();
  r.loglik_increment = log_normal_density(r.innovation, r.innovation_var);
  return r;
}

void reset_components(GaussianBelief& belief, const std::vector<int>& indices) {
  for (int i : indices) {
    belief.mean[i] = 0.0;
    belief.cov.row(i).setZero();
    belief.cov.col(i).setZero();
  }
}

FilterOutput run_ekf(const ModelDef& model, const Eigen::VectorXd& params,
                     const ObservationSeries& series, const IntegratorConfig& integrator,
                     bool record_beliefs) {
  FilterOutput out;
  out.records.reserve(series.frames.size());
  GaussianBelief b;
  double h_hint = integrator.h_init;
  try {
    b.mean = model.initial_state(params);
    b.cov = Eigen::MatrixXd::Zero(model.k, model.k);
    b.time = model.t0;
    if (!b.mean.allFinite()) throw Divergence("run_ekf: non-finite initial state");

    for (std::size_t begin = 0; begin < series.frames.size();) {
      const std::size_t end = series.group_end(begin);
      b = predict(b, model, params, series.frames[begin].time, integrator, &h_hint);
      for (std::size_t i = begin; i < end; ++i) {
        const Frame& fr = series.frames[i];
        const auto& stream = model.streams.at(static_cast<std::size_t>(fr.stream));
        FrameRecord rec;
        rec.time = fr.time;
        rec.stream = fr.stream;
        if (is_missing(fr.value)) {
          rec.missing = true;
          rec.pred_mean = stream.expected(b.mean);
          rec.pred_var = stream.row(model.k).dot(b.cov * stream.row(model.k).transpose()) +
                         stream.variance(rec.pred_mean);
        } else {
          auto u = update(b, stream, fr.value);
          b = std::move(u.belief);
          rec.pred_mean = u.predicted_mean;
          rec.pred_var = u.innovation_var;
          rec.innovation = u.innovation;
          rec.loglik_inc = u.loglik_increment;
          out.loglik += u.loglik_increment;
          b.cov = stabilize(b.cov);
        }
        if (!b.mean.allFinite() || !b.cov.allFinite() || !std::isfinite(out.loglik))
          throw Divergence("run_ekf: non-finite belief");
        if (record_beliefs) {
          rec.filtered_mean = b.mean;
          rec.filtered_cov = b.cov;
        }
        out.records.push_back(std::move(rec));
      }
      for (std::size_t i = begin; i < end; ++i)
        reset_components(b, model.reset_indices(series.frames[i].stream));
      begin = end;
    }
  } catch (const std::runtime_error&) {
    // IntegrateError, Divergence and SingularInnovation all end up here
    out.diverged = true;
    out.loglik = -std::numeric_limits<double>::infinity();
  }
  return out;
}

double deterministic_loglik(const ModelDef& model, const Eigen::VectorXd& params,
                            const ObservationSeries& series, const IntegratorConfig& integrator) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  try {
    Eigen::VectorXd x = model.initial_state(params);
    double t = model.t0;
    double total = 0.0;
    IntegratorConfig cfg = integrator;
    const auto rhs = [&](double tt, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
      model.drift(y, params, tt, dy);
    };
    for (std::size_t begin = 0; begin < series.frames.size();) {
      const std::size_t end = series.group_end(begin);
      const double t_obs = series.frames[begin].time;
      auto res = integrate<double>(rhs, x, t, t_obs, cfg);
      if (res.h_next > 0.0) cfg.h_init = res.h_next;
      x = std::move(res.x);
      t = t_obs;
      for (std::size_t i = begin; i < end; ++i) {
        const Frame& fr = series.frames[i];
        if (is_missing(fr.value)) continue;
        const auto& s = model.streams.at(static_cast<std::size_t>(fr.stream));
        const double mean = s.expected(x);
        const double var = s.variance(mean);
        if (!(var > 0.0)) return kNegInf;
        total += log_normal_density(fr.value - mean, var);
      }
      for (std::size_t i = begin; i < end; ++i)
        for (int idx : model.reset_indices(series.frames[i].stream)) x[idx] = 0.0;
      begin = end;
    }
    return std::isfinite(total) ? total : kNegInf;
  } catch (const std::runtime_error&) {
    return kNegInf;
  }
}

}  // namespace ssi
