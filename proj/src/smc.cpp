#include "ssi/smc.hpp"

#include "ssi/parallel.hpp"
#include "ssi/rng.hpp"

#include <cmath>
#include <limits>

namespace ssi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kResampleStream = 0x7265736d706c6521ULL;

double log_sum_exp(const Eigen::VectorXd& v) {
  const double top = v.maxCoeff();
  if (top == kNegInf) return kNegInf;
  return top + std::log((v.array() - top).exp().sum());
}

}  // namespace

std::vector<int> systematic_resample(const Eigen::Ref<const Eigen::VectorXd>& weights, double u,
                                     Eigen::Index n_out) {
  const Eigen::Index n = weights.size();
  if (n < 1) throw BadWeights("systematic_resample: empty weight vector");
  if ((weights.array() < 0.0).any() || !weights.allFinite())
    throw BadWeights("systematic_resample: negative or non-finite weight");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw BadWeights("systematic_resample: weights do not sum to 1");
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("systematic_resample: u outside [0, 1)");
  if (n_out < 0) n_out = n;

  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_out));
  double cumulative = weights[0];
  Eigen::Index i = 0;
  for (Eigen::Index j = 0; j < n_out; ++j) {
    const double position = (u + static_cast<double>(j)) / static_cast<double>(n_out);
    while (position >= cumulative && i + 1 < n) cumulative += weights[++i];
    out.push_back(static_cast<int>(i));
  }
  return out;
}

Eigen::VectorXd ParticleEnsemble::normalized_weights() const {
  const double top = log_weights.maxCoeff();
  if (top == kNegInf) return Eigen::VectorXd::Zero(log_weights.size());
  Eigen::VectorXd w = (log_weights.array() - top).exp();
  return w / w.sum();
}

ParticleEnsemble initial_ensemble(const ModelDef& model, const Eigen::VectorXd& params, int J,
                                  std::uint64_t seed) {
  if (J < 2) throw std::invalid_argument("particle filter needs J >= 2");
  ParticleEnsemble e;
  const Eigen::VectorXd x0 = model.initial_state(params);
  e.states = x0.replicate(1, J);
  e.log_weights = Eigen::VectorXd::Zero(J);
  e.time = model.t0;
  e.seed = seed;
  return e;
}

void propagate(ParticleEnsemble& ensemble, const ModelDef& model, const Eigen::VectorXd& params,
               double t_next, double dt, int workers) {
  if (t_next < ensemble.time) throw std::invalid_argument("propagate: t_next precedes ensemble time");
  const std::uint64_t epoch = ensemble.epoch++;
  if (t_next == ensemble.time) return;
  const double t = ensemble.time;
  parallel_for(static_cast<std::size_t>(ensemble.size()), workers, [&](std::size_t begin, std::size_t end) {
    EulerMaruyama stepper(model);
    for (std::size_t j = begin; j < end; ++j) {
      const auto slot = static_cast<Eigen::Index>(j);
      if (ensemble.log_weights[slot] == kNegInf) continue;
      CounterRng rng(stream_key(ensemble.seed, epoch, j));
      if (!stepper.advance(ensemble.states.col(slot), params, t, t_next, dt, rng))
        ensemble.log_weights[slot] = kNegInf;
    }
  });
  ensemble.time = t_next;
}

PfOutput run_pf(const ModelDef& model, const Eigen::VectorXd& params, const ObservationSeries& series,
                int J, double dt, std::uint64_t seed, int workers) {
  if (!(dt > 0.0)) throw std::invalid_argument("run_pf: dt must be positive");
  PfOutput out;
  ParticleEnsemble e = initial_ensemble(model, params, J, seed);
  const double log_j = std::log(static_cast<double>(J));
  Eigen::MatrixXd scratch(model.k, J);

  for (std::size_t begin = 0; begin < series.frames.size();) {
    const std::size_t end = series.group_end(begin);
    propagate(e, model, params, series.frames[begin].time, dt, workers);

    for (std::size_t f = begin; f < end; ++f) {
      const Frame& frame = series.frames[f];
      out.frame_time.push_back(frame.time);
      out.frame_stream.push_back(frame.stream);
      if (is_missing(frame.value)) {
        out.weight_ess.push_back(std::numeric_limits<double>::quiet_NaN());
        out.loglik_inc.push_back(0.0);
        continue;
      }
      const auto& stream = model.streams.at(static_cast<std::size_t>(frame.stream));
      parallel_for(static_cast<std::size_t>(J), workers, [&](std::size_t b, std::size_t en) {
        for (std::size_t j = b; j < en; ++j) {
          const auto slot = static_cast<Eigen::Index>(j);
          if (e.log_weights[slot] == kNegInf) continue;
          const double mean = stream.expected(e.states.col(slot));
          const double var = stream.variance(mean);
          const double r = frame.value - mean;
          double lw = -0.5 * (1.8378770664093454836 + std::log(var) + r * r / var);
          if (!std::isfinite(lw)) lw = kNegInf;
          e.log_weights[slot] += lw;
        }
      });

      const double inc = log_sum_exp(e.log_weights) - log_j;
      out.loglik_inc.push_back(inc);
      if (inc == kNegInf || std::isnan(inc)) {
        out.weight_ess.push_back(0.0);
        out.degenerate = true;
        out.loglik = kNegInf;
        return out;
      }
      out.loglik += inc;
      const Eigen::VectorXd w = e.normalized_weights();
      out.weight_ess.push_back(1.0 / w.squaredNorm());

      CounterRng rng(stream_key(seed ^ kResampleStream, f));
      const auto ancestors = systematic_resample(w / w.sum(), rng.uniform());
      for (int j = 0; j < J; ++j) scratch.col(j) = e.states.col(ancestors[static_cast<std::size_t>(j)]);
      e.states.swap(scratch);
      e.log_weights.setZero();
    }
    for (std::size_t f = begin; f < end; ++f)
      for (int idx : model.reset_indices(series.frames[f].stream)) e.states.row(idx).setZero();
    begin = end;
  }
  return out;
}

}  // namespace ssi
