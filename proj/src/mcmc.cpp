#include "ssi/mcmc.hpp"

#include "ssi/ekf.hpp"
#include "ssi/rng.hpp"
#include "ssi/smc.hpp"

#include <cmath>
#include <limits>

namespace ssi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kEvalStream = 0x70666576616c7321ULL;

bool is_diagonal(const Eigen::MatrixXd& m) {
  return (m - Eigen::MatrixXd(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

LikelihoodBackend ekf_backend(ModelDef model, ParamList specs, ObservationSeries series,
                              IntegratorConfig integrator) {
  return {"ekf", [model = std::move(model), specs = std::move(specs), series = std::move(series),
                  integrator](const Theta& theta, std::uint64_t) {
            return run_ekf(model, to_natural(specs, theta), series, integrator, false).loglik;
          }};
}

LikelihoodBackend pf_backend(ModelDef model, ParamList specs, ObservationSeries series, int J,
                             double dt, int workers) {
  return {"pf", [model = std::move(model), specs = std::move(specs), series = std::move(series), J,
                 dt, workers](const Theta& theta, std::uint64_t seed) {
            return run_pf(model, to_natural(specs, theta), series, J, dt, seed, workers).loglik;
          }};
}

InitialScale initial_scale(Eigen::Index d) {
  if (d < 1) throw std::invalid_argument("initial_scale: dimension must be >= 1");
  const double factor = optimal_factor(d);
  return {factor, std::sqrt(factor)};
}

double adapt_scale(double epsilon, double acc_rate, double cooling, long iteration) {
  return epsilon * std::exp(std::pow(cooling, static_cast<double>(iteration)) * (acc_rate - 0.234));
}

RunningCovariance::RunningCovariance(Eigen::Index d)
    : mean_(Eigen::VectorXd::Zero(d)), m2_(Eigen::MatrixXd::Zero(d, d)) {}

void RunningCovariance::add(const Eigen::VectorXd& x) {
  if (mean_.size() != x.size()) {
    if (n_ != 0) throw std::invalid_argument("RunningCovariance: dimension changed");
    mean_ = Eigen::VectorXd::Zero(x.size());
    m2_ = Eigen::MatrixXd::Zero(x.size(), x.size());
  }
  ++n_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_.noalias() += delta * (x - mean_).transpose();
}

Eigen::MatrixXd RunningCovariance::covariance() const {
  if (n_ < 2) return Eigen::MatrixXd::Zero(mean_.size(), mean_.size());
  const Eigen::MatrixXd c = m2_ / static_cast<double>(n_ - 1);
  return 0.5 * (c + c.transpose());
}

ProposalCov current_proposal(const AdaptState& state, const Eigen::MatrixXd& sigma0, Eigen::Index d) {
  ProposalCov out;
  if (state.phase == Phase::scale) {
    out.sigma = state.epsilon * state.epsilon * sigma0;
    out.provenance = is_diagonal(sigma0) ? CovProvenance::diagonal : CovProvenance::file;
    return out;
  }
  if (state.accepted + 1 < d + 1 || state.samples.count() < d + 1)
    throw NotEnoughSamples("current_proposal: fewer than d+1 distinct samples");
  const Eigen::MatrixXd emp = state.samples.covariance();
  const double ridge = 1e-9 * emp.trace() / static_cast<double>(d);
  out.sigma = optimal_factor(d) * (emp + ridge * Eigen::MatrixXd::Identity(d, d));
  out.provenance = CovProvenance::empirical;
  return out;
}

Eigen::MatrixXd proposal_factor(const Eigen::MatrixXd& sigma) {
  const Eigen::Index d = sigma.rows();
  Eigen::MatrixXd s = 0.5 * (sigma + sigma.transpose());
  double ridge = 1e-9 * std::abs(s.trace()) / static_cast<double>(d);
  if (ridge == 0.0) ridge = 1e-12;
  for (int attempt = 0; attempt < 40; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    s.diagonal().array() += ridge;
    ridge *= 10.0;
  }
  throw std::runtime_error("proposal_factor: covariance cannot be factorized");
}

StepResult metropolis_step(const ChainPoint& current, const Eigen::MatrixXd& proposal_chol,
                           const ParamList& specs, const LikelihoodBackend& backend,
                           std::mt19937_64& rng, std::uint64_t eval_seed) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  Eigen::VectorXd z(current.theta.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  const double log_u = std::log(uniform(rng));

  StepResult r;
  r.point.theta = current.theta + proposal_chol * z;
  r.point.logprior = log_prior(specs, r.point.theta);
  if (r.point.logprior == kNegInf) {
    r.point = current;
    return r;
  }
  r.point.loglik = backend.loglik(r.point.theta, eval_seed);
  if (std::isnan(r.point.loglik)) r.point.loglik = kNegInf;

  const double proposed = r.point.loglik + r.point.logprior;
  const double existing = current.loglik + current.logprior;
  bool accept = false;
  if (proposed == kNegInf) accept = false;
  else if (existing == kNegInf || std::isnan(existing)) accept = true;
  else accept = log_u < proposed - existing;

  if (!accept) r.point = current;
  r.accepted = accept;
  return r;
}

Eigen::MatrixXd McmcTrace::samples(std::size_t from) const {
  const Eigen::Index d = dim();
  const auto n = rows.size() > from ? rows.size() - from : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = rows[from + i].theta.transpose();
  return out;
}

double McmcTrace::acceptance_rate(std::size_t from) const {
  if (rows.size() <= from) return 0.0;
  std::size_t acc = 0;
  for (std::size_t i = from; i < rows.size(); ++i) acc += rows[i].accepted ? 1 : 0;
  return static_cast<double>(acc) / static_cast<double>(rows.size() - from);
}

McmcTrace run_chain(const ParamList& specs, const LikelihoodBackend& backend, const Theta& theta0,
                    const Eigen::MatrixXd& sigma0, const ChainOptions& options) {
  const Eigen::Index d = theta0.size();
  if (options.iterations < 1) throw std::invalid_argument("run_chain: iterations must be >= 1");
  if (static_cast<std::size_t>(d) != specs.size() || sigma0.rows() != d || sigma0.cols() != d)
    throw std::invalid_argument("run_chain: dimension mismatch");

  McmcTrace trace;
  trace.backend = backend.tag;
  for (const auto& s : specs) trace.names.push_back(s.name);
  trace.rows.reserve(static_cast<std::size_t>(options.iterations));

  std::mt19937_64 rng(options.seed);
  AdaptState state;
  state.epsilon = initial_scale(d).epsilon0;
  state.cooling = options.cooling;
  state.switch_threshold = options.switch_after;
  state.samples = RunningCovariance(d);

  ChainPoint current;
  current.theta = theta0;
  current.logprior = log_prior(specs, theta0);
  if (current.logprior != kNegInf) current.loglik = backend.loglik(theta0, stream_key(options.seed ^ kEvalStream, 0));
  if (std::isnan(current.loglik)) current.loglik = kNegInf;
  state.samples.add(current.theta);

  Eigen::MatrixXd chol;
  Phase chol_phase = state.phase;
  double chol_epsilon = -1.0;
  for (long i = 0; i < options.iterations; ++i) {
    state.iteration = i;
    // the factor only changes when epsilon or the empirical covariance does
    if (state.phase == Phase::empirical || chol_phase != state.phase || chol_epsilon != state.epsilon) {
      chol = proposal_factor(current_proposal(state, sigma0, d).sigma);
      chol_phase = state.phase;
      chol_epsilon = state.epsilon;
    }
    const double epsilon_used = state.epsilon;
    const auto step = metropolis_step(current, chol, specs, backend, rng,
                                      stream_key(options.seed ^ kEvalStream, static_cast<std::uint64_t>(i) + 1));
    current = step.point;
    if (step.accepted) ++state.accepted;
    state.samples.add(current.theta);

    if (options.adaptive && state.phase == Phase::scale) {
      const double acc_rate = static_cast<double>(state.accepted) / static_cast<double>(i + 1);
      state.epsilon = adapt_scale(state.epsilon, acc_rate, state.cooling, i);
      if (state.accepted >= state.switch_threshold && state.accepted + 1 >= d + 1) {
        state.phase = Phase::empirical;
        trace.switch_iteration = i + 1;
        trace.snapshots.push_back({i + 1, state.samples.covariance()});
      }
    }

    trace.rows.push_back({i, current.theta, current.loglik, current.logprior, step.accepted, epsilon_used});
    if (options.snapshot_every > 0 && (i + 1) % options.snapshot_every == 0)
      trace.snapshots.push_back({i + 1, state.samples.covariance()});
  }
  trace.final_cov = state.samples.covariance();
  return trace;
}

}  // namespace ssi
