#ifndef SSI_MCMC_HPP
#define SSI_MCMC_HPP

#include "ssi/integrate.hpp"
#include "ssi/model.hpp"
#include "ssi/params.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssi {

/// Log-likelihood of a transformed-space point. `seed` feeds Monte Carlo
/// backends and is ignored by deterministic ones. Returns -inf on failure.
struct LikelihoodBackend {
  std::string tag;
  std::function<double(const Theta&, std::uint64_t seed)> loglik;
};

LikelihoodBackend ekf_backend(ModelDef model, ParamList specs, ObservationSeries series,
                              IntegratorConfig integrator = {});
LikelihoodBackend pf_backend(ModelDef model, ParamList specs, ObservationSeries series, int J,
                             double dt, int workers = 1);

/// Optimal random-walk covariance factor 2.38^2 / d.
inline double optimal_factor(Eigen::Index d) { return 2.38 * 2.38 / static_cast<double>(d); }

struct InitialScale {
  double covariance_factor;  ///< 2.38^2 / d, applied to Sigma_0
  double epsilon0;           ///< sqrt(covariance_factor), so epsilon0^2 Sigma_0 is the first proposal
};
InitialScale initial_scale(Eigen::Index d);

/// epsilon * exp(a^i (acc_rate - 0.234)).
double adapt_scale(double epsilon, double acc_rate, double cooling, long iteration);

/// Streaming mean and (n-1)-normalized covariance.
class RunningCovariance {
 public:
  explicit RunningCovariance(Eigen::Index d = 0);
  void add(const Eigen::VectorXd& x);
  long count() const { return n_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::MatrixXd covariance() const;

 private:
  long n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

enum class Phase { scale, empirical };

struct AdaptState {
  double epsilon = 1.0;
  double cooling = 0.999;
  long accepted = 0;
  long iteration = 0;
  Phase phase = Phase::scale;
  long switch_threshold = 100;
  RunningCovariance samples;
};

enum class CovProvenance { diagonal, empirical, file, fixed };

struct ProposalCov {
  Eigen::MatrixXd sigma;
  CovProvenance provenance = CovProvenance::fixed;
};

class NotEnoughSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Proposal covariance for the current phase: epsilon^2 Sigma_0 while
/// scaling, (2.38^2/d)(Sigma_emp + ridge I) once empirical.
ProposalCov current_proposal(const AdaptState& state, const Eigen::MatrixXd& sigma0, Eigen::Index d);

/// Lower Cholesky factor, adding a ridge of 1e-9 trace/d (then growing it)
/// until the factorization succeeds.
Eigen::MatrixXd proposal_factor(const Eigen::MatrixXd& sigma);

struct ChainPoint {
  Theta theta;
  double loglik = -std::numeric_limits<double>::infinity();
  double logprior = -std::numeric_limits<double>::infinity();
};

struct StepResult {
  ChainPoint point;
  bool accepted = false;
};

/// One random-walk Metropolis–Hastings step. The current point's log
/// likelihood is reused, never recomputed, so a noisy unbiased backend
/// yields a valid pseudo-marginal chain. Out-of-support proposals are
/// rejected without calling the backend.
StepResult metropolis_step(const ChainPoint& current, const Eigen::MatrixXd& proposal_chol,
                           const ParamList& specs, const LikelihoodBackend& backend,
                           std::mt19937_64& rng, std::uint64_t eval_seed);

struct TraceRow {
  long index = 0;
  Theta theta;
  double loglik = 0.0;
  double logprior = 0.0;
  bool accepted = false;
  double epsilon = 0.0;
};

struct CovSnapshot {
  long iteration = 0;
  Eigen::MatrixXd cov;
};

struct McmcTrace {
  std::vector<std::string> names;
  std::string backend;
  std::vector<TraceRow> rows;
  std::vector<CovSnapshot> snapshots;  ///< empirical covariance, unscaled
  long switch_iteration = -1;          ///< first EMPIRICAL iteration, -1 if never

  Eigen::Index dim() const { return rows.empty() ? 0 : rows.front().theta.size(); }
  /// rows x d matrix of transformed samples, optionally from row `from`.
  Eigen::MatrixXd samples(std::size_t from = 0) const;
  double acceptance_rate(std::size_t from = 0) const;
  /// Empirical covariance of all chain states including the start point.
  Eigen::MatrixXd final_cov;
};

struct ChainOptions {
  long iterations = 1000;
  double cooling = 0.999;
  long switch_after = 100;  ///< accepted samples before the empirical phase
  bool adaptive = true;     ///< false keeps (2.38^2/d) Sigma_0 for the whole run
  std::uint64_t seed = 1;
  long snapshot_every = 1000;
};

McmcTrace run_chain(const ParamList& specs, const LikelihoodBackend& backend, const Theta& theta0,
                    const Eigen::MatrixXd& sigma0, const ChainOptions& options);

}  // namespace ssi

#endif  // SSI_MCMC_HPP
