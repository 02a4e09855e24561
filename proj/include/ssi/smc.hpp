#ifndef SSI_SMC_HPP
#define SSI_SMC_HPP

#include "ssi/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ssi {

class BadWeights : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Systematic resampling on the grid (u + j) / J. Returns ancestor indices
/// in ascending order; index i appears floor or ceil of J * w_i times.
std::vector<int> systematic_resample(const Eigen::Ref<const Eigen::VectorXd>& weights, double u,
                                     Eigen::Index n_out = -1);

/// Weighted particles, one column per particle. Each particle slot owns a
/// counter-based random stream keyed by (seed, epoch, slot), so results do
/// not depend on how slots are distributed over workers.
struct ParticleEnsemble {
  Eigen::MatrixXd states;       ///< k x J
  Eigen::VectorXd log_weights;  ///< J
  double time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;  ///< number of propagate calls so far

  Eigen::Index size() const { return states.cols(); }
  /// Normalized weights; zero vector if every log weight is -inf.
  Eigen::VectorXd normalized_weights() const;
};

/// J copies of the model's initial state at t0 with equal weights.
ParticleEnsemble initial_ensemble(const ModelDef& model, const Eigen::VectorXd& params, int J,
                                  std::uint64_t seed);

/// Euler–Maruyama propagation of every particle to t_next. Particles that
/// become non-finite get log weight -inf.
void propagate(ParticleEnsemble& ensemble, const ModelDef& model, const Eigen::VectorXd& params,
               double t_next, double dt, int workers = 1);

struct PfOutput {
  double loglik = 0.0;
  bool degenerate = false;
  std::vector<double> frame_time;
  std::vector<int> frame_stream;
  std::vector<double> weight_ess;  ///< NaN for missing frames
  std::vector<double> loglik_inc;
};

/// Bootstrap particle filter. Resamples after every observed frame; the
/// estimate is sum over frames of log(mean weight).
PfOutput run_pf(const ModelDef& model, const Eigen::VectorXd& params, const ObservationSeries& series,
                int J, double dt, std::uint64_t seed, int workers = 1);

}  // namespace ssi

#endif  // SSI_SMC_HPP
