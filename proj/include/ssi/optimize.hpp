#ifndef SSI_OPTIMIZE_HPP
#define SSI_OPTIMIZE_HPP

#include "ssi/integrate.hpp"
#include "ssi/model.hpp"
#include "ssi/params.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssi {

class UnboundedDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateSimplex : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Latin hypercube design: in every dimension each of the m equal-width
/// strata of [lower, upper] holds exactly one point.
struct LhsDesign {
  Eigen::MatrixXd points;  ///< m x d
  Eigen::MatrixXi strata;  ///< m x d stratum index of each coordinate
  Eigen::VectorXd lower, upper;

  Eigen::Index size() const { return points.rows(); }
};

LhsDesign lhs_sample(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int m,
                     std::uint64_t seed);
/// Design over the transformed prior bounds of `specs`.
LhsDesign lhs_sample(const ParamList& specs, int m, std::uint64_t seed);

struct RankedPoint {
  Theta theta;
  double loglik = 0.0;
  int index = 0;  ///< row in the design
};

/// EKF log-likelihood at every design point, best first; ties and
/// diverged points (-inf) are ordered by design index.
std::vector<RankedPoint> lhs_screen(const ModelDef& model, const ParamList& specs,
                                    const ObservationSeries& series, const LhsDesign& design,
                                    int workers = 1, const IntegratorConfig& integrator = {});

using Objective = std::function<double(const Theta&)>;

struct NelderMeadOptions {
  double tol_f = 1e-8;
  double tol_x = 1e-8;
  long max_evals = 5000;
};

enum class StopReason { tol_f, tol_x, budget };

struct NelderMeadResult {
  Theta theta;
  double value = 0.0;
  long evals = 0;
  long iterations = 0;
  StopReason reason = StopReason::budget;
};

/// Maximizes `objective` with the Nelder–Mead simplex (reflection 1,
/// expansion 2, contractions 0.5, shrink 0.5). The initial simplex is
/// theta_init plus step[j] along each axis. Non-finite values count as -inf.
NelderMeadResult nelder_mead(const Objective& objective, const Theta& theta_init,
                             const Eigen::VectorXd& step, const NelderMeadOptions& options = {});

struct FitOptions {
  bool include_prior = true;  ///< maximize loglik + log_prior (MAP) when true
  NelderMeadOptions simplex{1e-6, 1e-7, 4000};
  IntegratorConfig integrator;
  Eigen::VectorXd step;  ///< defaults to sd_transf per dimension
};

struct FitResult {
  Theta theta;
  double objective = 0.0;
  double loglik = 0.0;
  long evals = 0;
  StopReason reason = StopReason::budget;
};

class FitFailure : public std::runtime_error {
 public:
  FitFailure(const std::string& what, Theta theta) : std::runtime_error(what), theta_(std::move(theta)) {}
  const Theta& theta() const { return theta_; }

 private:
  Theta theta_;
};

/// Nelder–Mead over the EKF log-likelihood.
FitResult ksimplex(const ModelDef& model, const ParamList& specs, const ObservationSeries& series,
                   const Theta& theta_init, const FitOptions& options = {});
/// Nelder–Mead over the deterministic (noise-free ODE) log-likelihood.
FitResult simplex(const ModelDef& model, const ParamList& specs, const ObservationSeries& series,
                  const Theta& theta_init, const FitOptions& options = {});

}  // namespace ssi

#endif  // SSI_OPTIMIZE_HPP
