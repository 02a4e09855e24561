#ifndef SSI_PARAMS_HPP
#define SSI_PARAMS_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ssi {

/// A point in the unconstrained (transformed) parameter space.
using Theta = Eigen::VectorXd;

enum class Transform { identity, log, logit };

/// Metadata for one estimated parameter.
///
/// `bounds` are natural-scale and serve both the uniform prior and the logit
/// map. `sd_transf` is the proposal standard deviation in transformed space.
struct ParamSpec {
  std::string name;
  Transform transform = Transform::identity;
  double guess = 0.0;
  double sd_transf = 0.1;
  double min = 0.0;
  double max = 1.0;
};

using ParamList = std::vector<ParamSpec>;

class OutOfDomain : public std::domain_error {
 public:
  explicit OutOfDomain(const std::string& name)
      : std::domain_error("value outside transform domain: " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Throws std::invalid_argument when a spec violates its invariants.
void validate(const ParamSpec& spec);

double to_transformed(const ParamSpec& spec, double natural);
double to_natural(const ParamSpec& spec, double transformed);

Theta to_transformed(const ParamList& specs, const Eigen::VectorXd& natural);
Eigen::VectorXd to_natural(const ParamList& specs, const Theta& theta);

/// Log density of the uniform-on-bounds prior, expressed in transformed
/// space (Jacobian of the inverse transform included). -inf out of support.
double log_prior(const ParamSpec& spec, double transformed);
double log_prior(const ParamList& specs, const Theta& theta);

/// Guess values mapped to transformed space.
Theta initial_theta(const ParamList& specs);

/// diag(sd_transf^2), the default proposal covariance.
Eigen::MatrixXd diagonal_covariance(const ParamList& specs);

/// Transformed-space interval [lo, hi] covered by the prior bounds.
std::pair<double, double> transformed_bounds(const ParamSpec& spec);

Transform parse_transform(const std::string& name);
std::string transform_name(Transform t);

}  // namespace ssi

#endif  // SSI_PARAMS_HPP
