#include "ssi/params.hpp"

#include <cmath>
#include <limits>

namespace ssi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sigmoid(y)) without overflow for large |y|.
double log_sigmoid(double y) {
  return y >= 0.0 ? -std::log1p(std::exp(-y)) : y - std::log1p(std::exp(y));
}

}  // namespace

void validate(const ParamSpec& spec) {
  if (!(spec.sd_transf > 0.0))
    throw std::invalid_argument("sd_transf must be positive: " + spec.name);
  if (!(spec.min < spec.max))
    throw std::invalid_argument("empty bounds: " + spec.name);
  switch (spec.transform) {
    case Transform::identity:
      if (!(spec.min <= spec.guess && spec.guess <= spec.max))
        throw std::invalid_argument("guess outside bounds: " + spec.name);
      break;
    case Transform::log:
      if (!(spec.guess > 0.0))
        throw std::invalid_argument("log transform needs a positive guess: " + spec.name);
      if (spec.min < 0.0)
        throw std::invalid_argument("log transform needs non-negative bounds: " + spec.name);
      if (!(spec.min <= spec.guess && spec.guess <= spec.max))
        throw std::invalid_argument("guess outside bounds: " + spec.name);
      break;
    case Transform::logit:
      if (!(spec.min < spec.guess && spec.guess < spec.max))
        throw std::invalid_argument("logit guess must be strictly inside bounds: " + spec.name);
      break;
  }
}

double to_transformed(const ParamSpec& spec, double x) {
  switch (spec.transform) {
    case Transform::identity:
      if (!std::isfinite(x)) throw OutOfDomain(spec.name);
      return x;
    case Transform::log:
      if (!(x > 0.0) || !std::isfinite(x)) throw OutOfDomain(spec.name);
      return std::log(x);
    case Transform::logit:
      if (!(x > spec.min && x < spec.max)) throw OutOfDomain(spec.name);
      return std::log(x - spec.min) - std::log(spec.max - x);
  }
  return x;
}

double to_natural(const ParamSpec& spec, double y) {
  switch (spec.transform) {
    case Transform::identity:
      return y;
    case Transform::log:
      return std::exp(y);
    case Transform::logit:
      if (y >= 0.0) return spec.min + (spec.max - spec.min) / (1.0 + std::exp(-y));
      {
        const double e = std::exp(y);
        return spec.min + (spec.max - spec.min) * e / (1.0 + e);
      }
  }
  return y;
}

Theta to_transformed(const ParamList& specs, const Eigen::VectorXd& natural) {
  if (static_cast<std::size_t>(natural.size()) != specs.size())
    throw std::invalid_argument("parameter vector has wrong dimension");
  Theta theta(natural.size());
  for (Eigen::Index i = 0; i < natural.size(); ++i)
    theta[i] = to_transformed(specs[i], natural[i]);
  return theta;
}

Eigen::VectorXd to_natural(const ParamList& specs, const Theta& theta) {
  if (static_cast<std::size_t>(theta.size()) != specs.size())
    throw std::invalid_argument("parameter vector has wrong dimension");
  Eigen::VectorXd x(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) x[i] = to_natural(specs[i], theta[i]);
  return x;
}

double log_prior(const ParamSpec& spec, double y) {
  if (!std::isfinite(y)) return kNegInf;
  const double width = spec.max - spec.min;
  switch (spec.transform) {
    case Transform::identity:
      if (y < spec.min || y > spec.max) return kNegInf;
      return -std::log(width);
    case Transform::log: {
      const double x = std::exp(y);
      if (x < spec.min || x > spec.max) return kNegInf;
      return y - std::log(width);
    }
    case Transform::logit:
      // uniform on (min, max) pulled back through the logistic map
      return log_sigmoid(y) + log_sigmoid(-y);
  }
  return kNegInf;
}

double log_prior(const ParamList& specs, const Theta& theta) {
  if (static_cast<std::size_t>(theta.size()) != specs.size()) return kNegInf;
  double total = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    total += log_prior(specs[i], theta[i]);
    if (total == kNegInf) return kNegInf;
  }
  return total;
}

Theta initial_theta(const ParamList& specs) {
  Eigen::VectorXd guess(static_cast<Eigen::Index>(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) guess[static_cast<Eigen::Index>(i)] = specs[i].guess;
  return to_transformed(specs, guess);
}

Eigen::MatrixXd diagonal_covariance(const ParamList& specs) {
  Eigen::VectorXd sd(static_cast<Eigen::Index>(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) sd[static_cast<Eigen::Index>(i)] = specs[i].sd_transf;
  return sd.array().square().matrix().asDiagonal();
}

std::pair<double, double> transformed_bounds(const ParamSpec& spec) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (spec.transform) {
    case Transform::identity:
      return {spec.min, spec.max};
    case Transform::log:
      return {spec.min > 0.0 ? std::log(spec.min) : -inf, std::log(spec.max)};
    case Transform::logit:
      return {-inf, inf};
  }
  return {-inf, inf};
}

Transform parse_transform(const std::string& name) {
  if (name == "identity" || name == "none") return Transform::identity;
  if (name == "log") return Transform::log;
  if (name == "logit") return Transform::logit;
  throw std::invalid_argument("unknown transform: " + name);
}

std::string transform_name(Transform t) {
  switch (t) {
    case Transform::identity: return "identity";
    case Transform::log: return "log";
    case Transform::logit: return "logit";
  }
  return "identity";
}

}  // namespace ssi
