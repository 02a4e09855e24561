#ifndef SSI_EKF_HPP
#define SSI_EKF_HPP

#include "ssi/integrate.hpp"
#include "ssi/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace ssi {

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularInnovation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Length of a packed mean + upper-triangular covariance: k(k+1)/2 + k.
constexpr Eigen::Index packed_size(Eigen::Index k) { return k * (k + 1) / 2 + k; }

/// Inverse of packed_size; -1 if `n` is not a packed length.
Eigen::Index packed_dimension(Eigen::Index n);

template <typename Scalar>
struct Belief {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Vec mean;
  Mat cov;
  double time = 0.0;
};

using GaussianBelief = Belief<double>;

/// Mean followed by the covariance upper triangle, row-major.
template <typename DerivedM, typename DerivedP, typename DerivedOut>
void pack_into(const Eigen::MatrixBase<DerivedM>& mean, const Eigen::MatrixBase<DerivedP>& cov,
               Eigen::MatrixBase<DerivedOut>& out) {
  const Eigen::Index k = mean.size();
  out.head(k) = mean;
  Eigen::Index pos = k;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) out[pos++] = cov(i, j);
}

template <typename DerivedIn, typename DerivedM, typename DerivedP>
void unpack_into(const Eigen::MatrixBase<DerivedIn>& packed, Eigen::MatrixBase<DerivedM>& mean,
                 Eigen::MatrixBase<DerivedP>& cov) {
  const Eigen::Index k = mean.size();
  mean = packed.head(k);
  Eigen::Index pos = k;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) {
      cov(i, j) = packed[pos];
      cov(j, i) = packed[pos++];
    }
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pack(const Belief<Scalar>& b) {
  const Eigen::Index k = b.mean.size();
  if (b.cov.rows() != k || b.cov.cols() != k) throw LengthMismatch("pack: covariance shape");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(packed_size(k));
  pack_into(b.mean, b.cov, out);
  return out;
}

template <typename Scalar>
Belief<Scalar> unpack(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& packed, Eigen::Index k,
                      double time = 0.0) {
  if (k < 0 || packed.size() != packed_size(k))
    throw LengthMismatch("unpack: packed length does not match k(k+1)/2 + k");
  Belief<Scalar> b;
  b.mean.resize(k);
  b.cov.resize(k, k);
  b.time = time;
  unpack_into(packed, b.mean, b.cov);
  return b;
}

/// Symmetrizes and, when a negative eigenvalue is present, clips the
/// spectrum from below at 1e-12 * trace / k.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> stabilize(
    const Eigen::MatrixBase<Derived>& cov) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat p = Scalar(0.5) * (cov + cov.transpose());
  const Eigen::Index k = p.rows();
  if (k == 0) return p;
  Eigen::LDLT<Mat> ldlt(p);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) return p;
  Eigen::SelfAdjointEigenSolver<Mat> eig(p);
  auto values = eig.eigenvalues();
  if (values.minCoeff() >= Scalar(0)) return p;
  const Scalar floor = std::max(Scalar(0), Scalar(1e-12) * p.trace() / Scalar(k));
  values = values.cwiseMax(floor);
  p = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  return Scalar(0.5) * (p + p.transpose());
}

/// Integrates the mean and covariance moment equations
///   dm/dt = f(m),  dP/dt = F(m) P + P F(m)^T + Q(m)
/// as one packed ODE up to t_next. Throws IntegrateError on failure.
GaussianBelief predict(const GaussianBelief& belief, const ModelDef& model,
                       const Eigen::VectorXd& params, double t_next,
                       const IntegratorConfig& integrator, double* h_hint = nullptr);

struct UpdateResult {
  GaussianBelief belief;
  double loglik_increment = 0.0;
  double predicted_mean = 0.0;  ///< h(m)
  double innovation_var = 0.0;  ///< S = H P H^T + v(h(m))
  double innovation = 0.0;
};

/// Scalar Kalman update with a Joseph-form covariance.
UpdateResult update(const GaussianBelief& belief, const ObservationStream& stream, double value);

/// Zeroes the listed components of the mean and their covariance rows/columns.
void reset_components(GaussianBelief& belief, const std::vector<int>& indices);

struct FrameRecord {
  double time = 0.0;
  int stream = 0;
  bool missing = false;
  double pred_mean = 0.0;
  double pred_var = 0.0;
  double innovation = 0.0;
  double loglik_inc = 0.0;
  Eigen::VectorXd filtered_mean;
  Eigen::MatrixXd filtered_cov;
};

struct FilterOutput {
  double loglik = 0.0;
  bool diverged = false;
  std::vector<FrameRecord> records;
};

/// Continuous-discrete EKF over the series. Numerical failures are reported
/// through `diverged` with loglik = -inf; this never throws for them.
FilterOutput run_ekf(const ModelDef& model, const Eigen::VectorXd& params,
                     const ObservationSeries& series, const IntegratorConfig& integrator = {},
                     bool record_beliefs = true);

/// Gaussian log-likelihood of the series around the noise-free ODE solution.
double deterministic_loglik(const ModelDef& model, const Eigen::VectorXd& params,
                            const ObservationSeries& series, const IntegratorConfig& integrator = {});

}  // namespace ssi

#endif  // SSI_EKF_HPP
