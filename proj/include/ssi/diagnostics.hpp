#ifndef SSI_DIAGNOSTICS_HPP
#define SSI_DIAGNOSTICS_HPP

#include "ssi/mcmc.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <vector>

namespace ssi {

/// Biased (N-denominator) autocorrelation of lags 0..N-1, computed by FFT.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> autocorrelation(
    const Eigen::MatrixBase<Derived>& series) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = series.size();
  Vec rho = Vec::Zero(n);
  if (n == 0) return rho;
  const Scalar mean = series.mean();
  Eigen::Index size = 1;
  while (size < 2 * n) size <<= 1;
  std::vector<Scalar> padded(static_cast<std::size_t>(size), Scalar(0));
  for (Eigen::Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = series[i] - mean;

  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> spectrum;
  fft.fwd(spectrum, padded);
  for (auto& c : spectrum) c = std::complex<Scalar>(std::norm(c), Scalar(0));
  std::vector<Scalar> acov;
  fft.inv(acov, spectrum);
  const Scalar c0 = acov[0];
  if (!(c0 > Scalar(0))) return rho;
  for (Eigen::Index t = 0; t < n; ++t) rho[t] = acov[static_cast<std::size_t>(t)] / c0;
  return rho;
}

/// Effective sample size N / (1 + 2 sum rho_t), the sum truncated at the
/// first lag t with rho_t + rho_{t+1} < 0. Clamped to [1, N]; a constant
/// series gives 1.
template <typename Derived>
double ess(const Eigen::MatrixBase<Derived>& series) {
  const Eigen::Index n = series.size();
  if (n < 10) throw std::invalid_argument("ess: need at least 10 samples");
  if (series.maxCoeff() == series.minCoeff()) return 1.0;
  const auto rho = autocorrelation(series);
  double sum = 0.0;
  for (Eigen::Index t = 1; t + 1 < n; ++t) {
    if (static_cast<double>(rho[t] + rho[t + 1]) < 0.0) break;
    sum += static_cast<double>(rho[t]);
  }
  const double value = static_cast<double>(n) / (1.0 + 2.0 * sum);
  return std::clamp(value, 1.0, static_cast<double>(n));
}

/// Per-component ESS of a samples matrix (rows = iterations).
Eigen::VectorXd ess_per_component(const Eigen::MatrixXd& samples);

/// min over components of ESS(trace) / ESS(reference).
double relative_efficiency(const McmcTrace& trace, const McmcTrace& reference);
double relative_efficiency(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& reference);

/// Linear-interpolated quantile (R type 7) of an unsorted sample.
double quantile(std::vector<double> values, double p);

struct Histogram {
  std::vector<double> left, right;
  std::vector<long> count;
};

/// `bins` equal-width bins over [min, max] of the sample; the last bin is
/// closed. A constant sample puts everything in the first bin.
Histogram histogram(const std::vector<double>& values, int bins = 50);

}  // namespace ssi

#endif  // SSI_DIAGNOSTICS_HPP
