#include "ssi/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace ssi {

Eigen::VectorXd ess_per_component(const Eigen::MatrixXd& samples) {
  Eigen::VectorXd out(samples.cols());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) out[j] = ess(samples.col(j));
  return out;
}

double relative_efficiency(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& reference) {
  if (samples.rows() != reference.rows() || samples.cols() != reference.cols())
    throw std::invalid_argument("relative_efficiency: traces differ in shape");
  return (ess_per_component(samples).array() / ess_per_component(reference).array()).minCoeff();
}

double relative_efficiency(const McmcTrace& trace, const McmcTrace& reference) {
  return relative_efficiency(trace.samples(), reference.samples());
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Histogram histogram(const std::vector<double>& values, int bins) {
  if (values.empty() || bins < 1) throw std::invalid_argument("histogram: empty sample or no bins");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double width = hi > lo ? (hi - lo) / bins : 0.0;
  Histogram h;
  for (int b = 0; b < bins; ++b) {
    h.left.push_back(lo + width * b);
    h.right.push_back(b + 1 == bins ? hi : lo + width * (b + 1));
  }
  h.count.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    int b = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++h.count[static_cast<std::size_t>(b)];
  }
  return h;
}

}  // namespace ssi
