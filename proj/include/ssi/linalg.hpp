#ifndef SSI_LINALG_HPP
#define SSI_LINALG_HPP

#include <Eigen/Dense>

#include <cmath>

namespace ssi {

/// Lower-triangular L with L*L^T = A for symmetric positive semidefinite A,
/// written into `l` (resized as needed).
///
/// Pivots below `tol * max(diag)` are treated as zero and their column is
/// left empty, so singular matrices such as a diffusion acting on a subset
/// of the state are handled without regularization.
template <typename Derived, typename Out>
void psd_cholesky_into(const Eigen::MatrixBase<Derived>& a, Eigen::PlainObjectBase<Out>& l,
                       typename Derived::Scalar tol = 1e-14) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  const Eigen::Index n = a.rows();
  l.setZero(n, n);
  const Scalar scale = n > 0 ? a.diagonal().cwiseAbs().maxCoeff() : Scalar(0);
  const Scalar floor = tol * scale;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > floor)) continue;
    const Scalar ljj = sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
  }
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> psd_cholesky(
    const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar tol = 1e-14) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> l;
  psd_cholesky_into(a, l, tol);
  return l;
}

/// Gaussian log density of scalar residual r with variance v.
template <typename Scalar>
Scalar log_normal_density(Scalar r, Scalar v) {
  using std::log;
  constexpr double kLog2Pi = 1.8378770664093454836;
  return Scalar(-0.5) * (Scalar(kLog2Pi) + log(v) + r * r / v);
}

}  // namespace ssi

#endif  // SSI_LINALG_HPP
