#ifndef SSI_INTEGRATE_HPP
#define SSI_INTEGRATE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ssi {

struct IntegratorConfig {
  double rtol = 1e-6;
  double atol = 1e-6;
  double h_init = 0.0;  ///< <= 0 picks span / 100
  double h_min = 1e-12;
  long max_steps = 100000;
};

enum class IntegrateErrc { step_underflow, budget, divergence };

class IntegrateError : public std::runtime_error {
 public:
  IntegrateError(IntegrateErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  IntegrateErrc code() const { return code_; }

 private:
  IntegrateErrc code_;
};

template <typename Scalar>
struct IntegrateResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  long steps = 0;      ///< accepted steps
  long rejected = 0;
  Scalar h_next = 0;   ///< step size the controller would try next
};

namespace detail {

// Dormand–Prince 5(4) tableau.
struct DoPri {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b* (fifth-order minus embedded fourth-order weights)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates dx/dt = f(t, x) from t0 to t1 with an embedded Dormand–Prince
/// 5(4) pair. `f` is called as `f(t, x, dxdt)` and writes into `dxdt`.
///
/// A step is accepted when the scaled RMS error (atol + rtol*|x| per
/// component) is <= 1. The step factor is 0.9*err^(-1/5) clamped to
/// [0.2, 5]; the last step is shortened to land exactly on t1.
template <typename Scalar, typename VectorField>
IntegrateResult<Scalar> integrate(VectorField&& f,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0,
                                  Scalar t0, Scalar t1, const IntegratorConfig& config) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using T = detail::DoPri;
  using std::abs;
  using std::max;
  using std::min;
  using std::pow;
  using std::sqrt;

  if (t1 < t0) throw std::invalid_argument("integrate: t1 < t0");
  if (!x0.allFinite())
    throw IntegrateError(IntegrateErrc::divergence, "integrate: non-finite initial state");

  IntegrateResult<Scalar> out;
  out.x = x0;
  const Scalar span = t1 - t0;
  if (span == Scalar(0)) {
    out.h_next = Scalar(config.h_init);
    return out;
  }

  const Eigen::Index n = x0.size();
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), x5(n), err(n);
  Vec& x = out.x;

  Scalar h = config.h_init > 0 ? Scalar(config.h_init) : span / Scalar(100);
  h = min(h, span);
  Scalar t = t0;
  f(t, x, k1);
  if (!k1.allFinite())
    throw IntegrateError(IntegrateErrc::divergence, "integrate: non-finite derivative");

  while (t < t1) {
    if (out.steps + out.rejected >= config.max_steps)
      throw IntegrateError(IntegrateErrc::budget, "integrate: step budget exhausted");

    bool last = false;
    if (t + h >= t1 || (t1 - (t + h)) < Scalar(1e-12) * span) {
      h = t1 - t;
      last = true;
    }
    if (h < Scalar(config.h_min) && !last)
      throw IntegrateError(IntegrateErrc::step_underflow, "integrate: step size underflow");

    tmp = x + h * (T::a21 * k1);
    f(t + T::c2 * h, tmp, k2);
    tmp = x + h * (T::a31 * k1 + T::a32 * k2);
    f(t + T::c3 * h, tmp, k3);
    tmp = x + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
    f(t + T::c4 * h, tmp, k4);
    tmp = x + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
    f(t + T::c5 * h, tmp, k5);
    tmp = x + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
    f(t + h, tmp, k6);
    x5 = x + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
    f(t + h, x5, k7);

    err = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    Scalar norm = 0;
    bool finite = x5.allFinite() && k7.allFinite();
    if (finite) {
      const auto scale =
          (Scalar(config.atol) + Scalar(config.rtol) * x.cwiseAbs().cwiseMax(x5.cwiseAbs()).array());
      norm = sqrt((err.array() / scale).square().sum() / Scalar(n));
      finite = std::isfinite(static_cast<double>(norm));
    }

    if (finite && norm <= Scalar(1)) {
      t = last ? t1 : t + h;
      x = x5;
      k1 = k7;  // first-same-as-last
      ++out.steps;
      const Scalar grow = norm == Scalar(0) ? Scalar(5)
                                            : min(Scalar(5), max(Scalar(0.2), Scalar(0.9) * pow(norm, Scalar(-0.2))));
      if (!last) h *= grow;
      else out.h_next = h * grow;
    } else {
      ++out.rejected;
      const Scalar shrink =
          finite ? max(Scalar(0.2), Scalar(0.9) * pow(norm, Scalar(-0.2))) : Scalar(0.2);
      h *= shrink;
      if (h < Scalar(config.h_min)) {
        if (!finite)
          throw IntegrateError(IntegrateErrc::divergence, "integrate: non-finite state");
        throw IntegrateError(IntegrateErrc::step_underflow, "integrate: step size underflow");
      }
    }
  }
  if (!x.allFinite()) throw IntegrateError(IntegrateErrc::divergence, "integrate: non-finite state");
  return out;
}

}  // namespace ssi

#endif  // SSI_INTEGRATE_HPP
