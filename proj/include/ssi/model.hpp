#ifndef SSI_MODEL_HPP
#define SSI_MODEL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssi/rng.hpp"

namespace ssi {

using StateRef = Eigen::Ref<const Eigen::VectorXd>;

/// Writes f(x, params, t) into the last argument.
using DriftFn = std::function<void(const StateRef&, const Eigen::VectorXd&, double,
                                   Eigen::Ref<Eigen::VectorXd>)>;
/// Writes a k x k matrix (process-noise intensity Q, or the drift Jacobian).
using MatrixFn = std::function<void(const StateRef&, const Eigen::VectorXd&, double,
                                    Eigen::Ref<Eigen::MatrixXd>)>;
using InitialStateFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

class Divergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StreamKind { prevalence, incidence };

/// One measured quantity: a linear combination of state components observed
/// with Gaussian noise of variance (tau * expected)^2 + sigma_min^2.
///
/// For incidence streams the referenced components are accumulators; they
/// are reset to zero after each of the stream's observation times.
struct ObservationStream {
  std::string name;
  StreamKind kind = StreamKind::prevalence;
  std::vector<int> indices;
  std::vector<double> weights;
  double tau = 0.0;
  double sigma_min = 1.0;

  double expected(const StateRef& x) const {
    double e = 0.0;
    for (std::size_t i = 0; i < indices.size(); ++i) e += weights[i] * x[indices[i]];
    return e;
  }
  double variance(double expected) const {
    const double rel = tau * expected;
    return rel * rel + sigma_min * sigma_min;
  }
  /// Row vector H with expected(x) = H x.
  Eigen::RowVectorXd row(int k) const;
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

struct Frame {
  double time = 0.0;
  int stream = 0;
  double value = kMissing;
};

/// Frames sorted by time; NaN values mark MISSING frames.
struct ObservationSeries {
  std::vector<Frame> frames;

  std::size_t n_observed() const;
  /// Indices [begin, end) of frames sharing frames[begin].time.
  std::size_t group_end(std::size_t begin) const;
};

/// Latent trajectory recorded at simulation resolution.
struct LatentPath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

/// A partially observed diffusion dx = f(x) dt + chol(Q(x)) dW.
///
/// All callbacks must be reentrant: filters and LHS screening evaluate
/// them concurrently on distinct states.
struct ModelDef {
  int k = 0;
  std::vector<std::string> state_names;
  double t0 = 0.0;
  DriftFn drift;
  MatrixFn diffusion;  ///< empty means Q = 0
  MatrixFn jacobian;   ///< empty means central finite differences
  double fd_step = 1e-6;
  InitialStateFn initial_state;
  std::vector<ObservationStream> streams;

  bool stochastic() const { return static_cast<bool>(diffusion); }
  int stream_index(const std::string& name) const;
  int state_index(const std::string& name) const;

  void eval_drift(const StateRef& x, const Eigen::VectorXd& params, double t,
                  Eigen::Ref<Eigen::VectorXd> out) const {
    drift(x, params, t, out);
  }
  void eval_diffusion(const StateRef& x, const Eigen::VectorXd& params, double t,
                      Eigen::Ref<Eigen::MatrixXd> out) const;
  /// Drift Jacobian, analytic when provided, else central differences with
  /// step fd_step * (1 + |x_j|).
  void eval_jacobian(const StateRef& x, const Eigen::VectorXd& params, double t,
                     Eigen::Ref<Eigen::MatrixXd> out) const;

  /// State indices zeroed after an observation of `stream` (empty for prevalence).
  const std::vector<int>& reset_indices(int stream) const;

  /// Throws std::invalid_argument if the definition is inconsistent.
  void validate() const;
};

/// Scratch space for Euler–Maruyama propagation of single trajectories
/// x <- x + f(x) h + chol(Q(x) h) z. One instance per worker.
class EulerMaruyama {
 public:
  explicit EulerMaruyama(const ModelDef& model);

  /// Advances `x` from t to t_end with steps of at most dt; the final step is
  /// shortened to land on t_end. Returns false (leaving x non-finite) if the
  /// state diverges. `on_step` is called after every step with (t, x).
  bool advance(Eigen::Ref<Eigen::VectorXd> x, const Eigen::VectorXd& params, double t,
               double t_end, double dt, CounterRng& rng,
               const std::function<void(double, const Eigen::VectorXd&)>& on_step = {});

 private:
  const ModelDef* model_;
  Eigen::VectorXd f_, z_, cur_;
  Eigen::MatrixXd q_, l_;
};

/// Checks that frames are time-ordered, start at or after t0, and name known streams.
void validate(const ObservationSeries& series, const ModelDef& model);

/// Observation slot for the simulator; `missing` is the caller's mask.
struct ScheduledFrame {
  double time = 0.0;
  int stream = 0;
  bool missing = false;
};

/// Every stream observed at t_first, t_first + step, ... (count times).
std::vector<ScheduledFrame> regular_schedule(const ModelDef& model, double t_first, double step,
                                             int count);

/// Euler–Maruyama step defaulting to 1/10 of the smallest gap between
/// distinct observation times (including the gap from t0).
double default_dt(const ModelDef& model, const std::vector<double>& times);
double default_dt(const ModelDef& model, const ObservationSeries& series);

struct SimulationResult {
  ObservationSeries series;
  LatentPath path;
};

/// Simulates the latent diffusion by Euler–Maruyama and draws observations
/// from each stream's noise model. Deterministic in `seed`.
SimulationResult simulate(const ModelDef& model, const Eigen::VectorXd& params,
                          const std::vector<ScheduledFrame>& schedule, double dt,
                          std::uint64_t seed);

/// Copy of `model` with the process noise removed.
ModelDef deterministic_collapse(const ModelDef& model);

}  // namespace ssi

#endif  // SSI_MODEL_HPP
