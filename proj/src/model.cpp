#include "ssi/model.hpp"

#include "ssi/linalg.hpp"

#include <algorithm>
#include <random>

namespace ssi {

Eigen::RowVectorXd ObservationStream::row(int k) const {
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(k);
  for (std::size_t i = 0; i < indices.size(); ++i) h[indices[i]] += weights[i];
  return h;
}

std::size_t ObservationSeries::n_observed() const {
  return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(),
                                                [](const Frame& f) { return !is_missing(f.value); }));
}

std::size_t ObservationSeries::group_end(std::size_t begin) const {
  std::size_t end = begin;
  while (end < frames.size() && frames[end].time == frames[begin].time) ++end;
  return end;
}

int ModelDef::stream_index(const std::string& name) const {
  for (std::size_t i = 0; i < streams.size(); ++i)
    if (streams[i].name == name) return static_cast<int>(i);
  return -1;
}

int ModelDef::state_index(const std::string& name) const {
  for (std::size_t i = 0; i < state_names.size(); ++i)
    if (state_names[i] == name) return static_cast<int>(i);
  return -1;
}

void ModelDef::eval_diffusion(const StateRef& x, const Eigen::VectorXd& params, double t,
                              Eigen::Ref<Eigen::MatrixXd> out) const {
  if (diffusion) diffusion(x, params, t, out);
  else out.setZero();
}

void ModelDef::eval_jacobian(const StateRef& x, const Eigen::VectorXd& params, double t,
                             Eigen::Ref<Eigen::MatrixXd> out) const {
  if (jacobian) {
    jacobian(x, params, t, out);
    return;
  }
  Eigen::VectorXd xp = x, fp(k), fm(k);
  for (int j = 0; j < k; ++j) {
    const double h = fd_step * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    drift(xp, params, t, fp);
    xp[j] = x[j] - h;
    drift(xp, params, t, fm);
    xp[j] = x[j];
    out.col(j) = (fp - fm) / (2.0 * h);
  }
}

const std::vector<int>& ModelDef::reset_indices(int stream) const {
  static const std::vector<int> none;
  const auto& s = streams.at(static_cast<std::size_t>(stream));
  return s.kind == StreamKind::incidence ? s.indices : none;
}

void ModelDef::validate() const {
  if (k < 1) throw std::invalid_argument("model: state dimension must be >= 1");
  if (!drift) throw std::invalid_argument("model: missing drift");
  if (!initial_state) throw std::invalid_argument("model: missing initial state");
  if (!state_names.empty() && state_names.size() != static_cast<std::size_t>(k))
    throw std::invalid_argument("model: state_names size differs from k");
  for (const auto& s : streams) {
    if (s.indices.size() != s.weights.size() || s.indices.empty())
      throw std::invalid_argument("model: stream " + s.name + " has no observed components");
    for (int i : s.indices)
      if (i < 0 || i >= k) throw std::invalid_argument("model: stream " + s.name + " index out of range");
    if (s.sigma_min < 0.0 || s.tau < 0.0)
      throw std::invalid_argument("model: stream " + s.name + " has negative noise settings");
  }
}

void validate(const ObservationSeries& series, const ModelDef& model) {
  double last = model.t0;
  for (const auto& f : series.frames) {
    if (!(f.time >= last)) throw std::invalid_argument("series: times must be non-decreasing and >= t0");
    if (f.stream < 0 || f.stream >= static_cast<int>(model.streams.size()))
      throw std::invalid_argument("series: unknown stream");
    last = f.time;
  }
}

EulerMaruyama::EulerMaruyama(const ModelDef& model)
    : model_(&model), f_(model.k), z_(model.k), cur_(model.k), q_(model.k, model.k), l_(model.k, model.k) {}

bool EulerMaruyama::advance(Eigen::Ref<Eigen::VectorXd> x, const Eigen::VectorXd& params, double t,
                            double t_end, double dt,
                            CounterRng& rng,
                            const std::function<void(double, const Eigen::VectorXd&)>& on_step) {
  const ModelDef& m = *model_;
  const bool noisy = m.stochastic();
  std::normal_distribution<double> normal;
  while (t < t_end) {
    double h = t_end - t;
    if (h > dt * (1.0 + 1e-9)) h = dt;
    m.drift(x, params, t, f_);
    cur_.noalias() = x + h * f_;
    if (noisy) {
      m.diffusion(x, params, t, q_);
      q_ *= h;
      psd_cholesky_into(q_, l_);
      for (int i = 0; i < m.k; ++i) z_[i] = normal(rng);
      cur_.noalias() += l_.triangularView<Eigen::Lower>() * z_;
    }
    x = cur_;
    t = (t_end - (t + h) <= 1e-12 * dt) ? t_end : t + h;
    if (!x.allFinite()) return false;
    if (on_step) on_step(t, cur_);
  }
  return true;
}

std::vector<ScheduledFrame> regular_schedule(const ModelDef& model, double t_first, double step,
                                             int count) {
  std::vector<ScheduledFrame> out;
  out.reserve(static_cast<std::size_t>(count) * model.streams.size());
  for (int i = 0; i < count; ++i)
    for (std::size_t s = 0; s < model.streams.size(); ++s)
      out.push_back({t_first + step * i, static_cast<int>(s), false});
  return out;
}

double default_dt(const ModelDef& model, const std::vector<double>& times) {
  double gap = std::numeric_limits<double>::infinity();
  double last = model.t0;
  for (double t : times) {
    if (t > last) gap = std::min(gap, t - last);
    last = std::max(last, t);
  }
  return std::isfinite(gap) ? gap / 10.0 : 0.1;
}

double default_dt(const ModelDef& model, const ObservationSeries& series) {
  std::vector<double> times;
  times.reserve(series.frames.size());
  for (const auto& f : series.frames) times.push_back(f.time);
  return default_dt(model, times);
}

SimulationResult simulate(const ModelDef& model, const Eigen::VectorXd& params,
                          const std::vector<ScheduledFrame>& schedule, double dt,
                          std::uint64_t seed) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  std::vector<ScheduledFrame> frames = schedule;
  std::stable_sort(frames.begin(), frames.end(),
                   [](const ScheduledFrame& a, const ScheduledFrame& b) { return a.time < b.time; });

  SimulationResult out;
  Eigen::VectorXd x = model.initial_state(params);
  if (x.size() != model.k) throw std::invalid_argument("simulate: initial state has wrong size");
  double t = model.t0;
  out.path.times.push_back(t);
  out.path.states.push_back(x);

  CounterRng latent_rng(stream_key(seed, 1));
  CounterRng obs_rng(stream_key(seed, 2));
  std::normal_distribution<double> normal;
  EulerMaruyama em(model);
  const auto record = [&out](double tt, const Eigen::VectorXd& xx) {
    out.path.times.push_back(tt);
    out.path.states.push_back(xx);
  };

  std::size_t i = 0;
  while (i < frames.size()) {
    const double t_obs = frames[i].time;
    if (t_obs < t) throw std::invalid_argument("simulate: schedule starts before t0");
    if (!em.advance(x, params, t, t_obs, dt, latent_rng, record))
      throw Divergence("simulate: latent state became non-finite");
    t = t_obs;
    std::size_t end = i;
    while (end < frames.size() && frames[end].time == t_obs) ++end;
    for (std::size_t j = i; j < end; ++j) {
      const auto& s = model.streams.at(static_cast<std::size_t>(frames[j].stream));
      const double mean = s.expected(x);
      const double z = normal(obs_rng);
      double value = mean + std::sqrt(s.variance(mean)) * z;
      if (frames[j].missing) value = kMissing;
      out.series.frames.push_back({t_obs, frames[j].stream, value});
    }
    for (std::size_t j = i; j < end; ++j)
      for (int idx : model.reset_indices(frames[j].stream)) x[idx] = 0.0;
    if (out.path.times.back() == t_obs) out.path.states.back() = x;
    i = end;
  }
  return out;
}

ModelDef deterministic_collapse(const ModelDef& model) {
  ModelDef out = model;
  out.diffusion = nullptr;
  return out;
}

}  // namespace ssi
