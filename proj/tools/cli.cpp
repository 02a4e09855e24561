#include "cli.hpp"

#include "ssi/config.hpp"
#include "ssi/diagnostics.hpp"
#include "ssi/ekf.hpp"
#include "ssi/optimize.hpp"
#include "ssi/parallel.hpp"
#include "ssi/smc.hpp"
#include "ssi/two_city.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace ssi::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Options {
  // model selection
  std::string dir, process, context, link, data;
  std::string outdir = ".";
  int workers = 0;
  std::uint64_t seed = 1;
  bool seed_given = false;
  double rtol = 1e-6, atol = 1e-6;

  std::string theta0, cov0;
  long iterations = 1000;
  double cooling = 0.999;
  long switch_after = 100;
  int particles = 1000;
  bool fixed_proposal = false;
  int lhs_points = 100;
  bool no_prior = false;
  long max_evals = 4000;
  std::string backend = "ekf";
  std::string trace;
  long burn = 0;
  bool export_model = false;
};

struct Loaded {
  ModelDef model;
  ParamList params;
  ObservationSeries series;
  bool have_series = false;
  double dt = 0.0;
  SimulationSettings simulation;
};

class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

IntegratorConfig integrator(const Options& o) {
  IntegratorConfig c;
  c.rtol = o.rtol;
  c.atol = o.atol;
  return c;
}

int workers(const Options& o) { return o.workers > 0 ? o.workers : default_workers(); }

Loaded load(const Options& o, bool need_data) {
  Loaded l;
  const bool files = !o.dir.empty() || !o.process.empty() || !o.context.empty() || !o.link.empty();
  if (files) {
    ProblemFiles pf = o.dir.empty() ? ProblemFiles{} : ProblemFiles::in(o.dir);
    if (!o.process.empty()) pf.process = o.process;
    if (!o.context.empty()) pf.context = o.context;
    if (!o.link.empty()) pf.link = o.link;
    if (pf.process.empty() || pf.context.empty() || pf.link.empty())
      throw ConfigError("--process, --context and --link must all be given (or --dir)");
    Problem p = load_problem(pf);
    l.model = std::move(p.model);
    l.params = std::move(p.params);
    l.simulation = std::move(p.simulation);
    const fs::path data = o.data.empty() ? p.data_path : fs::path(o.data);
    if (need_data) {
      if (data.empty()) throw ConfigError("no data file: pass --data or name one in context.json");
      l.series = read_series_csv(data, l.model);
      l.have_series = true;
    }
    l.dt = p.dt > 0.0 ? p.dt : (l.have_series ? default_dt(l.model, l.series) : 0.0);
    if (l.simulation.dt <= 0.0 && !l.simulation.schedule.empty()) {
      std::vector<double> times;
      for (const auto& f : l.simulation.schedule) times.push_back(f.time);
      l.simulation.dt = p.dt > 0.0 ? p.dt : default_dt(l.model, times);
    }
  } else {
    const TwoCityProblem p = build_two_city_si();
    l.model = p.model;
    l.params = p.params;
    l.dt = p.dt();
    l.simulation.theta = Eigen::Map<const Eigen::Vector3d>(p.config.theta_true.data());
    l.simulation.seed = p.config.data_seed;
    l.simulation.schedule = p.schedule();
    l.simulation.dt = p.dt();
    if (need_data) {
      l.series = o.data.empty() ? two_city_data(p).series : read_series_csv(o.data, l.model);
      l.have_series = true;
    }
  }
  return l;
}

Json natural_map(const ParamList& specs, const Eigen::VectorXd& v) {
  Json j = Json::object();
  for (std::size_t i = 0; i < specs.size(); ++i) j[specs[i].name] = v[static_cast<Eigen::Index>(i)];
  return j;
}

// Natural-scale parameter vector from theta_map.json, a {name: value}
// object, a plain array, or the first row of lhs_ranked.csv / trace.csv.
Eigen::VectorXd read_theta(const fs::path& path, const ParamList& specs) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  const auto d = static_cast<Eigen::Index>(specs.size());
  Eigen::VectorXd v(d);
  if (path.extension() == ".csv") {
    std::string header, row;
    if (!std::getline(in, header) || !std::getline(in, row)) throw ConfigError(path.string() + ": no data row");
    const auto split = [](const std::string& s) {
      std::vector<std::string> f;
      std::stringstream ss(s);
      for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
      return f;
    };
    const auto h = split(header), r = split(row);
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto it = std::find(h.begin(), h.end(), specs[static_cast<std::size_t>(i)].name);
      if (it == h.end() || static_cast<std::size_t>(it - h.begin()) >= r.size())
        throw ConfigError(path.string() + ": missing column " + specs[static_cast<std::size_t>(i)].name);
      v[i] = std::stod(r[static_cast<std::size_t>(it - h.begin())]);
    }
    return v;
  }
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("natural")) j = j.at("natural");
  if (j.is_array()) {
    if (static_cast<Eigen::Index>(j.size()) != d) throw ConfigError(path.string() + ": wrong number of values");
    for (Eigen::Index i = 0; i < d; ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& name = specs[static_cast<std::size_t>(i)].name;
    if (!j.contains(name)) throw ConfigError(path.string() + ": missing parameter " + name);
    v[i] = j.at(name).get<double>();
  }
  return v;
}

Theta start_point(const Options& o, const ParamList& specs) {
  if (o.theta0.empty()) return initial_theta(specs);
  try {
    const Theta theta = to_transformed(specs, read_theta(o.theta0, specs));
    if (log_prior(specs, theta) == -std::numeric_limits<double>::infinity())
      throw ConfigError("--theta0 lies outside the prior bounds");
    return theta;
  } catch (const OutOfDomain& e) {
    throw ConfigError(std::string("--theta0: ") + e.what());
  }
}

Eigen::MatrixXd read_cov(const fs::path& path, Eigen::Index d) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != d)
    throw ConfigError(path.string() + ": expected a " + std::to_string(d) + "x" + std::to_string(d) + " array");
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const Json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
      throw ConfigError(path.string() + ": ragged covariance row");
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  if (!m.allFinite() || !m.isApprox(m.transpose(), 1e-8)) throw ConfigError(path.string() + ": covariance must be finite and symmetric");
  return m;
}

void write_cov(const fs::path& path, const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  std::ofstream(path) << j.dump() << '\n';
}

std::string stop_name(StopReason r) {
  switch (r) {
    case StopReason::tol_f: return "tol_f";
    case StopReason::tol_x: return "tol_x";
    case StopReason::budget: return "budget";
  }
  return "";
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// ---- subcommands --------------------------------------------------------

Json cmd_simul(const Options& o) {
  Loaded l = load(o, false);
  if (l.simulation.schedule.empty()) throw ConfigError("context.json has no simulation.schedule");
  Eigen::VectorXd theta = o.theta0.empty() ? l.simulation.theta : read_theta(o.theta0, l.params);
  const std::uint64_t seed = o.seed_given ? o.seed : l.simulation.seed;
  const auto res = simulate(l.model, theta, l.simulation.schedule, l.simulation.dt, seed);
  fs::create_directories(o.outdir);
  write_series_csv(fs::path(o.outdir) / "data.csv", res.series, l.model);
  write_latent_csv(fs::path(o.outdir) / "latent.csv", res.path, l.model);
  if (o.export_model) write_two_city_files(o.outdir);
  return {{"command", "simul"}, {"seed", seed}, {"frames", res.series.frames.size()},
          {"observed", res.series.n_observed()}, {"theta", natural_map(l.params, theta)}};
}

std::vector<RankedPoint> screen(const Options& o, const Loaded& l) {
  const LhsDesign design = lhs_sample(l.params, o.lhs_points, o.seed);
  return lhs_screen(l.model, l.params, l.series, design, workers(o), integrator(o));
}

Json cmd_lhs(const Options& o) {
  const Loaded l = load(o, true);
  const auto ranked = screen(o, l);
  fs::create_directories(o.outdir);
  std::ofstream out(fs::path(o.outdir) / "lhs_ranked.csv");
  out << "rank,index";
  for (const auto& s : l.params) out << ',' << s.name;
  out << ",loglik\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    out << r + 1 << ',' << ranked[r].index;
    const Eigen::VectorXd nat = to_natural(l.params, ranked[r].theta);
    for (Eigen::Index i = 0; i < nat.size(); ++i) out << ',' << format_double(nat[i]);
    out << ',' << format_double(ranked[r].loglik) << '\n';
  }
  return {{"command", "lhs"}, {"points", ranked.size()}, {"best", natural_map(l.params, to_natural(l.params, ranked.front().theta))},
          {"best_loglik", finite_or_null(ranked.front().loglik)}};
}

Json cmd_fit(const Options& o, bool kalman) {
  const Loaded l = load(o, true);
  Theta init;
  std::string origin;
  if (o.theta0.empty()) {
    const auto ranked = screen(o, l);
    if (ranked.front().loglik == -std::numeric_limits<double>::infinity())
      throw NumericFailure("lhs: every design point diverged");
    init = ranked.front().theta;
    origin = "lhs";
  } else {
    init = start_point(o, l.params);
    origin = o.theta0;
  }
  FitOptions fo;
  fo.include_prior = !o.no_prior;
  fo.integrator = integrator(o);
  fo.simplex.max_evals = o.max_evals;
  const FitResult r = kalman ? ksimplex(l.model, l.params, l.series, init, fo) : simplex(l.model, l.params, l.series, init, fo);

  Json transformed = Json::object();
  for (std::size_t i = 0; i < l.params.size(); ++i) transformed[l.params[i].name] = r.theta[static_cast<Eigen::Index>(i)];
  Json map = {{"natural", natural_map(l.params, to_natural(l.params, r.theta))},
              {"transformed", transformed},
              {"objective", r.objective},
              {"loglik", r.loglik},
              {"objective_kind", kalman ? "ekf" : "ode"},
              {"include_prior", fo.include_prior},
              {"evals", r.evals},
              {"stop", stop_name(r.reason)}};
  fs::create_directories(o.outdir);
  std::ofstream(fs::path(o.outdir) / "theta_map.json") << map.dump(2) << '\n';
  return {{"command", kalman ? "ksimplex" : "simplex"}, {"start", origin}, {"natural", map["natural"]},
          {"objective", r.objective}, {"loglik", r.loglik}, {"evals", r.evals}, {"stop", stop_name(r.reason)}};
}

Json cmd_mcmc(const Options& o, bool particle) {
  const Loaded l = load(o, true);
  const auto d = static_cast<Eigen::Index>(l.params.size());
  const Theta theta0 = start_point(o, l.params);
  const Eigen::MatrixXd sigma0 = o.cov0.empty() ? diagonal_covariance(l.params) : read_cov(o.cov0, d);
  const LikelihoodBackend backend = particle ? pf_backend(l.model, l.params, l.series, o.particles, l.dt, workers(o))
                                             : ekf_backend(l.model, l.params, l.series, integrator(o));
  ChainOptions co;
  co.iterations = o.iterations;
  co.cooling = o.cooling;
  co.switch_after = o.switch_after;
  co.adaptive = !o.fixed_proposal;
  co.seed = o.seed;
  const McmcTrace trace = run_chain(l.params, backend, theta0, sigma0, co);

  const fs::path out(o.outdir);
  fs::create_directories(out);
  write_trace_csv(out / "trace.csv", to_table(trace, l.params));
  for (const auto& s : trace.snapshots) write_cov(out / ("cov_" + std::to_string(s.iteration) + ".json"), s.cov);
  write_cov(out / "cov_final.json", trace.final_cov);
  const double last = trace.rows.empty() ? std::nan("") : trace.rows.back().loglik;
  return {{"command", particle ? "pmcmc" : "kmcmc"},
          {"iterations", trace.rows.size()},
          {"acceptance", trace.rows.empty() ? 0.0 : trace.acceptance_rate()},
          {"switch_iteration", trace.switch_iteration},
          {"final_loglik", finite_or_null(last)},
          {"seed", o.seed}};
}

Json cmd_smc(const Options& o) {
  const Loaded l = load(o, true);
  const Eigen::VectorXd params = to_natural(l.params, start_point(o, l.params));
  const fs::path out(o.outdir);
  fs::create_directories(out);
  if (o.backend == "ekf") {
    const FilterOutput f = run_ekf(l.model, params, l.series, integrator(o), false);
    if (f.diverged) throw NumericFailure("run_ekf diverged");
    std::ofstream csv(out / "ekf_trace.csv");
    csv << "time,stream,pred_mean,pred_var,innovation,loglik_inc\n";
    for (const auto& r : f.records)
      csv << format_double(r.time) << ',' << l.model.streams[static_cast<std::size_t>(r.stream)].name << ','
          << format_double(r.pred_mean) << ',' << format_double(r.pred_var) << ','
          << (r.missing ? "NA" : format_double(r.innovation)) << ',' << format_double(r.loglik_inc) << '\n';
    return {{"command", "smc"}, {"backend", "ekf"}, {"loglik", f.loglik}, {"frames", f.records.size()}};
  }
  const PfOutput f = run_pf(l.model, params, l.series, o.particles, l.dt, o.seed, workers(o));
  std::ofstream csv(out / "pf_diag.csv");
  csv << "time,weight_ess,loglik_inc\n";
  for (std::size_t i = 0; i < f.frame_time.size(); ++i)
    csv << format_double(f.frame_time[i]) << ',' << format_double(f.weight_ess[i]) << ','
        << format_double(f.loglik_inc[i]) << '\n';
  if (f.degenerate || !std::isfinite(f.loglik)) throw NumericFailure("run_pf: all particle weights vanished");
  return {{"command", "smc"}, {"backend", "pf"}, {"loglik", f.loglik}, {"particles", o.particles}, {"seed", o.seed}};
}

Json cmd_diag(const Options& o) {
  const fs::path path = o.trace.empty() ? fs::path(o.outdir) / "trace.csv" : fs::path(o.trace);
  TraceTable t = read_trace_csv(path);
  const auto n = static_cast<long>(t.index.size());
  if (o.burn < 0 || o.burn >= n) throw ConfigError("--burn must be in [0, rows)");
  if (o.burn > 0) {
    const auto keep = n - o.burn;
    t.values = t.values.bottomRows(keep).eval();
    const auto drop = [&](auto& v) { v.erase(v.begin(), v.begin() + o.burn); };
    drop(t.index);
    drop(t.loglik);
    drop(t.logprior);
    drop(t.epsilon);
    drop(t.accepted);
  }
  fs::create_directories(o.outdir);
  emit_plot_data(t, o.outdir);

  const double acc = static_cast<double>(std::count(t.accepted.begin(), t.accepted.end(), 1)) /
                     static_cast<double>(t.accepted.size());
  std::ofstream csv(fs::path(o.outdir) / "diag.csv");
  csv << "parameter,ess,acceptance,q2.5,q50,q97.5\n";
  for (std::size_t j = 0; j < t.names.size(); ++j) {
    const Eigen::VectorXd col = t.values.col(static_cast<Eigen::Index>(j));
    const std::vector<double> v(col.data(), col.data() + col.size());
    csv << t.names[j] << ',' << format_double(v.size() >= 10 ? ess(col) : std::nan("")) << ','
        << format_double(acc) << ',' << format_double(quantile(v, 0.025)) << ','
        << format_double(quantile(v, 0.5)) << ',' << format_double(quantile(v, 0.975)) << '\n';
  }
  std::ofstream hist(fs::path(o.outdir) / "histogram.csv");
  hist << "parameter,bin,bin_left,bin_right,count\n";
  for (std::size_t j = 0; j < t.names.size(); ++j) {
    const Eigen::VectorXd col = t.values.col(static_cast<Eigen::Index>(j));
    const auto h = histogram(std::vector<double>(col.data(), col.data() + col.size()));
    for (std::size_t b = 0; b < h.count.size(); ++b)
      hist << t.names[j] << ',' << b << ',' << format_double(h.left[b]) << ',' << format_double(h.right[b]) << ','
           << h.count[b] << '\n';
  }
  return {{"command", "diag"}, {"rows", t.index.size()}, {"acceptance", acc}};
}

void common_options(CLI::App* app, Options& o) {
  app->add_option("--dir", o.dir, "directory holding process.json, context.json and link.json");
  app->add_option("--process", o.process, "process.json path");
  app->add_option("--context", o.context, "context.json path");
  app->add_option("--link", o.link, "link.json path");
  app->add_option("--data", o.data, "data CSV (overrides the context file)");
  app->add_option("-o,--out", o.outdir, "output directory");
  app->add_option("-P,--workers", o.workers, "worker threads (default: SSI_WORKERS or hardware)")->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "random seed")->each([&o](const std::string&) { o.seed_given = true; });
  app->add_option("--rtol", o.rtol, "integrator relative tolerance")->check(CLI::PositiveNumber);
  app->add_option("--atol", o.atol, "integrator absolute tolerance")->check(CLI::PositiveNumber);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"State-space model inference: EKF, particle filter, adaptive MCMC"};
  app.require_subcommand(1);
  Options o;

  auto* simul = app.add_subcommand("simul", "simulate a data set");
  common_options(simul, o);
  simul->add_option("--theta0", o.theta0, "natural-scale parameters (JSON or CSV)");
  simul->add_flag("--export-model", o.export_model, "also write the bundled model's JSON documents");

  auto* lhs = app.add_subcommand("lhs", "Latin hypercube screening with the EKF");
  common_options(lhs, o);
  lhs->add_option("-m", o.lhs_points, "design size")->check(CLI::Range(2, 1000000));

  auto* simplex_cmd = app.add_subcommand("simplex", "Nelder-Mead on the deterministic (ODE) likelihood");
  auto* ksimplex_cmd = app.add_subcommand("ksimplex", "Nelder-Mead on the EKF likelihood");
  for (auto* c : {simplex_cmd, ksimplex_cmd}) {
    common_options(c, o);
    c->add_option("--theta0", o.theta0, "start point (theta_map.json, lhs_ranked.csv, ...); default: best of an LHS screen");
    c->add_option("-m", o.lhs_points, "LHS design size when --theta0 is absent")->check(CLI::Range(2, 1000000));
    c->add_flag("--no-prior", o.no_prior, "maximize the likelihood only");
    c->add_option("--max-evals", o.max_evals, "objective evaluation budget")->check(CLI::PositiveNumber);
  }

  auto* kmcmc = app.add_subcommand("kmcmc", "adaptive MCMC with the EKF likelihood");
  auto* pmcmc = app.add_subcommand("pmcmc", "adaptive particle MCMC");
  for (auto* c : {kmcmc, pmcmc}) {
    common_options(c, o);
    c->add_option("-M,--iterations", o.iterations, "iterations")->check(CLI::PositiveNumber);
    c->add_option("-a,--cooling", o.cooling, "cooling factor for the scale adaptation")->check(CLI::Range(0.0, 1.0));
    c->add_option("-S,--switch", o.switch_after, "accepted samples before the empirical-covariance phase")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--theta0", o.theta0, "start point (natural scale)");
    c->add_option("--cov0", o.cov0, "initial proposal covariance, transformed scale (d x d JSON)");
    c->add_flag("--no-adapt", o.fixed_proposal, "keep (2.38^2/d) Sigma_0 for the whole run");
  }
  pmcmc->add_option("-J,--particles", o.particles, "particles")->check(CLI::Range(2, 100000000));

  auto* smc = app.add_subcommand("smc", "evaluate the likelihood once");
  common_options(smc, o);
  smc->add_option("--backend", o.backend, "ekf or pf")->check(CLI::IsMember({"ekf", "pf"}));
  smc->add_option("-J,--particles", o.particles, "particles")->check(CLI::Range(2, 100000000));
  smc->add_option("--theta0", o.theta0, "parameters (natural scale); default: the guesses");

  auto* diag = app.add_subcommand("diag", "ESS, quantiles and histograms of a trace");
  diag->add_option("--trace", o.trace, "trace.csv (default: <out>/trace.csv)");
  diag->add_option("-o,--out", o.outdir, "output directory");
  diag->add_option("--burn", o.burn, "rows to discard")->check(CLI::NonNegativeNumber);

  std::vector<std::string> storage{"ssinfer"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return usage;
  }

  try {
    Json summary;
    const CLI::App* sub = app.get_subcommands().front();
    if (sub == simul) summary = cmd_simul(o);
    else if (sub == lhs) summary = cmd_lhs(o);
    else if (sub == simplex_cmd) summary = cmd_fit(o, false);
    else if (sub == ksimplex_cmd) summary = cmd_fit(o, true);
    else if (sub == kmcmc) summary = cmd_mcmc(o, false);
    else if (sub == pmcmc) summary = cmd_mcmc(o, true);
    else if (sub == smc) summary = cmd_smc(o);
    else summary = cmd_diag(o);
    out << summary.dump() << '\n';
    return ok;
  } catch (const FitFailure& e) {
    err << "error: " << e.what() << " at transformed theta = [" << e.theta().transpose() << "]\n";
    return numeric;
  } catch (const NumericFailure& e) {
    err << "error: " << e.what() << '\n';
    return numeric;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return numeric;
  }
}

int dispatch(int argc, char** argv) {
  return dispatch(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

// ---- trace files ----------------------------------------------------------

TraceTable to_table(const McmcTrace& trace, const ParamList& specs) {
  TraceTable t;
  t.names = trace.names;
  t.values.resize(static_cast<Eigen::Index>(trace.rows.size()), static_cast<Eigen::Index>(specs.size()));
  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    const TraceRow& row = trace.rows[r];
    t.index.push_back(row.index);
    t.values.row(static_cast<Eigen::Index>(r)) = to_natural(specs, row.theta).transpose();
    t.loglik.push_back(row.loglik);
    t.logprior.push_back(row.logprior);
    t.accepted.push_back(row.accepted ? 1 : 0);
    t.epsilon.push_back(row.epsilon);
  }
  return t;
}

void write_trace_csv(const fs::path& path, const TraceTable& t) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "index";
  for (const auto& n : t.names) out << ',' << n;
  out << ",loglik,logprior,accepted,epsilon\n";
  for (std::size_t r = 0; r < t.index.size(); ++r) {
    out << t.index[r];
    for (Eigen::Index j = 0; j < t.values.cols(); ++j) out << ',' << format_double(t.values(static_cast<Eigen::Index>(r), j));
    out << ',' << format_double(t.loglik[r]) << ',' << format_double(t.logprior[r]) << ',' << t.accepted[r] << ','
        << format_double(t.epsilon[r]) << '\n';
  }
}

TraceTable read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  const auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    return f;
  };
  const auto num = [&path](const std::string& s) {
    if (s == "NA") return std::nan("");
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ": bad number '" + s + "'");
    }
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty trace");
  const auto header = split(line);
  if (header.size() < 6 || header.front() != "index" || header[header.size() - 4] != "loglik")
    throw ConfigError(path.string() + ": not a trace file");
  TraceTable t;
  t.names.assign(header.begin() + 1, header.end() - 4);
  const auto d = t.names.size();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw ConfigError(path.string() + ": ragged row");
    t.index.push_back(std::stol(f[0]));
    std::vector<double> v(d);
    for (std::size_t j = 0; j < d; ++j) v[j] = num(f[1 + j]);
    rows.push_back(std::move(v));
    t.loglik.push_back(num(f[1 + d]));
    t.logprior.push_back(num(f[2 + d]));
    t.accepted.push_back(std::stoi(f[3 + d]));
    t.epsilon.push_back(num(f[4 + d]));
  }
  if (rows.empty()) throw ConfigError(path.string() + ": trace has no rows");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < d; ++j) t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
  return t;
}

void emit_plot_data(const TraceTable& t, const fs::path& outdir) {
  fs::create_directories(outdir);
  Json summary;
  summary["rows"] = t.index.size();
  summary["acceptance"] = static_cast<double>(std::count(t.accepted.begin(), t.accepted.end(), 1)) /
                          static_cast<double>(std::max<std::size_t>(1, t.accepted.size()));
  Json params = Json::object();
  for (std::size_t j = 0; j < t.names.size(); ++j) {
    const auto& name = t.names[j];
    const Eigen::VectorXd col = t.values.col(static_cast<Eigen::Index>(j));
    const std::vector<double> v(col.data(), col.data() + col.size());

    std::ofstream tp(outdir / ("traceplot_" + name + ".csv"));
    tp << "iteration,value\n";
    for (std::size_t r = 0; r < v.size(); ++r) tp << t.index[r] << ',' << format_double(v[r]) << '\n';

    const auto h = histogram(v, 50);
    std::ofstream post(outdir / ("posterior_" + name + ".csv"));
    post << "bin_left,bin_right,count\n";
    for (std::size_t b = 0; b < h.count.size(); ++b)
      post << format_double(h.left[b]) << ',' << format_double(h.right[b]) << ',' << h.count[b] << '\n';

    params[name] = {{"ess", v.size() >= 10 ? Json(ess(col)) : Json(nullptr)},
                    {"mean", col.mean()},
                    {"q2.5", quantile(v, 0.025)},
                    {"q50", quantile(v, 0.5)},
                    {"q97.5", quantile(v, 0.975)}};
  }
  summary["parameters"] = params;
  std::ofstream(outdir / "summary.json") << summary.dump(2) << '\n';
}

}  // namespace ssi::cli
