#include "ssi/config.hpp"

#include "ssi/expression.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

namespace ssi {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

// A rate or initial value: JSON numbers are accepted as literal expressions.
std::string expression_text(const Json& j) {
  if (j.is_number()) return format_double(j.get<double>());
  if (j.is_string()) return j.get<std::string>();
  throw ConfigError("expected an expression string or number, got " + j.dump());
}

struct Reaction {
  int from = -1;
  int to = -1;
  std::vector<int> accumulate;
  Expression rate;
};

struct Diffusion {
  int state = 0;
  Expression volatility;
};

}  // namespace

ProblemFiles ProblemFiles::in(const fs::path& dir) {
  return {dir / "process.json", dir / "context.json", dir / "link.json"};
}

Problem load_problem(const ProblemFiles& files) {
  const Json process = read_json(files.process);
  const Json context = read_json(files.context);
  const Json link = read_json(files.link);

  Problem problem;
  try {
    // parameters
    std::map<std::string, int> estimated;
    for (const auto& p : context.at("estimated")) {
      ParamSpec spec;
      spec.name = p.at("name").get<std::string>();
      spec.transform = parse_transform(get_or<std::string>(p, "transform", "identity"));
      spec.guess = p.at("guess").get<double>();
      spec.sd_transf = p.at("sd_transf").get<double>();
      spec.min = p.at("min").get<double>();
      spec.max = p.at("max").get<double>();
      validate(spec);
      estimated[spec.name] = static_cast<int>(problem.params.size());
      problem.params.push_back(spec);
    }
    std::map<std::string, double> fixed;
    if (context.contains("fixed"))
      for (const auto& [name, value] : context.at("fixed").items()) fixed[name] = value.get<double>();

    // state layout
    const auto compartments = process.at("compartments").get<std::vector<std::string>>();
    const auto accumulators = get_or<std::vector<std::string>>(process, "accumulators", {});
    std::vector<std::pair<std::string, std::string>> diffusing;  // (parameter, volatility)
    if (process.contains("diffusions"))
      for (const auto& d : process.at("diffusions"))
        diffusing.emplace_back(d.at("parameter").get<std::string>(), expression_text(d.at("volatility")));

    std::vector<std::string> names = compartments;
    for (const auto& [param, vol] : diffusing) names.push_back("log" + param);
    names.insert(names.end(), accumulators.begin(), accumulators.end());
    if (process.contains("order")) {
      auto order = process.at("order").get<std::vector<std::string>>();
      auto a = order, b = names;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a != b) throw ConfigError("process.order must list every compartment, log-parameter and accumulator once");
      names = std::move(order);
    }
    const auto index_of = [&names](const std::string& n) {
      const auto it = std::find(names.begin(), names.end(), n);
      return it == names.end() ? -1 : static_cast<int>(it - names.begin());
    };

    std::map<std::string, int> diffusing_state;
    for (const auto& [param, vol] : diffusing) {
      if (!estimated.count(param) && !fixed.count(param))
        throw ConfigError("diffusing parameter " + param + " is neither estimated nor fixed");
      diffusing_state[param] = index_of("log" + param);
    }

    const SymbolResolver constants = [&](const std::string& n) -> std::optional<Symbol> {
      if (auto it = estimated.find(n); it != estimated.end()) return Symbol{Symbol::Kind::param, it->second, 0.0};
      if (auto it = fixed.find(n); it != fixed.end()) return Symbol{Symbol::Kind::constant, 0, it->second};
      return std::nullopt;
    };
    const SymbolResolver dynamic = [&](const std::string& n) -> std::optional<Symbol> {
      if (auto it = diffusing_state.find(n); it != diffusing_state.end())
        return Symbol{Symbol::Kind::exp_state, it->second, 0.0};
      if (const int i = index_of(n); i >= 0) return Symbol{Symbol::Kind::state, i, 0.0};
      return constants(n);
    };

    auto reactions = std::make_shared<std::vector<Reaction>>();
    for (const auto& r : process.at("reactions")) {
      Reaction rx;
      const auto resolve_state = [&](const char* key) {
        if (!r.contains(key) || r.at(key).is_null()) return -1;
        const int i = index_of(r.at(key).get<std::string>());
        if (i < 0) throw ConfigError(std::string("reaction ") + key + " names an unknown compartment");
        return i;
      };
      rx.from = resolve_state("from");
      rx.to = resolve_state("to");
      for (const auto& acc : get_or<std::vector<std::string>>(r, "accumulate", {})) {
        const int i = index_of(acc);
        if (i < 0 || std::find(accumulators.begin(), accumulators.end(), acc) == accumulators.end())
          throw ConfigError("reaction accumulates into unknown accumulator " + acc);
        rx.accumulate.push_back(i);
      }
      rx.rate = Expression::compile(expression_text(r.at("rate")), dynamic);
      reactions->push_back(std::move(rx));
    }

    auto diffusions = std::make_shared<std::vector<Diffusion>>();
    for (const auto& [param, vol] : diffusing)
      diffusions->push_back({diffusing_state.at(param), Expression::compile(vol, constants)});

    // initial state
    struct Initial {
      int state;
      Expression value;
    };
    auto initial = std::make_shared<std::vector<Initial>>();
    const Json& ic = context.at("initial_conditions");
    for (const auto& c : compartments) {
      if (!ic.contains(c)) throw ConfigError("missing initial condition for " + c);
      initial->push_back({index_of(c), Expression::compile(expression_text(ic.at(c)), constants)});
    }
    for (const auto& [param, vol] : diffusing)
      initial->push_back({diffusing_state.at(param), Expression::compile("log(" + param + ")", constants)});

    ModelDef& m = problem.model;
    m.k = static_cast<int>(names.size());
    m.state_names = names;
    m.t0 = get_or<double>(context, "t0", 0.0);
    m.drift = [reactions](const StateRef& x, const Eigen::VectorXd& theta, double, Eigen::Ref<Eigen::VectorXd> dx) {
      dx.setZero();
      for (const auto& r : *reactions) {
        const double flux = r.rate.eval(x, theta);
        if (r.from >= 0) dx[r.from] -= flux;
        if (r.to >= 0) dx[r.to] += flux;
        for (int a : r.accumulate) dx[a] += flux;
      }
    };
    if (!diffusions->empty()) {
      m.diffusion = [diffusions](const StateRef& x, const Eigen::VectorXd& theta, double,
                                 Eigen::Ref<Eigen::MatrixXd> q) {
        q.setZero();
        for (const auto& d : *diffusions) {
          const double vol = d.volatility.eval(x, theta);
          q(d.state, d.state) += vol * vol;
        }
      };
    }
    const int k = m.k;
    m.initial_state = [initial, k](const Eigen::VectorXd& theta) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
      const Eigen::VectorXd none = Eigen::VectorXd::Zero(k);
      for (const auto& i : *initial) x[i.state] = i.value.eval(none, theta);
      return x;
    };

    // observation streams
    for (const auto& s : link.at("streams")) {
      ObservationStream stream;
      stream.name = s.at("name").get<std::string>();
      const auto kind = get_or<std::string>(s, "kind", "prevalence");
      if (kind == "prevalence") stream.kind = StreamKind::prevalence;
      else if (kind == "incidence") stream.kind = StreamKind::incidence;
      else throw ConfigError("stream " + stream.name + ": unknown kind " + kind);
      for (const auto& n : s.at("observe").get<std::vector<std::string>>()) {
        const int i = index_of(n);
        if (i < 0) throw ConfigError("stream " + stream.name + " observes unknown state " + n);
        if (stream.kind == StreamKind::incidence &&
            std::find(accumulators.begin(), accumulators.end(), n) == accumulators.end())
          throw ConfigError("incidence stream " + stream.name + " must observe accumulators");
        stream.indices.push_back(i);
      }
      stream.weights = get_or<std::vector<double>>(s, "weights", std::vector<double>(stream.indices.size(), 1.0));
      stream.tau = get_or<double>(s, "tau", 0.0);
      stream.sigma_min = get_or<double>(s, "sigma_min", 1.0);
      m.streams.push_back(std::move(stream));
    }
    m.validate();

    // data and simulation settings
    const fs::path base = files.context.parent_path();
    if (context.contains("data")) problem.data_path = base / context.at("data").get<std::string>();
    problem.dt = get_or<double>(context, "dt", 0.0);

    SimulationSettings& sim = problem.simulation;
    sim.theta.resize(static_cast<Eigen::Index>(problem.params.size()));
    for (std::size_t i = 0; i < problem.params.size(); ++i)
      sim.theta[static_cast<Eigen::Index>(i)] = problem.params[i].guess;
    if (context.contains("simulation")) {
      const Json& js = context.at("simulation");
      if (js.contains("theta"))
        for (const auto& [name, value] : js.at("theta").items()) {
          const auto it = estimated.find(name);
          if (it == estimated.end()) throw ConfigError("simulation.theta names unknown parameter " + name);
          sim.theta[it->second] = value.get<double>();
        }
      sim.seed = get_or<std::uint64_t>(js, "seed", 1);
      sim.dt = get_or<double>(js, "dt", 0.0);
      if (js.contains("schedule")) {
        const Json& sc = js.at("schedule");
        sim.schedule = regular_schedule(m, sc.at("first").get<double>(), sc.at("step").get<double>(),
                                        sc.at("count").get<int>());
      }
      if (js.contains("missing"))
        for (const auto& miss : js.at("missing")) {
          const int stream = m.stream_index(miss.at("stream").get<std::string>());
          if (stream < 0) throw ConfigError("simulation.missing names an unknown stream");
          const auto obs = miss.at("observation").get<std::size_t>();
          const std::size_t idx = obs * m.streams.size() + static_cast<std::size_t>(stream);
          if (idx >= sim.schedule.size()) throw ConfigError("simulation.missing observation out of range");
          sim.schedule[idx].missing = true;
        }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed model documents: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return problem;
}

void write_two_city_files(const fs::path& dir, const TwoCityConfig& config) {
  const TwoCityProblem p = build_two_city_si(config);
  fs::create_directories(dir);

  Json process;
  process["compartments"] = {"S1", "I1", "S2", "I2"};
  process["accumulators"] = {"Z1", "Z2"};
  process["diffusions"] = Json::array({{{"parameter", "R0_1"}, {"volatility", "sigma_vol"}},
                                       {{"parameter", "R0_2"}, {"volatility", "sigma_vol"}}});
  process["order"] = p.model.state_names;
  Json reactions = Json::array();
  for (int c = 1; c <= 2; ++c) {
    const std::string s = "S" + std::to_string(c), i = "I" + std::to_string(c), n = "N" + std::to_string(c),
                      r0 = "R0_" + std::to_string(c), z = "Z" + std::to_string(c);
    reactions.push_back({{"from", s}, {"to", i}, {"rate", r0 + " / v * " + s + " * " + i + " / " + n}, {"accumulate", {z}}});
    reactions.push_back({{"from", i}, {"to", s}, {"rate", i + " / v"}});
  }
  process["reactions"] = reactions;

  Json context;
  context["t0"] = p.model.t0;
  Json estimated = Json::array();
  for (const auto& s : p.params)
    estimated.push_back({{"name", s.name}, {"transform", transform_name(s.transform)}, {"guess", s.guess},
                         {"sd_transf", s.sd_transf}, {"min", s.min}, {"max", s.max}});
  context["estimated"] = estimated;
  context["fixed"] = {{"N1", config.population[0]}, {"N2", config.population[1]}, {"sigma_vol", config.sigma_vol}};
  context["initial_conditions"] = {
      {"S1", "N1 - " + format_double(config.initial_infected[0])}, {"I1", config.initial_infected[0]},
      {"S2", "N2 - " + format_double(config.initial_infected[1])}, {"I2", config.initial_infected[1]}};
  context["data"] = "data.csv";
  Json missing = Json::array();
  const auto schedule = p.schedule();
  for (std::size_t i = 0; i < schedule.size(); ++i)
    if (schedule[i].missing)
      missing.push_back({{"stream", p.model.streams[static_cast<std::size_t>(schedule[i].stream)].name},
                         {"observation", i / p.model.streams.size()}});
  context["simulation"] = {
      {"theta", {{"R0_1", config.theta_true[0]}, {"R0_2", config.theta_true[1]}, {"v", config.theta_true[2]}}},
      {"seed", config.data_seed},
      {"dt", p.dt()},
      {"schedule", {{"first", config.first_observation}, {"step", config.observation_step}, {"count", config.observation_count}}},
      {"missing", missing}};

  Json link;
  Json streams = Json::array();
  for (const auto& s : p.model.streams) {
    std::vector<std::string> observe;
    for (int i : s.indices) observe.push_back(p.model.state_names[static_cast<std::size_t>(i)]);
    streams.push_back({{"name", s.name}, {"kind", s.kind == StreamKind::incidence ? "incidence" : "prevalence"},
                       {"observe", observe}, {"tau", s.tau}, {"sigma_min", s.sigma_min}});
  }
  link["streams"] = streams;

  write_json(dir / "process.json", process);
  write_json(dir / "context.json", context);
  write_json(dir / "link.json", link);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ObservationSeries read_series_csv(const fs::path& path, const ModelDef& model) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time,stream,value") throw ConfigError(path.string() + ": header must be time,stream,value");
  ObservationSeries series;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string t, s, v;
    if (!std::getline(ss, t, ',') || !std::getline(ss, s, ',') || !std::getline(ss, v))
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected three fields");
    Frame f;
    try {
      f.time = std::stod(t);
      f.value = (v == "NA") ? kMissing : std::stod(v);
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
    f.stream = model.stream_index(s);
    if (f.stream < 0) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": unknown stream " + s);
    series.frames.push_back(f);
  }
  try {
    validate(series, model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return series;
}

void write_series_csv(const fs::path& path, const ObservationSeries& series, const ModelDef& model) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "time,stream,value\n";
  for (const auto& f : series.frames)
    out << format_double(f.time) << ',' << model.streams.at(static_cast<std::size_t>(f.stream)).name << ','
        << format_double(f.value) << '\n';
}

void write_latent_csv(const fs::path& path, const LatentPath& latent, const ModelDef& model) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "time";
  for (int i = 0; i < model.k; ++i)
    out << ',' << (model.state_names.empty() ? "x" + std::to_string(i) : model.state_names[static_cast<std::size_t>(i)]);
  out << '\n';
  for (std::size_t r = 0; r < latent.times.size(); ++r) {
    out << format_double(latent.times[r]);
    for (int i = 0; i < model.k; ++i) out << ',' << format_double(latent.states[r][i]);
    out << '\n';
  }
}

}  // namespace ssi
