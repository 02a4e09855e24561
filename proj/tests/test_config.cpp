#include "doctest.h"

#include "ssi/config.hpp"
#include "ssi/ekf.hpp"
#include "ssi/expression.hpp"

#include <filesystem>
#include <fstream>
#include <map>

using namespace ssi;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ssinfer_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SymbolResolver resolver(const std::map<std::string, Symbol>& table) {
  return [table](const std::string& n) -> std::optional<Symbol> {
    const auto it = table.find(n);
    if (it == table.end()) return std::nullopt;
    return it->second;
  };
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("expressions") {
    const auto r = resolver({{"x", {Symbol::Kind::state, 0}},
                             {"y", {Symbol::Kind::state, 1}},
                             {"ly", {Symbol::Kind::exp_state, 1}},
                             {"p", {Symbol::Kind::param, 0}},
                             {"c", {Symbol::Kind::constant, 0, 4.0}}});
    const Eigen::Vector2d x(3.0, 0.5);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 2.0);
    const auto eval = [&](const std::string& s) { return Expression::compile(s, r).eval(x, p); };
    CHECK(eval("1 + 2 * 3") == 7.0);
    CHECK(eval("(1 + 2) * 3") == 9.0);
    CHECK(eval("2 ^ 3 ^ 2") == 512.0);
    CHECK(eval("-2 ^ 2") == -4.0);
    CHECK(eval("10 / 4 / 5") == 0.5);
    CHECK(eval("x - y - 1") == 1.5);
    CHECK(eval("p * c") == 8.0);
    CHECK(eval("ly") == doctest::Approx(std::exp(0.5)));
    CHECK(eval("exp(log(7))") == doctest::Approx(7.0));
    CHECK(eval("sqrt(c) + pow(2, 5) + min(x, y) + max(x, y)") == doctest::Approx(2 + 32 + 0.5 + 3));
    CHECK(eval("1.5e2") == 150.0);
    CHECK(Expression::compile("x * 2", r).uses_state());
    CHECK_FALSE(Expression::compile("p * c", r).uses_state());
    CHECK_THROWS_AS(Expression::compile("unknown + 1", r), ExpressionError);
    CHECK_THROWS_AS(Expression::compile("(1 + 2", r), ExpressionError);
    CHECK_THROWS_AS(Expression::compile("1 +", r), ExpressionError);
    CHECK_THROWS_AS(Expression::compile("pow(1)", r), ExpressionError);
    CHECK_THROWS_AS(Expression::compile("1 2", r), ExpressionError);
  }

  TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e22, 123456789.0}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(kMissing) == "NA");
    CHECK(format_double(INFINITY) == "inf");
    CHECK(format_double(-INFINITY) == "-inf");
  }

  TEST_CASE("the exported two-city documents compile to the built-in model") {
    const auto dir = scratch_dir("export");
    write_two_city_files(dir);
    const auto built = build_two_city_si();
    const auto loaded = load_problem(ProblemFiles::in(dir));
    const ModelDef& a = built.model;
    const ModelDef& b = loaded.model;

    REQUIRE(b.k == a.k);
    CHECK(b.state_names == a.state_names);
    CHECK(b.t0 == a.t0);
    REQUIRE(loaded.params.size() == built.params.size());
    for (std::size_t i = 0; i < built.params.size(); ++i) {
      CHECK(loaded.params[i].name == built.params[i].name);
      CHECK(loaded.params[i].transform == built.params[i].transform);
      CHECK(loaded.params[i].guess == built.params[i].guess);
      CHECK(loaded.params[i].min == built.params[i].min);
      CHECK(loaded.params[i].max == built.params[i].max);
    }
    REQUIRE(b.streams.size() == a.streams.size());
    for (std::size_t s = 0; s < a.streams.size(); ++s) {
      CHECK(b.streams[s].name == a.streams[s].name);
      CHECK(b.streams[s].kind == a.streams[s].kind);
      CHECK(b.streams[s].indices == a.streams[s].indices);
      CHECK(b.streams[s].tau == a.streams[s].tau);
      CHECK(b.streams[s].sigma_min == a.streams[s].sigma_min);
    }

    const Eigen::Vector3d theta(1.8, 1.4, 7.0);
    const Eigen::VectorXd xa = a.initial_state(theta), xb = b.initial_state(theta);
    CHECK((xa - xb).norm() < 1e-12);

    Eigen::VectorXd x = xa;
    x << 40000, 300, std::log(1.7), 12, 25000, 150, std::log(1.3), 4;
    Eigen::VectorXd fa(8), fb(8);
    Eigen::MatrixXd qa(8, 8), qb(8, 8), ja(8, 8), jb(8, 8);
    a.eval_drift(x, theta, 3.0, fa);
    b.eval_drift(x, theta, 3.0, fb);
    a.eval_diffusion(x, theta, 3.0, qa);
    b.eval_diffusion(x, theta, 3.0, qb);
    a.eval_jacobian(x, theta, 3.0, ja);
    b.eval_jacobian(x, theta, 3.0, jb);
    CHECK((fa - fb).norm() <= 1e-12 * fa.norm());
    CHECK((qa - qb).norm() <= 1e-12 * qa.norm());
    CHECK((ja - jb).norm() <= 1e-5 * ja.norm());

    const auto data = two_city_data(built);
    const double la = run_ekf(a, theta, data.series).loglik;
    const double lb = run_ekf(b, theta, data.series).loglik;
    CHECK(lb == doctest::Approx(la).epsilon(1e-8));

    CHECK(loaded.data_path == dir / "data.csv");
    CHECK(loaded.simulation.seed == built.config.data_seed);
    CHECK(loaded.simulation.dt == built.dt());
    const auto sa = built.schedule();
    REQUIRE(loaded.simulation.schedule.size() == sa.size());
    for (std::size_t i = 0; i < sa.size(); ++i) {
      CHECK(loaded.simulation.schedule[i].time == sa[i].time);
      CHECK(loaded.simulation.schedule[i].stream == sa[i].stream);
      CHECK(loaded.simulation.schedule[i].missing == sa[i].missing);
    }
    CHECK((loaded.simulation.theta - theta).norm() == 0.0);
    fs::remove_all(dir);
  }

  TEST_CASE("series csv round trip") {
    const auto dir = scratch_dir("csv");
    const auto p = build_two_city_si();
    const auto data = two_city_data(p);
    write_series_csv(dir / "data.csv", data.series, p.model);
    const auto back = read_series_csv(dir / "data.csv", p.model);
    REQUIRE(back.frames.size() == data.series.frames.size());
    for (std::size_t i = 0; i < back.frames.size(); ++i) {
      CHECK(back.frames[i].time == data.series.frames[i].time);
      CHECK(back.frames[i].stream == data.series.frames[i].stream);
      if (is_missing(data.series.frames[i].value)) CHECK(is_missing(back.frames[i].value));
      else CHECK(back.frames[i].value == data.series.frames[i].value);
    }

    write_text(dir / "bad1.csv", "t,s,v\n");
    CHECK_THROWS_AS(read_series_csv(dir / "bad1.csv", p.model), ConfigError);
    write_text(dir / "bad2.csv", "time,stream,value\n7,nosuch,1\n");
    CHECK_THROWS_AS(read_series_csv(dir / "bad2.csv", p.model), ConfigError);
    write_text(dir / "bad3.csv", "time,stream,value\n7,1\n");
    CHECK_THROWS_AS(read_series_csv(dir / "bad3.csv", p.model), ConfigError);
    CHECK_THROWS_AS(read_series_csv(dir / "absent.csv", p.model), ConfigError);
    fs::remove_all(dir);
  }

  TEST_CASE("a hand-written SIR with a diffusing contact rate") {
    const auto dir = scratch_dir("sir");
    write_text(dir / "process.json", R"({
      "compartments": ["S", "I", "R"],
      "accumulators": ["inc"],
      "diffusions": [{"parameter": "beta", "volatility": 0.1}],
      "reactions": [
        {"from": "S", "to": "I", "rate": "beta * S * I / N", "accumulate": ["inc"]},
        {"from": "I", "to": "R", "rate": "gamma * I"}
      ]
    })");
    write_text(dir / "context.json", R"({
      "t0": 0,
      "estimated": [
        {"name": "beta", "transform": "log", "guess": 0.5, "sd_transf": 0.1, "min": 0.01, "max": 5},
        {"name": "gamma", "transform": "log", "guess": 0.2, "sd_transf": 0.1, "min": 0.01, "max": 5}
      ],
      "fixed": {"N": 1000},
      "initial_conditions": {"S": "N - 5", "I": 5, "R": 0},
      "simulation": {"seed": 3, "schedule": {"first": 1, "step": 1, "count": 30}}
    })");
    write_text(dir / "link.json", R"({
      "streams": [{"name": "cases", "kind": "incidence", "observe": ["inc"], "tau": 0.1, "sigma_min": 1}]
    })");
    const auto prob = load_problem(ProblemFiles::in(dir));
    CHECK(prob.model.k == 5);
    CHECK(prob.model.state_names == std::vector<std::string>{"S", "I", "R", "logbeta", "inc"});
    CHECK(prob.data_path.empty());

    const Eigen::Vector2d theta(0.5, 0.2);
    const Eigen::VectorXd x0 = prob.model.initial_state(theta);
    CHECK(x0[0] == 995.0);
    CHECK(x0[3] == doctest::Approx(std::log(0.5)));
    Eigen::VectorXd f(5);
    prob.model.eval_drift(x0, theta, 0.0, f);
    const double infection = 0.5 * 995 * 5 / 1000.0;
    CHECK(f[0] == doctest::Approx(-infection));
    CHECK(f[1] == doctest::Approx(infection - 0.2 * 5));
    CHECK(f[2] == doctest::Approx(1.0));
    CHECK(f[3] == 0.0);
    CHECK(f[4] == doctest::Approx(infection));
    Eigen::MatrixXd q(5, 5);
    prob.model.eval_diffusion(x0, theta, 0.0, q);
    CHECK(q(3, 3) == doctest::Approx(0.01));
    CHECK(q.sum() == doctest::Approx(0.01));
    CHECK(prob.model.reset_indices(0) == std::vector<int>{4});

    const auto sim = simulate(prob.model, theta, prob.simulation.schedule, 0.1, prob.simulation.seed);
    CHECK(sim.series.frames.size() == 30);
    CHECK(std::isfinite(run_ekf(prob.model, theta, sim.series).loglik));

    // broken documents
    write_text(dir / "link.json", R"({"streams": [{"name": "cases", "kind": "incidence", "observe": ["I"]}]})");
    CHECK_THROWS_AS(load_problem(ProblemFiles::in(dir)), ConfigError);
    write_text(dir / "link.json", R"({"streams": [{"name": "cases", "observe": ["Q"]}]})");
    CHECK_THROWS_AS(load_problem(ProblemFiles::in(dir)), ConfigError);
    write_text(dir / "link.json", "{ not json");
    CHECK_THROWS_AS(load_problem(ProblemFiles::in(dir)), ConfigError);
    fs::remove(dir / "link.json");
    CHECK_THROWS_AS(load_problem(ProblemFiles::in(dir)), ConfigError);
    fs::remove_all(dir);
  }
}
