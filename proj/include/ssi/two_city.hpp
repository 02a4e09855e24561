#ifndef SSI_TWO_CITY_HPP
#define SSI_TWO_CITY_HPP

#include "ssi/model.hpp"
#include "ssi/params.hpp"

#include <array>
#include <string>
#include <vector>

namespace ssi {

/// Fixed settings of the bundled two-city SIS example with a log-scale
/// diffusing reproduction number in each city.
///
/// State layout: [S1, I1, logR0_1, Z1, S2, I2, logR0_2, Z2] where Z_c
/// accumulates new infections in city c between observation times.
struct TwoCityConfig {
  std::array<double, 2> population{50000.0, 30000.0};
  std::array<double, 2> initial_infected{20.0, 20.0};
  double sigma_vol = 0.02;  ///< volatility of log R0 per sqrt(day)

  // observation schedule (days)
  double first_observation = 7.0;
  double observation_step = 7.0;
  int observation_count = 25;

  // noise: grouped incidence (two sources), city-2 incidence, city-1 prevalence
  std::array<double, 4> tau{0.10, 0.20, 0.15, 0.10};
  std::array<double, 4> sigma_min{10.0, 10.0, 10.0, 10.0};

  /// Natural-scale values used to generate the bundled data set.
  std::array<double, 3> theta_true{1.8, 1.4, 7.0};
  std::uint64_t data_seed = 20121;
};

struct TwoCityProblem {
  ModelDef model;
  ParamList params;  ///< R0_1, R0_2, v (log transforms)
  TwoCityConfig config;

  /// Observation slots with the example's missingness mask applied.
  std::vector<ScheduledFrame> schedule() const;
  double dt() const;
};

TwoCityProblem build_two_city_si(const TwoCityConfig& config = {});

/// The bundled data set: `simulate` at theta_true with data_seed.
SimulationResult two_city_data(const TwoCityProblem& problem);

}  // namespace ssi

#endif  // SSI_TWO_CITY_HPP
