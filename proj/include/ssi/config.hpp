#ifndef SSI_CONFIG_HPP
#define SSI_CONFIG_HPP

#include "ssi/model.hpp"
#include "ssi/params.hpp"
#include "ssi/two_city.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings used by the `simul` command.
struct SimulationSettings {
  Eigen::VectorXd theta;  ///< natural scale; defaults to the guesses
  std::uint64_t seed = 1;
  std::vector<ScheduledFrame> schedule;
  double dt = 0.0;  ///< 0: one tenth of the smallest observation gap
};

/// A model, its estimated parameters and where its data lives, as read from
/// the process / context / link documents.
struct Problem {
  ModelDef model;
  ParamList params;
  std::filesystem::path data_path;  ///< empty when the context names no data file
  double dt = 0.0;                  ///< Euler–Maruyama step; 0 means default_dt(data)
  SimulationSettings simulation;
};

struct ProblemFiles {
  std::filesystem::path process, context, link;

  /// process.json, context.json and link.json inside `dir`.
  static ProblemFiles in(const std::filesystem::path& dir);
};

/// Compiles the three JSON documents into a model. Reaction rates are
/// arithmetic expressions over compartments, accumulators, parameters and
/// fixed constants; diffusing parameters become log-scale state components
/// named "log<param>". Jacobians use finite differences.
Problem load_problem(const ProblemFiles& files);

/// Writes the bundled two-city example as process/context/link JSON.
void write_two_city_files(const std::filesystem::path& dir, const TwoCityConfig& config = {});

/// CSV `time,stream,value` with NA for missing values.
ObservationSeries read_series_csv(const std::filesystem::path& path, const ModelDef& model);
void write_series_csv(const std::filesystem::path& path, const ObservationSeries& series, const ModelDef& model);
void write_latent_csv(const std::filesystem::path& path, const LatentPath& latent, const ModelDef& model);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace ssi

#endif  // SSI_CONFIG_HPP
