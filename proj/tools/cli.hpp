#ifndef SSI_TOOLS_CLI_HPP
#define SSI_TOOLS_CLI_HPP

#include "ssi/mcmc.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ssi::cli {

enum ExitCode : int { ok = 0, usage = 1, numeric = 2 };

/// Runs one subcommand (simul, lhs, simplex, ksimplex, kmcmc, pmcmc, smc,
/// diag). The one-line JSON summary goes to `out`, diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

/// A trace as stored in trace.csv: natural-scale parameter values.
struct TraceTable {
  std::vector<std::string> names;
  std::vector<long> index;
  Eigen::MatrixXd values;  ///< rows x d
  std::vector<double> loglik, logprior, epsilon;
  std::vector<int> accepted;
};

TraceTable to_table(const McmcTrace& trace, const ParamList& specs);
void write_trace_csv(const std::filesystem::path& path, const TraceTable& table);
TraceTable read_trace_csv(const std::filesystem::path& path);

/// traceplot_<p>.csv, posterior_<p>.csv (50 bins) and summary.json.
void emit_plot_data(const TraceTable& table, const std::filesystem::path& outdir);

}  // namespace ssi::cli

#endif  // SSI_TOOLS_CLI_HPP
