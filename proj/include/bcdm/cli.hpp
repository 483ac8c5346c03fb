#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bcdm/diagnostics.hpp"
#include "bcdm/fit.hpp"
#include "bcdm/latent.hpp"
#include "bcdm/models.hpp"
#include "bcdm/sampler.hpp"
#include "bcdm/simulate.hpp"

namespace bcdm {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitParse = 2,
  kExitDimension = 3,
  kExitNotConverged = 4,
  kExitSampler = 5,
};

/// Maps a failure onto the documented exit codes.
int exit_code_for(const std::exception& e);

/// Settings of the simulate command (keys sim.*).
struct SimSettings {
  std::size_t n_persons = 500;
  std::uint64_t seed = 1;
  ItemRanges ranges;
  std::vector<double> mixing;  // empty: uniform over patterns
  double xi = 1.5;             // slope for every attribute unless sim.xi_list is given
  std::vector<double> xi_list, beta;
  std::vector<double> mu_theta;  // T entries, first one 0
  double phi = 0.8, psi = 0.6;   // Delta(t, t-1) and Delta(t, t) for t >= 2
  double testlet_var = 0.5;
};

struct RunConfig {
  std::filesystem::path q_path, y_path, testlet_path;
  std::optional<int> n_testlets;
  std::vector<int> items_per_occasion;
  std::vector<std::pair<int, int>> anchors;  // (item, shares-with), 1-based stacked indices
  ModelKind model = ModelKind::Dina;
  std::optional<Structure> structure;
  PriorSpec prior;
  std::vector<double> dirichlet_scale;
  McmcConfig mcmc;
  std::vector<std::string> monitor;
  std::filesystem::path output_dir;
  double rhat_threshold = 1.2;
  bool auto_extend = false;
  int extend_increment = 1000;
  int extend_cap = 20000;  // total iterations per chain, extensions included
  int preflight_iter = 1000;
  std::optional<double> np_reference;
  bool write_traces = false;
  SimSettings sim;
};

/// Output directory used when a configuration does not name one: the
/// BCDM_OUTPUT_DIR environment variable, else "bcdm_output".
std::filesystem::path default_output_dir();

/// Applies one "key = value" setting. Relative paths are resolved against
/// base_dir. Throws ParseError for unknown keys or malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir);

/// Parses "key = value" lines ('#' starts a comment), then applies
/// overrides given as "key=value" (paths relative to the working directory).
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir,
                           const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

/// Reads and cross-checks every input file.
Dataset load_dataset(const RunConfig& config);
ModelSpec make_model_spec(const RunConfig& config);

/// "DINA", "RRUM", "LONG-DINA", ...: the suffix of every output file.
std::string model_label(ModelKind kind);

struct RunOutcome {
  int exit_code = kExitOk;
  FitReport report;
  std::optional<ConvergenceCheck> convergence;
  long iterations = 0;
  std::vector<std::filesystem::path> files;
};

/// fit: sample, extend while unconverged (if enabled), then write the
/// pattern, itempar, summary and fit files.
RunOutcome run_fit(const RunConfig& config, std::ostream& log);

struct PreflightReport {
  bool converged = false;
  bool degenerate = false;
  long iterations = 0;
  double max_rhat = 0;
  std::string worst;
};

/// Short run that keeps extending until every monitored R-hat is below the
/// threshold or the cap is reached.
PreflightReport preflight(const RunConfig& config, std::ostream& log);

/// simulate: draws true parameters from the sim.* ranges and writes Y.csv,
/// alpha.csv and truth.txt into the output directory.
void run_simulate(const RunConfig& config, std::ostream& log);

}  // namespace bcdm
