#pragma once

#include "grsvrg/data.hpp"
#include "grsvrg/optim.hpp"
#include "grsvrg/problems.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace grsvrg {

/// A fully expanded experiment: one problem instance, a list of algorithms,
/// and a schedule grid. Parsed from a flat key = value file (repeated keys
/// accumulate into lists); see docs/config.md.
struct ExperimentConfig {
  // Problem. Either synthetic or a rating dataset completed at fixed rank.
  std::optional<SyntheticSpec> synthetic;
  std::string dataset_path;
  RatingFormat dataset_format = RatingFormat::movielens;
  int per_user_holdout = 2;
  int dataset_rank = 5;
  double ridge = 1e-8;

  std::vector<Variant> algorithms;
  std::vector<Schedule> schedule_grid;
  OptimizerConfig optim;
  std::uint64_t seed = 0;
  std::string out_dir = "artifacts";

  std::string source_path;  // config file this was parsed from, if any
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name);

/// Everything the harness needs to run one problem: the instance, the exact
/// reference value f* when computable, and the shared initial point.
struct ProblemSetup {
  std::shared_ptr<Problem> problem;
  double f_star = std::numeric_limits<double>::quiet_NaN();
  std::optional<GrassmannPoint> reference;  // minimizer, when computable
  GrassmannPoint u0;
};

ProblemSetup build_problem(const ExperimentConfig& config);

struct CellOutcome {
  std::string algorithm;
  std::string schedule;
  std::string trace_file;
  bool failed = false;
  std::string error;
  double final_train_loss = std::numeric_limits<double>::quiet_NaN();
  double final_test_loss = std::numeric_limits<double>::quiet_NaN();
  double final_gap = std::numeric_limits<double>::quiet_NaN();
  double final_grad_norm = std::numeric_limits<double>::quiet_NaN();
  double grad_evals_over_n = std::numeric_limits<double>::quiet_NaN();
  int epochs = 0;
  bool converged = false;
  double wall_seconds = 0.0;
};

struct SummaryRow {
  CellOutcome cell;
  bool best = false;  // best-tuned flag within its algorithm
};

/// Best-tuned selection: per algorithm, the non-failed cell with the lowest
/// final train loss (grid order breaks ties). Pure function of the outcomes.
std::vector<SummaryRow> build_summary(const std::vector<CellOutcome>& cells);

struct ExperimentResult {
  std::string out_dir;
  std::vector<SummaryRow> summary;
  long failed_cells = 0;
  long total_cells = 0;
};

/// Runs every (algorithm, schedule) grid cell (R-SD ignores schedules and runs
/// once), writing trace_<algo>_<sched>.csv per cell plus summary.csv and
/// manifest.json. Cells run concurrently up to `workers`. Failed cells are
/// recorded in the manifest and excluded from best-tuned selection.
ExperimentResult run_experiment(const ExperimentConfig& config, int workers = 0);

/// Same grid runner against an externally built problem (the config's problem
/// keys are echoed into the manifest but not re-instantiated).
ExperimentResult run_experiment(const ExperimentConfig& config, const ProblemSetup& setup,
                                int workers = 0);

/// Tidy long-format CSVs, one per metric, with columns
/// algorithm,schedule,x,y (x = grad_evals_over_N). Reads the manifest.
void emit_plot_data(const std::string& artifact_dir);

/// Re-derives the problem from the manifest and replays the best
/// variance-reduced cell with checkpoint recording, then runs the
/// statistical checks (unbiasedness, variance trend, second-moment bound,
/// local rate fit). Returns the number of failed checks.
int verify_artifacts(const std::string& artifact_dir);

/// CLI entry point: subcommands run / plotdata / verify.
/// Exit codes: 0 success, 2 configuration error, 3 all grid cells failed.
int cli_main(int argc, const char* const* argv);

namespace detail_csv {
std::string format_double(double v);
std::vector<TraceRecord> read_trace_csv(const std::string& path);
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace);
}  // namespace detail_csv

}  // namespace grsvrg
