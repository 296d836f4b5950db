#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grsvrg/experiment.hpp"
#include "grsvrg/hash.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace grsvrg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kTinyConfig = R"(
# tiny pca experiment
problem = pca
n = 60
d = 8
r = 2
seed = 5

algorithm = rsvrg
algorithm = rsgd

schedule_kind = fixed
eta0 = 2e-3
eta0 = 8e-3

batch_size = 5
max_epochs = 3
m_s = 30
grad_tol = 0
)";

}  // namespace

TEST_CASE("config parser: lists, comments, defaults") {
  const ExperimentConfig cfg = parse_config_text(kTinyConfig, "inline");
  REQUIRE(cfg.synthetic.has_value());
  CHECK(cfg.synthetic->kind == ProblemKind::pca);
  CHECK(cfg.synthetic->n == 60);
  CHECK(cfg.algorithms.size() == 2);
  CHECK(cfg.schedule_grid.size() == 2);
  CHECK(cfg.optim.batch_size == 5);
  CHECK(cfg.optim.m_s == 30);
  CHECK(cfg.seed == 5);
}

TEST_CASE("config parser: error paths") {
  CHECK_THROWS_AS(parse_config_text("problem = pca\n", "x"), ConfigError);  // missing n/d/r
  CHECK_THROWS_AS(parse_config_text("nonsense line\n", "x"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("problem = warp\nn=1\nd=2\nr=1\n", "x"), ConfigError);

  // Empty schedule grid.
  CHECK_THROWS_AS(
      parse_config_text("problem = pca\nn = 10\nd = 4\nr = 1\nalgorithm = rsgd\n", "x"),
      ConfigError);

  // decay without lambda.
  CHECK_THROWS_AS(parse_config_text("problem = pca\nn = 10\nd = 4\nr = 1\nalgorithm = rsgd\n"
                                    "schedule_kind = decay\neta0 = 1e-3\n",
                                    "x"),
                  ConfigError);

  // Missing dataset path.
  CHECK_THROWS_AS(parse_config_text("problem = mc_dataset\ndataset_path = /no/such/file\n"
                                    "algorithm = rsgd\nschedule_kind = fixed\neta0 = 1e-3\n",
                                    "x"),
                  ConfigError);
}

TEST_CASE("run_experiment writes traces, summary, manifest; reruns are byte-identical") {
  const fs::path dir_a = fresh_dir("grsvrg_exp_a");
  const fs::path dir_b = fresh_dir("grsvrg_exp_b");

  ExperimentConfig cfg = parse_config_text(kTinyConfig, "inline");
  cfg.out_dir = dir_a.string();
  const ExperimentResult result = run_experiment(cfg, 2);
  CHECK(result.total_cells == 4);
  CHECK(result.failed_cells == 0);

  for (const char* name :
       {"trace_rsvrg_fixed_eta0.002.csv", "trace_rsvrg_fixed_eta0.008.csv",
        "trace_rsgd_fixed_eta0.002.csv", "trace_rsgd_fixed_eta0.008.csv", "summary.csv",
        "manifest.json"}) {
    CHECK(fs::exists(dir_a / name));
  }

  // Trace columns are pinned.
  {
    std::ifstream in(dir_a / "trace_rsvrg_fixed_eta0.002.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "epoch,grad_evals_over_N,train_loss,test_loss,optimality_gap,grad_norm,wall_time");
    const auto trace = detail_csv::read_trace_csv((dir_a / "trace_rsvrg_fixed_eta0.002.csv").string());
    REQUIRE(trace.size() == 3);
    CHECK(trace[0].grad_evals_over_n < trace[1].grad_evals_over_n);
    CHECK(std::isfinite(trace[0].optimality_gap));  // pca has an exact reference
  }

  cfg.out_dir = dir_b.string();
  run_experiment(cfg, 1);  // different worker count must not change the bytes
  for (const char* name :
       {"trace_rsvrg_fixed_eta0.002.csv", "trace_rsvrg_fixed_eta0.008.csv",
        "trace_rsgd_fixed_eta0.002.csv", "trace_rsgd_fixed_eta0.008.csv", "summary.csv"}) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("best-tuned selection is a pure function of the outcomes") {
  CellOutcome good1{"rsvrg", "fixed_eta0.001", "f1", false, "", 0.5, 0, 0, 0, 0, 3, true, 0};
  CellOutcome good2{"rsvrg", "fixed_eta0.002", "f2", false, "", 0.3, 0, 0, 0, 0, 3, true, 0};
  CellOutcome failed{"rsvrg", "fixed_eta0.004", "f3", true, "diverged", 0.1, 0, 0, 0, 0, 1, false,
                     0};
  CellOutcome other{"rsgd", "fixed_eta0.001", "f4", false, "", 0.9, 0, 0, 0, 0, 3, false, 0};

  const auto summary = build_summary({good1, good2, failed, other});
  REQUIRE(summary.size() == 4);
  CHECK_FALSE(summary[0].best);
  CHECK(summary[1].best);   // lowest non-failed rsvrg loss
  CHECK_FALSE(summary[2].best);  // failed cells are excluded even with lower loss
  CHECK(summary[3].best);   // only rsgd cell
}

namespace {

// Delegates to a real problem but reports a non-finite cost once the iterate
// leaves a trust ball, so large-step grid cells diverge deterministically.
class FragileProblem : public Problem {
 public:
  FragileProblem(std::shared_ptr<Problem> inner, GrassmannPoint home, double limit)
      : inner_(std::move(inner)), home_(std::move(home)), limit_(limit) {}

  Index n_samples() const override { return inner_->n_samples(); }
  int ambient_dim() const override { return inner_->ambient_dim(); }
  int subspace_rank() const override { return inner_->subspace_rank(); }
  double batch_cost(const GrassmannPoint& u, const Batch& batch) const override {
    if (distance(u, home_) > limit_) return std::numeric_limits<double>::quiet_NaN();
    return inner_->batch_cost(u, batch);
  }
  TangentVector stoch_grad(const GrassmannPoint& u, const Batch& batch) const override {
    return inner_->stoch_grad(u, batch);
  }

 private:
  std::shared_ptr<Problem> inner_;
  GrassmannPoint home_;
  double limit_;
};

}  // namespace

TEST_CASE("failed cells are recorded in the manifest and excluded from best") {
  const fs::path dir = fresh_dir("grsvrg_exp_fail");
  ExperimentConfig cfg = parse_config_text(R"(
problem = pca
n = 40
d = 8
r = 2
seed = 9
algorithm = rsvrg
schedule_kind = fixed
eta0 = 40
eta0 = 1e-3
m_s = 30
batch_size = 5
max_epochs = 2
grad_tol = 0
)",
                                           "inline");
  cfg.out_dir = dir.string();

  ProblemSetup setup = build_problem(cfg);
  setup.problem = std::make_shared<FragileProblem>(setup.problem, setup.u0, 0.5);
  const ExperimentResult result = run_experiment(cfg, setup, 2);
  CHECK(result.total_cells == 2);
  CHECK(result.failed_cells == 1);

  bool found_failed = false;
  bool found_best = false;
  for (const auto& row : result.summary) {
    if (row.cell.failed) {
      found_failed = true;
      CHECK_FALSE(row.best);
      CHECK_FALSE(row.cell.error.empty());
    }
    if (row.best) {
      found_best = true;
      CHECK(row.cell.schedule == "fixed_eta0.001");
    }
  }
  CHECK(found_failed);
  CHECK(found_best);
  CHECK(slurp(dir / "manifest.json").find("\"failed\": true") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("plot data: tidy series with strictly increasing x") {
  const fs::path dir = fresh_dir("grsvrg_exp_plot");
  ExperimentConfig cfg = parse_config_text(kTinyConfig, "inline");
  cfg.out_dir = dir.string();
  run_experiment(cfg, 2);
  emit_plot_data(dir.string());

  for (const char* metric : {"train_loss", "optimality_gap", "grad_norm", "test_loss"}) {
    CHECK(fs::exists(dir / (std::string("plot_") + metric + ".csv")));
  }
  // pca has no test set: the test_loss file holds only the header.
  {
    std::ifstream in(dir / "plot_test_loss.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1);
  }
  // 4 series, 3 epochs each; x strictly increasing within each series.
  {
    std::ifstream in(dir / "plot_train_loss.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "algorithm,schedule,x,y");
    std::map<std::string, double> last_x;
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      std::istringstream ss(line);
      std::string algo, sched, xs, ys;
      std::getline(ss, algo, ',');
      std::getline(ss, sched, ',');
      std::getline(ss, xs, ',');
      std::getline(ss, ys, ',');
      const std::string key = algo + "/" + sched;
      const double x = std::stod(xs);
      if (last_x.count(key)) CHECK(x > last_x[key]);
      last_x[key] = x;
    }
    CHECK(rows == 12);
    CHECK(last_x.size() == 4);
  }
  fs::remove_all(dir);
}

TEST_CASE("rsd reaches a tiny gap on the desk pca instance through the cli pipeline") {
  const fs::path dir = fresh_dir("grsvrg_exp_rsd");
  const std::string config_text = R"(
problem = pca
n = 500
d = 20
r = 5
seed = 3
algorithm = rsd
schedule_kind = fixed
eta0 = 1
max_epochs = 3000
grad_tol = 1e-6
)";
  ExperimentConfig cfg = parse_config_text(config_text, "inline");
  cfg.out_dir = dir.string();
  const ExperimentResult result = run_experiment(cfg, 1);
  REQUIRE(result.total_cells == 1);
  REQUIRE(result.failed_cells == 0);
  emit_plot_data(dir.string());

  const auto trace = detail_csv::read_trace_csv((dir / "trace_rsd_backtracking.csv").string());
  REQUIRE(!trace.empty());
  CHECK(trace.back().optimality_gap <= 1e-10);

  // The plotted gap series ends at the same tiny value.
  std::ifstream in(dir / "plot_optimality_gap.csv");
  std::string line, last;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  const double final_gap = std::stod(last.substr(last.rfind(',') + 1));
  CHECK(final_gap <= 1e-10);
  fs::remove_all(dir);
}

TEST_CASE("verify command passes on a healthy variance-reduced experiment") {
  const fs::path dir = fresh_dir("grsvrg_exp_verify");
  const std::string config_text = R"(
problem = karcher
n = 20
d = 10
r = 2
noise_sigma = 0.5
seed = 11
algorithm = rsvrg
schedule_kind = fixed
eta0 = 0.02
m_s = 40
batch_size = 5
max_epochs = 8
grad_tol = 0
)";
  ExperimentConfig cfg = parse_config_text(config_text, "inline");
  cfg.out_dir = dir.string();
  const ExperimentResult result = run_experiment(cfg, 1);
  REQUIRE(result.failed_cells == 0);
  CHECK(verify_artifacts(dir.string()) == 0);
  fs::remove_all(dir);
}

TEST_CASE("cli exit codes") {
  const fs::path dir = fresh_dir("grsvrg_exp_cli");
  const fs::path config_path = dir / "exp.cfg";
  std::ofstream(config_path) << kTinyConfig;
  const fs::path out = dir / "artifacts";

  {
    const char* argv[] = {"grsvrg", "run", config_path.c_str(), "--out", out.c_str(),
                          "--workers", "2"};
    CHECK(cli_main(7, argv) == 0);
    CHECK(fs::exists(out / "summary.csv"));
  }
  {
    const char* argv[] = {"grsvrg", "plotdata", out.c_str()};
    CHECK(cli_main(3, argv) == 0);
    CHECK(fs::exists(out / "plot_train_loss.csv"));
  }
  {
    const char* argv[] = {"grsvrg", "run", "/no/such/config.cfg"};
    CHECK(cli_main(3, argv) == 2);
  }
  {
    // Malformed config: empty grid.
    const fs::path bad = dir / "bad.cfg";
    std::ofstream(bad) << "problem = pca\nn = 10\nd = 4\nr = 1\nalgorithm = rsgd\n";
    const char* argv[] = {"grsvrg", "run", bad.c_str()};
    CHECK(cli_main(3, argv) == 2);
  }
  {
    // Unknown subcommand.
    const char* argv[] = {"grsvrg", "explode"};
    CHECK(cli_main(2, argv) == 2);
  }
  {
    // Every cell aborts: the batch size exceeds the sample count.
    const fs::path all_fail = dir / "fail.cfg";
    std::ofstream(all_fail) << "problem = pca\nn = 8\nd = 6\nr = 2\n"
                               "seed = 13\nalgorithm = rsvrg\nalgorithm = rsgd\n"
                               "schedule_kind = fixed\neta0 = 1e-3\n"
                               "batch_size = 50\nmax_epochs = 2\n";
    const fs::path out2 = dir / "artifacts2";
    const char* argv[] = {"grsvrg", "run", all_fail.c_str(), "--out", out2.c_str()};
    CHECK(cli_main(5, argv) == 3);
  }
  fs::remove_all(dir);
}

TEST_CASE("sha1 matches known vectors and hashes files git-style") {
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");

  const fs::path file = fs::temp_directory_path() / "grsvrg_hash_probe.txt";
  std::ofstream(file) << "hello\n";
  // git hash-object on "hello\n" gives this well-known blob id.
  CHECK(git_blob_hash(file.string()) == "ce013625030ba8dba906f756967f9e9ca394464a");
  fs::remove(file);
}
