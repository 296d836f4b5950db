// Acceptance suite: end-to-end checks of the library against its contract,
// one pass/fail line per criterion. Exit code is the number of failures.

#include "grsvrg/data.hpp"
#include "grsvrg/experiment.hpp"
#include "grsvrg/optim.hpp"
#include "grsvrg/verify.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

using namespace grsvrg;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void criterion(int id, const std::string& name, double budget_seconds,
               const std::function<std::string()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_seconds > 0 && secs >= budget_seconds) {
    pass = false;
    detail += " [over budget " + std::to_string(budget_seconds) + "s]";
  }
  if (!detail.empty() && detail.rfind("FAIL", 0) == 0) pass = false;
  std::printf("[%s] criterion %d: %s (%.1fs) %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), secs,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

TangentVector random_tangent(const GrassmannPoint& base, Rng& rng, double norm) {
  TangentVector v = project_tangent(base, rng.gaussian(base.dim(), base.rank()));
  return v * (norm / v.norm());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// Runs a list of jobs on two workers (grid cells are independent).
void parallel_run(std::vector<std::function<void()>>& jobs) {
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i]();
    }
  };
  std::thread other(worker);
  worker();
  other.join();
}

struct GridRun {
  double eta = 0.0;
  bool failed = false;
  RunResult result{GrassmannPoint{Matrix::Identity(2, 1)}, {}, false, 0, 0, {}, {}, {}};
};

std::vector<GridRun> run_grid(const Problem& problem, const GrassmannPoint& u0, double f_star,
                              Variant variant, const std::vector<double>& etas,
                              const std::function<Schedule(double)>& make_schedule,
                              const OptimizerConfig& base) {
  std::vector<GridRun> runs(etas.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    jobs.push_back([&, i]() {
      runs[i].eta = etas[i];
      OptimizerConfig cfg = base;
      cfg.variant = variant;
      try {
        runs[i].result = variant == Variant::rsgd
                             ? run_rsgd(problem, cfg, make_schedule(etas[i]), u0, f_star)
                             : run_rsvrg(problem, cfg, make_schedule(etas[i]), u0, f_star);
      } catch (const std::exception&) {
        runs[i].failed = true;
      }
    });
  }
  parallel_run(jobs);
  return runs;
}

const GridRun* best_by_final_loss(const std::vector<GridRun>& runs) {
  const GridRun* best = nullptr;
  for (const auto& r : runs) {
    if (r.failed || r.result.trace.empty()) continue;
    if (!best || r.result.trace.back().train_loss < best->result.trace.back().train_loss) {
      best = &r;
    }
  }
  return best;
}

double gap_at_budget(const std::vector<TraceRecord>& trace, double budget) {
  double gap = std::numeric_limits<double>::quiet_NaN();
  for (const auto& rec : trace) {
    if (rec.grad_evals_over_n <= budget + 1e-9) gap = rec.optimality_gap;
  }
  if (std::isnan(gap) && !trace.empty()) gap = trace.back().optimality_gap;
  return gap;
}

std::vector<double> linspace_grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

static std::string criterion1() {
  Rng rng(101);
  double worst_roundtrip = 0, worst_isometry = 0, worst_struct = 0, worst_ident = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 3 + static_cast<int>(rng.uniform_below(48));  // up to 50
    const int r = 1 + static_cast<int>(rng.uniform_below(std::min(d - 1, 8)));
    const GrassmannPoint u = GrassmannPoint::random(d, r, rng);
    const TangentVector xi = random_tangent(u, rng, 0.95 * M_PI / 4.0 * (0.1 + 0.9 * rng.uniform01()));
    const GrassmannPoint z = exp_map(u, xi, 1.0);

    worst_struct = std::max(
        worst_struct, (z.mat().transpose() * z.mat() - Matrix::Identity(r, r)).norm());
    const TangentVector back = log_map(u, z);
    worst_struct = std::max(worst_struct, (u.mat().transpose() * back.mat()).norm());
    worst_roundtrip = std::max(worst_roundtrip, distance(exp_map(u, back, 1.0), z));
    worst_ident = std::max(worst_ident, std::abs(back.norm() - distance(u, z)));

    const TangentVector z1 = random_tangent(u, rng, 1.0 + rng.uniform01());
    const TangentVector z2 = random_tangent(u, rng, 0.5);
    const TangentVector m1 = parallel_transport(z1, u, xi);
    const TangentVector m2 = parallel_transport(z2, u, xi);
    worst_isometry = std::max(worst_isometry, std::abs(m1.norm() - z1.norm()));
    worst_isometry = std::max(worst_isometry, std::abs(inner(m1, m2) - inner(z1, z2)));
    worst_struct = std::max(worst_struct, (z.mat().transpose() * m1.mat()).norm());
  }
  std::ostringstream os;
  os << (worst_roundtrip <= 1e-8 && worst_isometry <= 1e-10 && worst_struct <= 1e-10 &&
                 worst_ident <= 1e-10
             ? ""
             : "FAIL ")
     << "roundtrip " << fmt(worst_roundtrip) << ", isometry " << fmt(worst_isometry)
     << ", horizontality/orthonormality " << fmt(worst_struct) << ", dist-norm "
     << fmt(worst_ident);
  return os.str();
}

static std::string criterion2() {
  Rng rng(202);
  const auto rel_err = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
  };

  SyntheticSpec pca_spec;
  pca_spec.kind = ProblemKind::pca;
  pca_spec.n = 60;
  pca_spec.d = 15;
  pca_spec.r = 4;
  pca_spec.seed = 11;
  const PcaProblem pca = gen_pca(pca_spec);

  SyntheticSpec karcher_spec;
  karcher_spec.kind = ProblemKind::karcher;
  karcher_spec.n = 25;
  karcher_spec.d = 12;
  karcher_spec.r = 3;
  karcher_spec.seed = 12;
  const KarcherProblem karcher = gen_karcher(karcher_spec);

  SyntheticSpec mc_spec;
  mc_spec.kind = ProblemKind::mc;
  mc_spec.n = 100;
  mc_spec.d = 25;
  mc_spec.r = 3;
  mc_spec.oversampling = 3;
  mc_spec.condition_number = 5;
  mc_spec.seed = 13;
  const McInstance mc = gen_mc(mc_spec);

  double worst_pca = 0, worst_karcher = 0, worst_mc = 0;
  for (int trial = 0; trial < 200; ++trial) {
    {
      const GrassmannPoint u = GrassmannPoint::random(15, 4, rng);
      const TangentVector dir = random_tangent(u, rng, 1.0);
      worst_pca = std::max(worst_pca, rel_err(inner(pca.full_grad(u), dir),
                                              fd_directional_derivative(pca, u, dir, 1e-5)));
    }
    {
      const GrassmannPoint& c = karcher.points().front();
      const GrassmannPoint u = exp_map(c, random_tangent(c, rng, 0.2 + 0.3 * rng.uniform01()), 1.0);
      const TangentVector dir = random_tangent(u, rng, 1.0);
      worst_karcher =
          std::max(worst_karcher, rel_err(inner(karcher.full_grad(u), dir),
                                          fd_directional_derivative(karcher, u, dir, 1e-5)));
    }
    {
      const GrassmannPoint u =
          exp_map(mc.ground_truth, random_tangent(mc.ground_truth, rng, 0.5 * rng.uniform01()), 1.0);
      const TangentVector dir = random_tangent(u, rng, 1.0);
      worst_mc = std::max(worst_mc, rel_err(inner(mc.problem.full_grad(u), dir),
                                            fd_directional_derivative(mc.problem, u, dir, 1e-5)));
    }
  }
  std::ostringstream os;
  os << (worst_pca <= 1e-5 && worst_karcher <= 1e-5 && worst_mc <= 1e-4 ? "" : "FAIL ")
     << "rel err pca " << fmt(worst_pca) << ", karcher " << fmt(worst_karcher) << ", mc "
     << fmt(worst_mc);
  return os.str();
}

static std::string criterion3() {
  SyntheticSpec spec;
  spec.kind = ProblemKind::pca;
  spec.n = 500;
  spec.d = 20;
  spec.r = 5;
  spec.seed = 303;
  const PcaProblem problem = gen_pca(spec);
  Rng rng(304);
  const GrassmannPoint u0 = GrassmannPoint::random(20, 5, rng);

  OptimizerConfig cfg;
  cfg.batch_size = 10;
  cfg.max_epochs = 10;
  cfg.grad_tol = 0.0;
  cfg.seed = 305;
  cfg.checkpoint_stride = static_cast<int>(5 * spec.n / 2);  // 2 per epoch
  cfg.max_checkpoints = 20;
  const RunResult run = run_rsvrg(problem, cfg, Schedule::Fixed(2e-3), u0);
  if (run.checkpoints.size() != 20) {
    return "FAIL expected 20 checkpoints, got " + std::to_string(run.checkpoints.size());
  }

  double worst = 0.0;
  for (const Checkpoint& cp : run.checkpoints) {
    const TangentVector mean = exact_xi_mean(problem, cp.point, cp.snapshot);
    worst = std::max(worst, (mean - problem.full_grad(cp.point)).norm());
  }
  return (worst <= 1e-10 ? "" : std::string("FAIL ")) + "max ||E[xi] - grad f|| = " + fmt(worst) +
         " over 20 live checkpoints";
}

static std::string criterion4() {
  SyntheticSpec spec;
  spec.kind = ProblemKind::karcher;
  spec.n = 100;
  spec.d = 20;
  spec.r = 2;
  spec.noise_sigma = 0.5;
  spec.seed = 404;
  const KarcherProblem problem = gen_karcher(spec);
  const GrassmannPoint w_star = karcher_mean(problem.points()).point;

  Rng rng(405);
  const GrassmannPoint u0 = exp_map(w_star, random_tangent(w_star, rng, 0.35), 1.0);
  OptimizerConfig cfg;
  cfg.batch_size = 10;
  cfg.max_epochs = 12;
  cfg.grad_tol = 1e-9;
  cfg.seed = 406;
  cfg.checkpoint_stride = static_cast<int>(5 * spec.n / 2);
  cfg.max_checkpoints = 64;
  // With m_s = 5N a strongly convex cluster contracts by e^{-m_s eta} per
  // epoch; eta is chosen so the trajectory spans ~10 informative epochs.
  const RunResult run = run_rsvrg(problem, cfg, Schedule::Fixed(4e-3), u0);

  // Exhaustive variance at matching mid-epoch checkpoints.
  std::map<int, Checkpoint> mid;  // epoch -> t > 1 checkpoint
  for (const Checkpoint& cp : run.checkpoints) {
    if (cp.iteration > 1) mid.insert({cp.epoch, cp});
  }
  if (!mid.count(2)) return "FAIL no epoch-2 checkpoint";
  const int last_epoch = mid.rbegin()->first;
  if (last_epoch <= 3) return "FAIL run too short";
  const double var_early = exact_xi_variance(problem, mid.at(2).point, mid.at(2).snapshot);
  const double var_late =
      exact_xi_variance(problem, mid.at(last_epoch).point, mid.at(last_epoch).snapshot);

  // Second-moment bound with the empirically estimated Lipschitz constant.
  double radius = 1e-3;
  for (const Checkpoint& cp : run.checkpoints) {
    radius = std::max({radius, distance(cp.point, w_star), distance(cp.snapshot, w_star)});
  }
  const LipschitzEstimate beta = estimate_beta(problem, w_star, radius * 1.05, 1000, 407);
  const VarianceBoundReport bound =
      check_variance_bound(problem, run.checkpoints, w_star, beta.beta_hat, 1.1);

  std::ostringstream os;
  os << (var_late < 0.1 * var_early && bound.n_violations == 0 ? "" : "FAIL ") << "Var[xi] epoch 2 "
     << fmt(var_early) << " -> epoch " << last_epoch << " " << fmt(var_late) << " ("
     << fmt(100.0 * var_late / var_early) << "%), bound violations " << bound.n_violations << "/"
     << bound.n_checked << " (beta_hat " << fmt(beta.beta_hat) << ", max ratio "
     << fmt(bound.max_ratio) << ")";
  return os.str();
}

// Shared state between criteria 5, 6 and 8.
namespace c5 {
int passing_seeds = 0;
std::uint64_t first_passing_seed = 0;
double best_eta_for_first_seed = 0.0;
}  // namespace c5

static std::string criterion5() {
  const std::vector<double> etas = linspace_grid(1e-3, 1e-2, 10);
  int pass_count = 0;
  std::ostringstream os;

  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    SyntheticSpec spec;
    spec.kind = ProblemKind::pca;
    spec.n = 2000;
    spec.d = 20;
    spec.r = 5;
    spec.seed = seed;
    const PcaProblem problem = gen_pca(spec);
    const PcaOptimum opt = pca_optimum(problem.data(), 5);
    Rng rng(9000 + seed);
    const GrassmannPoint u0 = GrassmannPoint::random(20, 5, rng);

    OptimizerConfig base;
    base.batch_size = 10;
    base.max_epochs = 100;
    base.grad_tol = 1e-8;
    base.seed = seed;

    const auto svrg = run_grid(problem, u0, opt.f_star, Variant::rsvrg, etas,
                               [](double e) { return Schedule::Fixed(e); }, base);
    const auto sgd = run_grid(problem, u0, opt.f_star, Variant::rsgd, etas,
                              [](double e) { return Schedule::Decay(e, 1e-2); }, base);
    const GridRun* best_svrg = best_by_final_loss(svrg);
    const GridRun* best_sgd = best_by_final_loss(sgd);
    if (!best_svrg || !best_sgd) {
      os << " seed " << seed << ": grid empty;";
      continue;
    }

    const auto& vtrace = best_svrg->result.trace;
    const double v_budget = vtrace.back().grad_evals_over_n;
    const double v_gap = std::max(vtrace.back().optimality_gap, 0.0);
    const double s_gap = gap_at_budget(best_sgd->result.trace, v_budget);
    double s_grad_min = std::numeric_limits<double>::infinity();
    for (const auto& rec : best_sgd->result.trace) {
      s_grad_min = std::min(s_grad_min, rec.full_grad_norm);
    }
    const bool converged_in_budget = v_gap <= 1e-8 && vtrace.back().epoch <= 100;
    const bool gap_ordering = s_gap >= 10.0 * std::max(v_gap, 1e-300) && s_gap > 1e-7;
    const bool grad_ordering = s_grad_min > vtrace.back().full_grad_norm;
    const bool seed_pass = converged_in_budget && gap_ordering && grad_ordering;
    if (seed_pass) {
      ++pass_count;
      if (c5::passing_seeds == 0) {
        c5::first_passing_seed = seed;
        c5::best_eta_for_first_seed = best_svrg->eta;
      }
      ++c5::passing_seeds;
    }
    os << " seed " << seed << (seed_pass ? " ok" : " FAILED") << " (svrg gap " << fmt(v_gap)
       << " @" << fmt(v_budget) << ", sgd gap " << fmt(s_gap) << ", sgd min grad "
       << fmt(s_grad_min) << ");";
  }
  return (pass_count >= 2 ? "" : std::string("FAIL ")) + std::to_string(pass_count) +
         "/3 seeds pass;" + os.str();
}

static std::string criterion6() {
  if (c5::passing_seeds == 0) return "FAIL no passing seed from criterion 5";
  SyntheticSpec spec;
  spec.kind = ProblemKind::pca;
  spec.n = 2000;
  spec.d = 20;
  spec.r = 5;
  spec.seed = c5::first_passing_seed;
  const PcaProblem problem = gen_pca(spec);
  const PcaOptimum opt = pca_optimum(problem.data(), 5);
  Rng rng(9000 + spec.seed);
  const GrassmannPoint u0 = GrassmannPoint::random(20, 5, rng);

  // A smaller fixed step stretches the linear phase over enough epochs for a
  // stable tail fit; the gradient floor keeps distances above arithmetic noise.
  OptimizerConfig cfg;
  cfg.batch_size = 10;
  cfg.max_epochs = 100;
  cfg.grad_tol = 1e-10;
  cfg.seed = spec.seed;
  const double eta = c5::best_eta_for_first_seed / 3.0;
  const RunResult run = run_rsvrg(problem, cfg, Schedule::Fixed(eta), u0, opt.f_star);

  std::vector<double> dist_sq;
  for (const auto& p : run.epoch_points) {
    const double dist = log_map(opt.point, p).norm();
    if (dist * dist <= 1e-26) break;  // arithmetic noise floor
    dist_sq.push_back(dist * dist);
  }
  if (dist_sq.size() < 21) return "FAIL only " + std::to_string(dist_sq.size()) + " usable epochs";
  const RateFit fit = fit_linear_rate(dist_sq, 20);
  std::ostringstream os;
  os << (fit.contraction < 0.95 && fit.r_squared >= 0.9 ? "" : "FAIL ") << "contraction "
     << fmt(fit.contraction) << ", r^2 " << fmt(fit.r_squared) << " over last 20 of "
     << dist_sq.size() << " epochs (eta " << fmt(eta) << ")";
  return os.str();
}

static std::string criterion7() {
  SyntheticSpec spec;
  spec.kind = ProblemKind::mc;
  spec.n = 500;
  spec.d = 100;
  spec.r = 5;
  spec.oversampling = 5;
  spec.condition_number = 5;
  spec.seed = 1;
  const McInstance inst = gen_mc(spec);
  Rng rng(707);
  const GrassmannPoint u0 = GrassmannPoint::random(100, 5, rng);

  OptimizerConfig base;
  base.batch_size = 10;
  base.max_epochs = 60;
  base.grad_tol = 1e-8;
  base.seed = 1;

  const std::vector<double> etas = linspace_grid(0.01, 0.1, 10);
  const auto svrg = run_grid(inst.problem, u0, 0.0, Variant::rsvrg, etas,
                             [](double e) { return Schedule::Fixed(e); }, base);
  const auto sgd = run_grid(inst.problem, u0, 0.0, Variant::rsgd, etas,
                            [](double e) { return Schedule::Decay(e, 1e-2); }, base);
  const GridRun* best_svrg = best_by_final_loss(svrg);
  const GridRun* best_sgd = best_by_final_loss(sgd);
  if (!best_svrg || !best_sgd) return "FAIL empty grid";

  const double v_budget = best_svrg->result.trace.back().grad_evals_over_n;
  const double v_mse = best_svrg->result.trace.back().test_loss;
  double s_mse = std::numeric_limits<double>::quiet_NaN();
  for (const auto& rec : best_sgd->result.trace) {
    if (rec.grad_evals_over_n <= v_budget + 1e-9) s_mse = rec.test_loss;
  }
  if (std::isnan(s_mse)) s_mse = best_sgd->result.trace.back().test_loss;

  std::ostringstream os;
  os << (v_mse <= 1e-6 && v_mse < s_mse ? "" : "FAIL ") << "svrg test MSE " << fmt(v_mse) << " @"
     << fmt(v_budget) << " (eta " << fmt(best_svrg->eta) << "), sgd test MSE " << fmt(s_mse);
  return os.str();
}

static std::string criterion8() {
  const std::vector<double> etas = linspace_grid(1e-3, 1e-2, 10);
  int pass_count = 0;
  std::ostringstream os;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    SyntheticSpec spec;
    spec.kind = ProblemKind::pca;
    spec.n = 2000;
    spec.d = 20;
    spec.r = 5;
    spec.seed = seed;
    const PcaProblem problem = gen_pca(spec);
    Rng rng(9000 + seed);
    const GrassmannPoint u0 = GrassmannPoint::random(20, 5, rng);

    OptimizerConfig base;
    base.batch_size = 10;
    base.max_epochs = 1;  // the mark sits inside the first epoch
    base.grad_tol = 0.0;
    base.seed = seed;
    base.early_loss_marks = {3.0};

    const auto loss_at_mark = [&](Variant variant) {
      double best = std::numeric_limits<double>::infinity();
      auto runs = run_grid(problem, u0, std::numeric_limits<double>::quiet_NaN(), variant, etas,
                           [](double e) { return Schedule::Fixed(e); }, base);
      for (const auto& r : runs) {
        if (!r.failed && !r.result.early_losses.empty()) {
          best = std::min(best, r.result.early_losses.front().train_loss);
        }
      }
      return best;
    };

    const double plus = loss_at_mark(Variant::rsvrg_plus);
    const double plain = loss_at_mark(Variant::rsvrg);
    const bool ok = plus <= plain;
    if (ok) ++pass_count;
    os << " seed " << seed << (ok ? " ok" : " FAILED") << " (rsvrg+ " << fmt(plus) << " vs rsvrg "
       << fmt(plain) << ");";
  }
  return (pass_count >= 2 ? "" : std::string("FAIL ")) + std::to_string(pass_count) +
         "/3 seeds pass;" + os.str();
}

static std::string criterion9() {
  const fs::path dir_a = fs::temp_directory_path() / "grsvrg_acc_det_a";
  const fs::path dir_b = fs::temp_directory_path() / "grsvrg_acc_det_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  ExperimentConfig cfg = parse_config_text(R"(
problem = pca
n = 300
d = 12
r = 3
seed = 99
algorithm = rsvrg
algorithm = rsgd
algorithm = rsd
schedule_kind = fixed
schedule_kind = decay
eta0 = 2e-3
eta0 = 6e-3
lambda = 1e-2
batch_size = 10
max_epochs = 5
m_s = 600
grad_tol = 0
)",
                                           "acceptance-inline");
  cfg.out_dir = dir_a.string();
  const ExperimentResult first = run_experiment(cfg, 2);
  cfg.out_dir = dir_b.string();
  const ExperimentResult second = run_experiment(cfg, 1);
  if (first.failed_cells != 0 || second.failed_cells != 0) return "FAIL cells failed";

  std::size_t compared = 0;
  for (const auto& row : first.summary) {
    const auto read = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream os;
      os << in.rdbuf();
      return os.str();
    };
    const std::string a = read(dir_a / row.cell.trace_file);
    const std::string b = read(dir_b / row.cell.trace_file);
    if (a.empty() || a != b) {
      return "FAIL trace " + row.cell.trace_file + " differs between reruns";
    }
    ++compared;
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  return std::to_string(compared) + " trace files byte-identical across reruns";
}

int main() {
  std::printf("acceptance suite (grsvrg)\n");
  criterion(1, "manifold identities on 1000 random instances", 30.0, criterion1);
  criterion(2, "gradient oracles vs finite differences", 60.0, criterion2);
  criterion(3, "exact unbiasedness at live checkpoints", 0.0, criterion3);
  criterion(4, "variance reduction and second-moment bound", 0.0, criterion4);
  criterion(5, "pca ordering: R-SVRG vs R-SGD at desk scale", 600.0, criterion5);
  criterion(6, "local linear rate of the fixed-step tail", 0.0, criterion6);
  criterion(7, "matrix completion test error ordering", 600.0, criterion7);
  criterion(8, "cold-start: R-SVRG+ ahead at 3 passes", 0.0, criterion8);
  criterion(9, "byte-identical reruns", 0.0, criterion9);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures;
}
