#pragma once

#include "grsvrg/manifold.hpp"
#include "grsvrg/problems.hpp"
#include "grsvrg/types.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace grsvrg {

enum class ScheduleKind { fixed, decay, hybrid };

/// Step-size sequence indexed by the cumulative inner-iteration count k:
///   fixed   eta(k) = eta0
///   decay   eta(k) = eta0 (1 + eta0 lambda floor(k / m_s))^{-1}
///   hybrid  decay for the first s_threshold epochs, then frozen at the value
///           the decay reaches there.
struct Schedule {
  ScheduleKind kind = ScheduleKind::fixed;
  double eta0 = 0.0;
  double lambda = 0.0;
  int s_threshold = 5;

  double eta(long k, long m_s) const;
  std::string name() const;  // filesystem-safe identifier

  static Schedule Fixed(double eta0);
  static Schedule Decay(double eta0, double lambda);
  static Schedule Hybrid(double eta0, double lambda, int s_threshold = 5);
};

enum class Averaging { option_I_karcher, option_I_random_t, option_II_last };
enum class Variant { rsvrg, rsvrg_plus, rsgd, rsd };

std::string to_string(Variant v);
std::string to_string(Averaging a);

struct OptimizerConfig {
  long m_s = 0;           // inner-loop length; 0 means 5 N
  int batch_size = 10;
  int max_epochs = 100;
  double grad_tol = 1e-8;  // stopping rule on the epoch full-gradient norm
  Averaging averaging = Averaging::option_I_random_t;
  std::uint64_t seed = 0;
  Variant variant = Variant::rsvrg;

  // Diagnostics. checkpoint_stride > 0 records the (iterate, snapshot) pair
  // every that many inner iterations, up to max_checkpoints. early_loss_marks
  // are grad-eval/N positions at which the train loss is sampled mid-epoch.
  int checkpoint_stride = 0;
  int max_checkpoints = 256;
  std::vector<double> early_loss_marks;
};

/// One row per epoch. grad_evals counts per-sample gradient evaluations
/// consumed by the algorithm (R-SD line-search cost evaluations count as N/2
/// gradient-equivalents, hence the double); diagnostic evaluations used only
/// for these metrics are excluded.
struct TraceRecord {
  int epoch = 0;
  double grad_evals = 0.0;
  double grad_evals_over_n = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;      // NaN when the problem has no test set
  double optimality_gap = 0.0; // NaN when f* is unknown
  double full_grad_norm = 0.0;
  double wall_time = 0.0;      // seconds since run start
};

/// Variance-reduction state captured just before an inner update: the current
/// iterate U_{t-1} of epoch `epoch` and the snapshot the epoch started from.
struct Checkpoint {
  int epoch = 0;
  long iteration = 0;  // t, 1-based within the epoch
  GrassmannPoint point;
  GrassmannPoint snapshot;
};

struct EarlyLossRecord {
  double mark = 0.0;             // requested grad-evals/N position
  double grad_evals_over_n = 0.0;  // position actually sampled (first >= mark)
  double train_loss = 0.0;
};

struct RunResult {
  GrassmannPoint final_point;
  std::vector<TraceRecord> trace;
  bool converged = false;           // stopped by grad_tol rather than max_epochs
  double counted_grad_evals = 0.0;
  double diagnostic_grad_evals = 0.0;
  std::vector<GrassmannPoint> epoch_points;  // snapshot after each epoch
  std::vector<Checkpoint> checkpoints;
  std::vector<EarlyLossRecord> early_losses;
};

/// The variance-reduced direction at U_cur given the epoch snapshot U_tilde
/// and the cached full gradient at the snapshot:
///   xi = grad f_B(U_cur) - P(grad f_B(U_tilde)) + P(grad f(U_tilde)),
/// with P the parallel translation from U_tilde to U_cur along their
/// connecting geodesic. Unbiased: averaging over all singleton batches
/// reproduces grad f(U_cur).
TangentVector modified_stochastic_gradient(const GrassmannPoint& u_cur,
                                           const GrassmannPoint& u_tilde, const Batch& batch,
                                           const Problem& problem,
                                           const TangentVector& cached_full_grad);

/// Double-loop variance-reduced run (variant rsvrg or rsvrg_plus). Each epoch
/// costs N + 2 * batch_size * m_s counted gradient evaluations; rsvrg_plus
/// replaces epoch 1 with plain stochastic steps (batch_size * m_s, no full
/// gradient). Stops when the epoch full-gradient norm falls below grad_tol or
/// after max_epochs. f_star, when finite, feeds the optimality-gap column.
RunResult run_rsvrg(const Problem& problem, const OptimizerConfig& config,
                    const Schedule& schedule, const GrassmannPoint& u0,
                    double f_star = std::numeric_limits<double>::quiet_NaN());

/// Plain Riemannian SGD with the same epoch structure and trace metrics; the
/// per-epoch full gradient is diagnostic only (excluded from grad_evals).
RunResult run_rsgd(const Problem& problem, const OptimizerConfig& config,
                   const Schedule& schedule, const GrassmannPoint& u0,
                   double f_star = std::numeric_limits<double>::quiet_NaN());

/// Riemannian steepest descent with Armijo backtracking (initial step 1,
/// contraction 0.5, sufficient decrease 1e-4, at most 25 halvings). Each
/// outer iteration counts N evaluations for the gradient plus N/2 per
/// line-search cost trial.
RunResult run_rsd(const Problem& problem, const OptimizerConfig& config,
                  const GrassmannPoint& u0,
                  double f_star = std::numeric_limits<double>::quiet_NaN());

/// Armijo step selection on a ray: finds step with
/// phi(step) <= phi(0) + c1 * step * slope. Throws LineSearchError after
/// max_halvings failures. `trials`, when non-null, receives the number of
/// phi evaluations.
double armijo_backtrack(const std::function<double(double)>& phi, double phi0, double slope,
                        double init_step = 1.0, double contraction = 0.5, double c1 = 1e-4,
                        int max_halvings = 25, int* trials = nullptr);

}  // namespace grsvrg
