#include "grsvrg/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>

namespace grsvrg {

namespace {

double now_seconds(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

Schedule Schedule::Fixed(double eta0) {
  if (!(eta0 > 0)) throw ContractViolation("Schedule: eta0 must be positive");
  return Schedule{ScheduleKind::fixed, eta0, 0.0, 0};
}

Schedule Schedule::Decay(double eta0, double lambda) {
  if (!(eta0 > 0) || lambda < 0) throw ContractViolation("Schedule: need eta0 > 0, lambda >= 0");
  return Schedule{ScheduleKind::decay, eta0, lambda, 0};
}

Schedule Schedule::Hybrid(double eta0, double lambda, int s_threshold) {
  if (!(eta0 > 0) || lambda < 0 || s_threshold < 1) {
    throw ContractViolation("Schedule: need eta0 > 0, lambda >= 0, s_threshold >= 1");
  }
  return Schedule{ScheduleKind::hybrid, eta0, lambda, s_threshold};
}

double Schedule::eta(long k, long m_s) const {
  switch (kind) {
    case ScheduleKind::fixed:
      return eta0;
    case ScheduleKind::decay:
      return eta0 / (1.0 + eta0 * lambda * static_cast<double>(k / m_s));
    case ScheduleKind::hybrid: {
      const long epoch_index = std::min(k / m_s, static_cast<long>(s_threshold) - 1);
      return eta0 / (1.0 + eta0 * lambda * static_cast<double>(epoch_index));
    }
  }
  return eta0;
}

std::string Schedule::name() const {
  switch (kind) {
    case ScheduleKind::fixed:
      return "fixed_eta" + format_g(eta0);
    case ScheduleKind::decay:
      return "decay_eta" + format_g(eta0) + "_lam" + format_g(lambda);
    case ScheduleKind::hybrid:
      return "hybrid_eta" + format_g(eta0) + "_lam" + format_g(lambda) + "_sth" +
             std::to_string(s_threshold);
  }
  return "schedule";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::rsvrg: return "rsvrg";
    case Variant::rsvrg_plus: return "rsvrg_plus";
    case Variant::rsgd: return "rsgd";
    case Variant::rsd: return "rsd";
  }
  return "unknown";
}

std::string to_string(Averaging a) {
  switch (a) {
    case Averaging::option_I_karcher: return "option_I_karcher";
    case Averaging::option_I_random_t: return "option_I_random_t";
    case Averaging::option_II_last: return "option_II_last";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Modified stochastic gradient (the variance-reduced direction)
// ---------------------------------------------------------------------------

TangentVector modified_stochastic_gradient(const GrassmannPoint& u_cur,
                                           const GrassmannPoint& u_tilde, const Batch& batch,
                                           const Problem& problem,
                                           const TangentVector& cached_full_grad) {
  const TangentVector g_cur = problem.stoch_grad(u_cur, batch);
  const TangentVector g_snap = problem.stoch_grad(u_tilde, batch);
  const GeodesicTransporter transport(u_tilde, u_cur);
  return g_cur - transport(g_snap) + transport(cached_full_grad);
}

// ---------------------------------------------------------------------------
// Shared run machinery
// ---------------------------------------------------------------------------

namespace {

struct EvalCounter {
  double counted = 0.0;
  double diagnostic = 0.0;
};

class TraceBuilder {
 public:
  TraceBuilder(const Problem& problem, double f_star,
               std::chrono::steady_clock::time_point start)
      : problem_(problem), f_star_(f_star), start_(start) {}

  // Evaluates the per-epoch metrics at `u` and returns the diagnostic full
  // gradient so callers can reuse it (stopping rule, next epoch).
  TangentVector append(RunResult& result, int epoch, const EvalCounter& evals,
                       const GrassmannPoint& u, double last_eta) const {
    const double n = static_cast<double>(problem_.n_samples());
    const double train_loss = problem_.cost(u);
    if (!std::isfinite(train_loss)) {
      throw DivergenceError("optimizer diverged: non-finite cost at epoch " +
                                std::to_string(epoch) + " (eta = " + format_g(last_eta) + ")",
                            epoch, last_eta);
    }
    TangentVector g = problem_.full_grad(u);
    TraceRecord rec;
    rec.epoch = epoch;
    rec.grad_evals = evals.counted;
    rec.grad_evals_over_n = evals.counted / n;
    rec.train_loss = train_loss;
    const auto test = problem_.test_cost(u);
    rec.test_loss = test ? *test : std::numeric_limits<double>::quiet_NaN();
    rec.optimality_gap = std::isfinite(f_star_) ? rec.train_loss - f_star_
                                                : std::numeric_limits<double>::quiet_NaN();
    rec.full_grad_norm = g.norm();
    rec.wall_time = now_seconds(start_);
    result.trace.push_back(rec);
    result.epoch_points.push_back(u);
    return g;
  }

 private:
  const Problem& problem_;
  double f_star_;
  std::chrono::steady_clock::time_point start_;
};

// Records the train loss the first time the counted budget crosses each mark.
class EarlyLossMarks {
 public:
  EarlyLossMarks(const Problem& problem, std::vector<double> marks)
      : problem_(problem), marks_(std::move(marks)) {
    std::sort(marks_.begin(), marks_.end());
  }

  void poll(RunResult& result, const EvalCounter& evals, const GrassmannPoint& u) {
    const double n = static_cast<double>(problem_.n_samples());
    while (next_ < marks_.size() && evals.counted / n >= marks_[next_]) {
      result.early_losses.push_back({marks_[next_], evals.counted / n, problem_.cost(u)});
      ++next_;
    }
  }

  bool done() const { return next_ >= marks_.size(); }

 private:
  const Problem& problem_;
  std::vector<double> marks_;
  std::size_t next_ = 0;
};

RunResult run_stochastic(const Problem& problem, const OptimizerConfig& config,
                         const Schedule& schedule, const GrassmannPoint& u0, double f_star) {
  const Index n = problem.n_samples();
  const long m_s = config.m_s > 0 ? config.m_s : 5 * static_cast<long>(n);
  const int batch_size = config.batch_size;
  if (m_s < 1) throw ContractViolation("OptimizerConfig: m_s must be >= 1");
  if (batch_size < 1 || batch_size > n) {
    throw ContractViolation("OptimizerConfig: batch_size must lie in [1, N]");
  }
  const bool variance_reduced =
      config.variant == Variant::rsvrg || config.variant == Variant::rsvrg_plus;

  const auto start = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  TraceBuilder tracer(problem, f_star, start);
  EarlyLossMarks marks(problem, config.early_loss_marks);

  RunResult result{u0, {}, false, 0.0, 0.0, {}, {}, {}};
  EvalCounter evals;
  GrassmannPoint u_tilde = u0;
  std::optional<TangentVector> reusable_full_grad;  // diagnostic from last epoch
  long k = 0;  // cumulative inner iterations, drives the schedule

  const bool need_iterate_store = variance_reduced &&
                                  (config.averaging == Averaging::option_I_karcher);

  for (int s = 1; s <= config.max_epochs; ++s) {
    const bool warmup_sgd_epoch = (config.variant == Variant::rsvrg_plus && s == 1);
    const bool vr_epoch = variance_reduced && !warmup_sgd_epoch;

    std::optional<TangentVector> full_grad_snapshot;
    if (vr_epoch) {
      if (reusable_full_grad) {
        full_grad_snapshot = std::move(reusable_full_grad);
        reusable_full_grad.reset();
      } else {
        full_grad_snapshot = problem.full_grad(u_tilde);
      }
      evals.counted += static_cast<double>(n);
      marks.poll(result, evals, u_tilde);
    }

    GrassmannPoint u = u_tilde;
    std::vector<GrassmannPoint> iterates;
    if (need_iterate_store) iterates.reserve(static_cast<std::size_t>(m_s));
    std::size_t random_t = 0;
    GrassmannPoint random_iterate = u;
    if (variance_reduced && config.averaging == Averaging::option_I_random_t) {
      random_t = static_cast<std::size_t>(rng.uniform_below(m_s)) + 1;  // t in {1..m_s}
    }
    double last_eta = schedule.eta(k, m_s);

    for (long t = 1; t <= m_s; ++t) {
      const double eta = schedule.eta(k, m_s);
      last_eta = eta;
      ++k;
      const Batch batch = rng.sample_without_replacement(n, batch_size);

      TangentVector xi = TangentVector::zero(u);
      try {
        if (vr_epoch) {
          if (config.checkpoint_stride > 0 && (k - 1) % config.checkpoint_stride == 0 &&
              result.checkpoints.size() < static_cast<std::size_t>(config.max_checkpoints)) {
            result.checkpoints.push_back({s, t, u, u_tilde});
          }
          xi = modified_stochastic_gradient(u, u_tilde, batch, problem, *full_grad_snapshot);
          evals.counted += 2.0 * batch_size;
        } else {
          xi = problem.stoch_grad(u, batch);
          evals.counted += static_cast<double>(batch_size);
        }
      } catch (const CutLocusError& e) {
        throw CutLocusError("run aborted at epoch " + std::to_string(s) + ", inner iteration " +
                                std::to_string(t) + ": " + e.what(),
                            e.sigma_min());
      }
      if (!xi.mat().allFinite()) {
        throw DivergenceError("optimizer diverged: non-finite direction at epoch " +
                                  std::to_string(s) + " (eta = " + format_g(eta) + ")",
                              s, eta);
      }

      u = exp_map(u, xi, -eta);
      if (need_iterate_store) iterates.push_back(u);
      if (variance_reduced && config.averaging == Averaging::option_I_random_t &&
          static_cast<std::size_t>(t) == random_t) {
        random_iterate = u;
      }
      if (!marks.done()) marks.poll(result, evals, u);
    }

    if (variance_reduced) {
      switch (config.averaging) {
        case Averaging::option_II_last:
          u_tilde = u;
          break;
        case Averaging::option_I_random_t:
          u_tilde = random_iterate;
          break;
        case Averaging::option_I_karcher:
          u_tilde = karcher_mean(iterates).point;
          break;
      }
    } else {
      u_tilde = u;  // plain SGD: epochs are just windows of m_s steps
    }

    TangentVector g_diag = tracer.append(result, s, evals, u_tilde, last_eta);
    evals.diagnostic += static_cast<double>(n);
    if (vr_epoch || (config.variant == Variant::rsvrg_plus && s == 1)) {
      // The same point starts the next epoch; reuse its gradient there.
      if (variance_reduced) reusable_full_grad = g_diag;
    }
    if (result.trace.back().full_grad_norm <= config.grad_tol) {
      result.converged = true;
      result.final_point = u_tilde;
      break;
    }
    result.final_point = u_tilde;
  }

  result.counted_grad_evals = evals.counted;
  result.diagnostic_grad_evals = evals.diagnostic;
  return result;
}

}  // namespace

RunResult run_rsvrg(const Problem& problem, const OptimizerConfig& config,
                    const Schedule& schedule, const GrassmannPoint& u0, double f_star) {
  if (config.variant != Variant::rsvrg && config.variant != Variant::rsvrg_plus) {
    throw ContractViolation("run_rsvrg: config.variant must be rsvrg or rsvrg_plus");
  }
  return run_stochastic(problem, config, schedule, u0, f_star);
}

RunResult run_rsgd(const Problem& problem, const OptimizerConfig& config,
                   const Schedule& schedule, const GrassmannPoint& u0, double f_star) {
  OptimizerConfig cfg = config;
  cfg.variant = Variant::rsgd;
  return run_stochastic(problem, cfg, schedule, u0, f_star);
}

// ---------------------------------------------------------------------------
// Riemannian steepest descent with backtracking
// ---------------------------------------------------------------------------

double armijo_backtrack(const std::function<double(double)>& phi, double phi0, double slope,
                        double init_step, double contraction, double c1, int max_halvings,
                        int* trials) {
  double step = init_step;
  int used = 0;
  for (int j = 0; j <= max_halvings; ++j) {
    ++used;
    const double value = phi(step);
    if (value <= phi0 + c1 * step * slope) {
      if (trials) *trials = used;
      return step;
    }
    step *= contraction;
  }
  if (trials) *trials = used;
  throw LineSearchError("armijo_backtrack: no sufficient decrease after " +
                        std::to_string(max_halvings) + " halvings");
}

RunResult run_rsd(const Problem& problem, const OptimizerConfig& config,
                  const GrassmannPoint& u0, double f_star) {
  const Index n = problem.n_samples();
  const auto start = std::chrono::steady_clock::now();
  TraceBuilder tracer(problem, f_star, start);

  RunResult result{u0, {}, false, 0.0, 0.0, {}, {}, {}};
  EvalCounter evals;
  GrassmannPoint u = u0;
  std::optional<TangentVector> reusable_grad;

  for (int s = 1; s <= config.max_epochs; ++s) {
    TangentVector g = reusable_grad ? *std::move(reusable_grad) : problem.full_grad(u);
    reusable_grad.reset();
    evals.counted += static_cast<double>(n);
    const double gnorm2 = inner(g, g);
    if (std::sqrt(gnorm2) <= config.grad_tol) {
      result.converged = true;
      break;
    }

    const double f0 = problem.cost(u);
    int trials = 0;
    const auto phi = [&](double step) { return problem.cost(exp_map(u, g, -step)); };
    const double step = armijo_backtrack(phi, f0, -gnorm2, 1.0, 0.5, 1e-4, 25, &trials);
    // Each trial evaluates the cost over all N samples: N/2 grad-equivalents.
    evals.counted += static_cast<double>(trials) * static_cast<double>(n) / 2.0;

    u = exp_map(u, g, -step);
    TangentVector g_diag = tracer.append(result, s, evals, u, step);
    evals.diagnostic += static_cast<double>(n);
    reusable_grad = std::move(g_diag);
    result.final_point = u;
    if (result.trace.back().full_grad_norm <= config.grad_tol) {
      result.converged = true;
      break;
    }
  }

  result.counted_grad_evals = evals.counted;
  result.diagnostic_grad_evals = evals.diagnostic;
  return result;
}

}  // namespace grsvrg
