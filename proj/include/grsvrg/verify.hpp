#pragma once

#include "grsvrg/manifold.hpp"
#include "grsvrg/optim.hpp"
#include "grsvrg/problems.hpp"

#include <string>
#include <vector>

namespace grsvrg {

/// Central finite difference of the cost along the geodesic through U with
/// direction xi: (cost(exp(U, xi, h)) - cost(exp(U, xi, -h))) / (2h).
/// The standard gradient oracle; h = 1e-5 in the checks.
double fd_directional_derivative(const Problem& problem, const GrassmannPoint& u,
                                 const TangentVector& xi, double h);

struct LipschitzEstimate {
  double beta_hat = 0.0;          // max over sampled pairs of the transport ratio
  long n_pairs = 0;
  double max_pair_distance = 0.0;
};

/// Empirical per-sample gradient Lipschitz constant: samples point pairs in a
/// geodesic ball around `center` and maximizes
///   || P_{w<-z} grad f_n(z) - grad f_n(w) || / dist(z, w)
/// over pairs (sample indices cycle round-robin). Deterministic under seed.
LipschitzEstimate estimate_beta(const Problem& problem, const GrassmannPoint& center,
                                double radius, long n_pairs, std::uint64_t seed);

/// Exact mean of the variance-reduced direction over all N singleton batches;
/// must reproduce grad f(u_cur).
TangentVector exact_xi_mean(const Problem& problem, const GrassmannPoint& u_cur,
                            const GrassmannPoint& u_tilde);

/// Exact E[||xi||^2] over all N singleton batches.
double exact_xi_second_moment(const Problem& problem, const GrassmannPoint& u_cur,
                              const GrassmannPoint& u_tilde);

/// Exact Var[xi] = E||xi||^2 - ||E xi||^2 over all N singleton batches.
double exact_xi_variance(const Problem& problem, const GrassmannPoint& u_cur,
                         const GrassmannPoint& u_tilde);

struct VarianceBoundReport {
  long n_checked = 0;
  long n_violations = 0;
  double max_ratio = 0.0;  // max over checkpoints of lhs / rhs
  std::vector<std::string> details;  // one line per violation
};

/// Second-moment bound monitor: at each recorded checkpoint compares the
/// exact E[||xi||^2] against
///   (safety * beta_hat)^2 * (14 dist(U, w*)^2 + 8 dist(U~, w*)^2),
/// where w* is a critical point of the full cost. Reports violations.
VarianceBoundReport check_variance_bound(const Problem& problem,
                                         const std::vector<Checkpoint>& checkpoints,
                                         const GrassmannPoint& w_star, double beta_hat,
                                         double safety = 1.1);

struct RateFit {
  double contraction = 1.0;  // exp(slope) of log(values) against the index
  double r_squared = 1.0;
  double slope = 0.0;
};

/// Least-squares fit of log(values) over the trailing `tail_window` entries;
/// for a squared-distance sequence the contraction estimates the per-epoch
/// factor of the local linear rate.
RateFit fit_linear_rate(const std::vector<double>& values, int tail_window);

/// Independent geodesic oracle: RK4 integration of U'' = -U (U'^T U') from
/// (U, xi) to time t, re-orthonormalizing between steps. Deliberately avoids
/// exp_map internals.
GrassmannPoint integrate_geodesic(const GrassmannPoint& base, const TangentVector& xi, double t,
                                  int n_steps);

}  // namespace grsvrg
