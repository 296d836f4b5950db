#include "grsvrg/verify.hpp"

#include <cmath>
#include <sstream>

namespace grsvrg {

double fd_directional_derivative(const Problem& problem, const GrassmannPoint& u,
                                 const TangentVector& xi, double h) {
  if (!(h > 0)) throw ContractViolation("fd_directional_derivative: h must be positive");
  const double forward = problem.cost(exp_map(u, xi, h));
  const double backward = problem.cost(exp_map(u, xi, -h));
  return (forward - backward) / (2.0 * h);
}

LipschitzEstimate estimate_beta(const Problem& problem, const GrassmannPoint& center,
                                double radius, long n_pairs, std::uint64_t seed) {
  if (n_pairs <= 0) throw ContractViolation("estimate_beta: n_pairs must be positive");
  if (!(radius > 0)) throw ContractViolation("estimate_beta: radius must be positive");

  Rng rng(seed);
  const Index n = problem.n_samples();
  LipschitzEstimate est;
  est.n_pairs = n_pairs;

  const auto random_in_ball = [&]() {
    TangentVector dir = project_tangent(center, rng.gaussian(center.dim(), center.rank()));
    const double scale = rng.uniform01() * radius / std::max(dir.norm(), 1e-300);
    return exp_map(center, dir, scale);
  };

  for (long p = 0; p < n_pairs; ++p) {
    const GrassmannPoint z = random_in_ball();
    const GrassmannPoint w = random_in_ball();
    const double dist = distance(z, w);
    const Batch sample{static_cast<Index>(p % n)};
    if (dist < 1e-12) continue;
    const TangentVector gz = problem.stoch_grad(z, sample);
    const TangentVector gw = problem.stoch_grad(w, sample);
    const GeodesicTransporter move_to_w(z, w);
    const double ratio = (move_to_w(gz) - gw).norm() / dist;
    est.beta_hat = std::max(est.beta_hat, ratio);
    est.max_pair_distance = std::max(est.max_pair_distance, dist);
  }
  return est;
}

TangentVector exact_xi_mean(const Problem& problem, const GrassmannPoint& u_cur,
                            const GrassmannPoint& u_tilde) {
  const TangentVector full = problem.full_grad(u_tilde);
  const Index n = problem.n_samples();
  Matrix sum = Matrix::Zero(u_cur.mat().rows(), u_cur.mat().cols());
  for (Index i = 0; i < n; ++i) {
    sum += modified_stochastic_gradient(u_cur, u_tilde, Batch{i}, problem, full).mat();
  }
  return project_tangent(u_cur, sum / static_cast<double>(n));
}

double exact_xi_second_moment(const Problem& problem, const GrassmannPoint& u_cur,
                              const GrassmannPoint& u_tilde) {
  const TangentVector full = problem.full_grad(u_tilde);
  const Index n = problem.n_samples();
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const TangentVector xi =
        modified_stochastic_gradient(u_cur, u_tilde, Batch{i}, problem, full);
    sum += inner(xi, xi);
  }
  return sum / static_cast<double>(n);
}

double exact_xi_variance(const Problem& problem, const GrassmannPoint& u_cur,
                         const GrassmannPoint& u_tilde) {
  const TangentVector mean = exact_xi_mean(problem, u_cur, u_tilde);
  // Cancellation can leave a tiny negative remainder; the variance is >= 0.
  return std::max(0.0, exact_xi_second_moment(problem, u_cur, u_tilde) - inner(mean, mean));
}

VarianceBoundReport check_variance_bound(const Problem& problem,
                                         const std::vector<Checkpoint>& checkpoints,
                                         const GrassmannPoint& w_star, double beta_hat,
                                         double safety) {
  VarianceBoundReport report;
  const double beta = safety * beta_hat;
  for (const Checkpoint& cp : checkpoints) {
    const double lhs = exact_xi_second_moment(problem, cp.point, cp.snapshot);
    const double d_cur = distance(cp.point, w_star);
    const double d_snap = distance(cp.snapshot, w_star);
    const double rhs = beta * beta * (14.0 * d_cur * d_cur + 8.0 * d_snap * d_snap);
    ++report.n_checked;
    if (rhs <= 0.0) {
      // Both distances zero: the direction must vanish too.
      if (lhs > 1e-20) {
        ++report.n_violations;
        report.details.push_back("epoch " + std::to_string(cp.epoch) + " t " +
                                 std::to_string(cp.iteration) + ": E||xi||^2 = " +
                                 std::to_string(lhs) + " with zero bound");
      }
      continue;
    }
    report.max_ratio = std::max(report.max_ratio, lhs / rhs);
    if (lhs > rhs) {
      ++report.n_violations;
      std::ostringstream os;
      os << "epoch " << cp.epoch << " t " << cp.iteration << ": E||xi||^2 = " << lhs
         << " exceeds bound " << rhs;
      report.details.push_back(os.str());
    }
  }
  return report;
}

RateFit fit_linear_rate(const std::vector<double>& values, int tail_window) {
  if (tail_window < 2) throw ContractViolation("fit_linear_rate: tail_window must be >= 2");
  if (values.size() < 2) throw ContractViolation("fit_linear_rate: need at least two values");
  const std::size_t m = std::min<std::size_t>(values.size(), static_cast<std::size_t>(tail_window));
  const std::size_t offset = values.size() - m;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double x = static_cast<double>(j);
    const double y = std::log(std::max(values[offset + j], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dm = static_cast<double>(m);
  const double denom = dm * sxx - sx * sx;
  const double slope = (dm * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / dm;

  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / dm;
  for (std::size_t j = 0; j < m; ++j) {
    const double x = static_cast<double>(j);
    const double y = std::log(std::max(values[offset + j], 1e-300));
    const double fit = intercept + slope * x;
    ss_res += (y - fit) * (y - fit);
    ss_tot += (y - ybar) * (y - ybar);
  }
  RateFit out;
  out.slope = slope;
  out.contraction = std::exp(slope);
  out.r_squared = ss_tot < 1e-30 ? 1.0 : 1.0 - ss_res / ss_tot;
  return out;
}

GrassmannPoint integrate_geodesic(const GrassmannPoint& base, const TangentVector& xi, double t,
                                  int n_steps) {
  if (n_steps < 1) throw ContractViolation("integrate_geodesic: n_steps must be >= 1");
  const double h = t / static_cast<double>(n_steps);

  Matrix u = base.mat();
  Matrix v = xi.mat();
  const auto accel = [](const Matrix& pu, const Matrix& pv) -> Matrix {
    return -pu * (pv.transpose() * pv);
  };

  for (int step = 0; step < n_steps; ++step) {
    const Matrix k1_u = v;
    const Matrix k1_v = accel(u, v);
    const Matrix k2_u = v + 0.5 * h * k1_v;
    const Matrix k2_v = accel(u + 0.5 * h * k1_u, v + 0.5 * h * k1_v);
    const Matrix k3_u = v + 0.5 * h * k2_v;
    const Matrix k3_v = accel(u + 0.5 * h * k2_u, v + 0.5 * h * k2_v);
    const Matrix k4_u = v + h * k3_v;
    const Matrix k4_v = accel(u + h * k3_u, v + h * k3_v);
    u += (h / 6.0) * (k1_u + 2.0 * k2_u + 2.0 * k3_u + k4_u);
    v += (h / 6.0) * (k1_v + 2.0 * k2_v + 2.0 * k3_v + k4_v);
    // Project back: orthonormal point, horizontal velocity.
    u = detail::qr_orthonormalize(u);
    v -= u * (u.transpose() * v);
  }
  return GrassmannPoint(std::move(u));
}

}  // namespace grsvrg
