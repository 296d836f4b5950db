#pragma once

#include "grsvrg/manifold.hpp"
#include "grsvrg/types.hpp"

#include <optional>
#include <vector>

namespace grsvrg {

/// A finite-sum cost f(U) = (1/N) sum_n f_n(U) on Gr(r, d). Implementations
/// expose the full cost/gradient and mini-batch stochastic gradients; a batch
/// of size B averages B per-sample terms (indices unique within a batch).
/// Problems are immutable after construction and safe to share across threads.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual Index n_samples() const = 0;
  virtual int ambient_dim() const = 0;
  virtual int subspace_rank() const = 0;

  virtual double batch_cost(const GrassmannPoint& u, const Batch& batch) const = 0;
  virtual TangentVector stoch_grad(const GrassmannPoint& u, const Batch& batch) const = 0;

  /// Held-out evaluation; problems without a test set return nullopt.
  virtual std::optional<double> test_cost(const GrassmannPoint&) const { return std::nullopt; }

  /// Full-sample cost/gradient. Same code path as the batched versions so the
  /// full-batch identity holds exactly.
  double cost(const GrassmannPoint& u) const { return batch_cost(u, all_indices()); }
  TangentVector full_grad(const GrassmannPoint& u) const { return stoch_grad(u, all_indices()); }

  Batch all_indices() const;

 protected:
  void check_batch(const Batch& batch) const;
  void check_point(const GrassmannPoint& u) const;
};

/// Subspace fitting: f_n(U) = ||x_n - U U^T x_n||^2 for data columns x_n.
/// The Riemannian gradient is the horizontal projection of -2 x_n x_n^T U.
class PcaProblem : public Problem {
 public:
  PcaProblem(Matrix data, int r);

  Index n_samples() const override { return data_.cols(); }
  int ambient_dim() const override { return static_cast<int>(data_.rows()); }
  int subspace_rank() const override { return rank_; }

  double batch_cost(const GrassmannPoint& u, const Batch& batch) const override;
  TangentVector stoch_grad(const GrassmannPoint& u, const Batch& batch) const override;

  const Matrix& data() const { return data_; }

 private:
  Matrix data_;  // d x N
  int rank_ = 0;
};

/// Mean of squared geodesic distances to fixed subspaces Q_n:
/// f_n(U) = (1/2) dist(U, Q_n)^2, grad f_n(U) = -Log_U(Q_n).
class KarcherProblem : public Problem {
 public:
  explicit KarcherProblem(std::vector<GrassmannPoint> points);

  Index n_samples() const override { return static_cast<Index>(points_.size()); }
  int ambient_dim() const override { return points_.front().dim(); }
  int subspace_rank() const override { return points_.front().rank(); }

  double batch_cost(const GrassmannPoint& u, const Batch& batch) const override;
  TangentVector stoch_grad(const GrassmannPoint& u, const Batch& batch) const override;

  const std::vector<GrassmannPoint>& points() const { return points_; }

 private:
  std::vector<GrassmannPoint> points_;
};

/// Low-rank matrix completion on the column-space factor: per column n with
/// observed rows Omega_n,
///   f_n(U) = || P_{Omega_n}(U a_n) - P_{Omega_n}(x_n) ||^2,
/// where a_n solves the ridge-regularized least squares restricted to the
/// observed rows. The gradient treats a_n as optimal and projects
/// 2 r_n a_n^T (r_n the masked residual).
class McProblem : public Problem {
 public:
  /// One entry (row, value) list per column for the train set Omega and the
  /// test set Gamma; the two must be disjoint per column.
  McProblem(int d, int r, std::vector<std::vector<int>> train_rows,
            std::vector<Vector> train_vals, std::vector<std::vector<int>> test_rows,
            std::vector<Vector> test_vals, double ridge = 1e-8);

  Index n_samples() const override { return static_cast<Index>(train_rows_.size()); }
  int ambient_dim() const override { return d_; }
  int subspace_rank() const override { return r_; }

  double batch_cost(const GrassmannPoint& u, const Batch& batch) const override;
  TangentVector stoch_grad(const GrassmannPoint& u, const Batch& batch) const override;

  /// Mean squared error per observed test entry, predictions from
  /// train-fitted coefficients.
  std::optional<double> test_cost(const GrassmannPoint& u) const override;

  /// Closed-form inner solve for column n:
  ///   a_n = argmin ||U_{Omega_n} a - x_{Omega_n}||^2 + ridge ||a||^2.
  /// Returns nullopt for a column with no observed entries (the column then
  /// contributes zero cost and zero gradient).
  std::optional<Vector> inner_solve(const GrassmannPoint& u, Index n) const;

  double ridge() const { return ridge_; }
  Index train_entry_count() const { return n_train_entries_; }
  Index test_entry_count() const { return n_test_entries_; }

 private:
  int d_;
  int r_;
  std::vector<std::vector<int>> train_rows_;
  std::vector<Vector> train_vals_;
  std::vector<std::vector<int>> test_rows_;
  std::vector<Vector> test_vals_;
  double ridge_;
  Index n_train_entries_ = 0;
  Index n_test_entries_ = 0;
};

struct PcaOptimum {
  GrassmannPoint point;  // top-r eigenvectors of X X^T / N
  double f_star;         // cost at the optimum (residual form)
  bool degenerate;       // eigenvalues r and r+1 within 1e-12: subspace not unique
};

/// Exact PCA reference by dense symmetric eigendecomposition; used for the
/// optimality-gap metric.
PcaOptimum pca_optimum(const Matrix& data, int r);

}  // namespace grsvrg
