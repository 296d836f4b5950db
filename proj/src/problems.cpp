#include "grsvrg/problems.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace grsvrg {

Batch Problem::all_indices() const {
  Batch all(static_cast<std::size_t>(n_samples()));
  std::iota(all.begin(), all.end(), Index{0});
  return all;
}

void Problem::check_batch(const Batch& batch) const {
  if (batch.empty()) throw ContractViolation("Problem: empty batch");
  const Index n = n_samples();
  for (Index i : batch) {
    if (i < 0 || i >= n) {
      throw ContractViolation("Problem: batch index " + std::to_string(i) +
                              " out of range [0, " + std::to_string(n) + ")");
    }
  }
}

void Problem::check_point(const GrassmannPoint& u) const {
  if (u.dim() != ambient_dim() || u.rank() != subspace_rank()) {
    throw DimensionError("Problem: point is " + std::to_string(u.dim()) + "x" +
                         std::to_string(u.rank()) + ", problem wants " +
                         std::to_string(ambient_dim()) + "x" + std::to_string(subspace_rank()));
  }
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

PcaProblem::PcaProblem(Matrix data, int r) : data_(std::move(data)), rank_(r) {
  if (data_.cols() < 1) throw DimensionError("PcaProblem: no data columns");
  if (r < 1 || r >= data_.rows()) throw DimensionError("PcaProblem: need 1 <= r < d");
}

double PcaProblem::batch_cost(const GrassmannPoint& u, const Batch& batch) const {
  check_point(u);
  check_batch(batch);
  Matrix xb(data_.rows(), batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) xb.col(j) = data_.col(batch[j]);
  const Matrix resid = xb - u.mat() * (u.mat().transpose() * xb);
  return resid.squaredNorm() / static_cast<double>(batch.size());
}

TangentVector PcaProblem::stoch_grad(const GrassmannPoint& u, const Batch& batch) const {
  check_point(u);
  check_batch(batch);
  Matrix xb(data_.rows(), batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) xb.col(j) = data_.col(batch[j]);
  // Euclidean gradient of the maximization-equivalent form, then projected;
  // identical to the Riemannian gradient of the residual cost.
  const Matrix g = (-2.0 / static_cast<double>(batch.size())) * (xb * (xb.transpose() * u.mat()));
  return project_tangent(u, g);
}

PcaOptimum pca_optimum(const Matrix& data, int r) {
  const auto d = data.rows();
  const auto n = data.cols();
  if (r < 1 || r >= d) throw DimensionError("pca_optimum: need 1 <= r < d");
  const Matrix cov = (data * data.transpose()) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);  // eigenvalues ascending
  Matrix top(d, r);
  for (int j = 0; j < r; ++j) top.col(j) = eig.eigenvectors().col(d - 1 - j);
  const bool degenerate =
      std::abs(eig.eigenvalues()(d - r) - eig.eigenvalues()(d - r - 1)) < 1e-12;
  GrassmannPoint point = GrassmannPoint::orthonormalized(top);
  const double f_star = PcaProblem(data, r).cost(point);
  return {std::move(point), f_star, degenerate};
}

// ---------------------------------------------------------------------------
// Karcher mean cost
// ---------------------------------------------------------------------------

KarcherProblem::KarcherProblem(std::vector<GrassmannPoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw DimensionError("KarcherProblem: no points");
  for (const auto& p : points_) {
    if (!p.same_shape(points_.front())) throw DimensionError("KarcherProblem: mixed shapes");
  }
}

double KarcherProblem::batch_cost(const GrassmannPoint& u, const Batch& batch) const {
  check_point(u);
  check_batch(batch);
  double sum = 0.0;
  for (Index i : batch) {
    const double dist = distance(u, points_[static_cast<std::size_t>(i)]);
    sum += dist * dist;
  }
  return sum / (2.0 * static_cast<double>(batch.size()));
}

TangentVector KarcherProblem::stoch_grad(const GrassmannPoint& u, const Batch& batch) const {
  check_point(u);
  check_batch(batch);
  Matrix sum = Matrix::Zero(u.mat().rows(), u.mat().cols());
  for (Index i : batch) {
    try {
      sum -= log_map(u, points_[static_cast<std::size_t>(i)]).mat();
    } catch (const CutLocusError& e) {
      // A silent skip would bias the estimator; surface the sample index.
      throw CutLocusError("KarcherProblem: sample " + std::to_string(i) +
                              " on the cut locus of the iterate: " + e.what(),
                          e.sigma_min());
    }
  }
  return project_tangent(u, sum / static_cast<double>(batch.size()));
}

// ---------------------------------------------------------------------------
// Matrix completion
// ---------------------------------------------------------------------------

McProblem::McProblem(int d, int r, std::vector<std::vector<int>> train_rows,
                     std::vector<Vector> train_vals, std::vector<std::vector<int>> test_rows,
                     std::vector<Vector> test_vals, double ridge)
    : d_(d),
      r_(r),
      train_rows_(std::move(train_rows)),
      train_vals_(std::move(train_vals)),
      test_rows_(std::move(test_rows)),
      test_vals_(std::move(test_vals)),
      ridge_(ridge) {
  if (r_ < 1 || r_ >= d_) throw DimensionError("McProblem: need 1 <= r < d");
  const std::size_t n = train_rows_.size();
  if (train_vals_.size() != n || test_rows_.size() != n || test_vals_.size() != n || n == 0) {
    throw DimensionError("McProblem: column list sizes disagree");
  }
  if (ridge_ < 0.0) throw ContractViolation("McProblem: ridge must be >= 0");
  for (std::size_t c = 0; c < n; ++c) {
    if (static_cast<Eigen::Index>(train_rows_[c].size()) != train_vals_[c].size() ||
        static_cast<Eigen::Index>(test_rows_[c].size()) != test_vals_[c].size()) {
      throw DimensionError("McProblem: row/value length mismatch in column " + std::to_string(c));
    }
    for (int row : train_rows_[c]) {
      if (row < 0 || row >= d_) throw DimensionError("McProblem: train row index out of range");
      for (int trow : test_rows_[c]) {
        if (trow == row) {
          throw ContractViolation("McProblem: train and test sets overlap at (" +
                                  std::to_string(row) + ", " + std::to_string(c) + ")");
        }
      }
    }
    for (int row : test_rows_[c]) {
      if (row < 0 || row >= d_) throw DimensionError("McProblem: test row index out of range");
    }
    n_train_entries_ += static_cast<Index>(train_rows_[c].size());
    n_test_entries_ += static_cast<Index>(test_rows_[c].size());
  }
}

std::optional<Vector> McProblem::inner_solve(const GrassmannPoint& u, Index n) const {
  const auto& rows = train_rows_[static_cast<std::size_t>(n)];
  if (rows.empty()) return std::nullopt;
  const auto& vals = train_vals_[static_cast<std::size_t>(n)];

  Matrix u_omega(rows.size(), r_);
  for (std::size_t k = 0; k < rows.size(); ++k) u_omega.row(k) = u.mat().row(rows[k]);

  const Matrix gram =
      u_omega.transpose() * u_omega + ridge_ * Matrix::Identity(r_, r_);
  const Vector rhs = u_omega.transpose() * vals;
  return Vector(gram.ldlt().solve(rhs));
}

double McProblem::batch_cost(const GrassmannPoint& u, const Batch& batch) const {
  check_point(u);
  check_batch(batch);
  double sum = 0.0;
  for (Index n : batch) {
    const auto a = inner_solve(u, n);
    if (!a) continue;  // unobserved column: zero cost
    const auto& rows = train_rows_[static_cast<std::size_t>(n)];
    const auto& vals = train_vals_[static_cast<std::size_t>(n)];
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double resid = u.mat().row(rows[k]).dot(*a) - vals(static_cast<Eigen::Index>(k));
      sum += resid * resid;
    }
  }
  return sum / static_cast<double>(batch.size());
}

TangentVector McProblem::stoch_grad(const GrassmannPoint& u, const Batch& batch) const {
  check_point(u);
  check_batch(batch);
  Matrix g = Matrix::Zero(d_, r_);
  for (Index n : batch) {
    const auto a = inner_solve(u, n);
    if (!a) continue;  // unobserved column: zero gradient
    const auto& rows = train_rows_[static_cast<std::size_t>(n)];
    const auto& vals = train_vals_[static_cast<std::size_t>(n)];
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double resid = u.mat().row(rows[k]).dot(*a) - vals(static_cast<Eigen::Index>(k));
      g.row(rows[k]) += 2.0 * resid * a->transpose();
    }
  }
  return project_tangent(u, g / static_cast<double>(batch.size()));
}

std::optional<double> McProblem::test_cost(const GrassmannPoint& u) const {
  check_point(u);
  if (n_test_entries_ == 0) return std::nullopt;
  double sum = 0.0;
  for (std::size_t c = 0; c < test_rows_.size(); ++c) {
    if (test_rows_[c].empty()) continue;
    const auto a = inner_solve(u, static_cast<Index>(c));
    const Vector coef = a ? *a : Vector::Zero(r_);
    for (std::size_t k = 0; k < test_rows_[c].size(); ++k) {
      const double resid =
          u.mat().row(test_rows_[c][k]).dot(coef) - test_vals_[c](static_cast<Eigen::Index>(k));
      sum += resid * resid;
    }
  }
  return sum / static_cast<double>(n_test_entries_);
}

}  // namespace grsvrg
