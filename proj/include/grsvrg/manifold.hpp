#pragma once

#include "grsvrg/types.hpp"

#include <span>

namespace grsvrg {

// Tolerances shared by the geometric invariants.
inline constexpr double kOrthoTol = 1e-10;      // ||U^T U - I||_F on points
inline constexpr double kHorizTol = 1e-10;      // ||U^T xi||_F on tangents
inline constexpr double kQrDriftTol = 1e-12;    // re-orthonormalize beyond this
inline constexpr double kCutLocusTol = 1e-10;   // sigma_min(U^T Z) below this is cut locus

/// A point on Gr(r, d): an r-dimensional subspace of R^d represented by a
/// d x r matrix with orthonormal columns. Representatives related by a right
/// orthogonal factor describe the same subspace. Immutable once constructed.
class GrassmannPoint {
 public:
  /// Wraps a matrix that must already have orthonormal columns
  /// (||U^T U - I||_F <= 1e-10) with 1 <= r < d.
  explicit GrassmannPoint(Matrix mat);

  /// Orthonormalizes an arbitrary full-rank d x r matrix via thin QR
  /// (R-diagonal signs fixed positive) and wraps the result.
  static GrassmannPoint orthonormalized(const Matrix& mat);

  /// Uniformly random subspace: QR of an i.i.d. Gaussian matrix.
  static GrassmannPoint random(int d, int r, Rng& rng);

  const Matrix& mat() const { return mat_; }
  int dim() const { return static_cast<int>(mat_.rows()); }
  int rank() const { return static_cast<int>(mat_.cols()); }

  bool same_shape(const GrassmannPoint& other) const {
    return mat_.rows() == other.mat_.rows() && mat_.cols() == other.mat_.cols();
  }
  /// Representative-level equality (same matrix, not just same subspace).
  bool same_representative(const GrassmannPoint& other) const {
    return same_shape(other) && mat_ == other.mat_;
  }

 private:
  Matrix mat_;
};

/// A horizontal tangent vector at a base point: a d x r matrix with
/// U^T xi = 0. Carries its base point; mixing tangent spaces is an error.
class TangentVector {
 public:
  /// mat must satisfy ||base^T mat||_F <= 1e-10.
  TangentVector(GrassmannPoint base, Matrix mat);

  static TangentVector zero(const GrassmannPoint& base);

  const Matrix& mat() const { return mat_; }
  const GrassmannPoint& base() const { return base_; }

  double norm() const { return mat_.norm(); }

  TangentVector operator+(const TangentVector& other) const;
  TangentVector operator-(const TangentVector& other) const;
  TangentVector operator*(double s) const { return TangentVector(base_, mat_ * s); }
  TangentVector operator-() const { return TangentVector(base_, -mat_); }

 private:
  GrassmannPoint base_;
  Matrix mat_;
};

inline TangentVector operator*(double s, const TangentVector& v) { return v * s; }

/// Canonical trace inner product <a, b> = tr(a^T b); bases must match.
double inner(const TangentVector& a, const TangentVector& b);

/// Endpoint U(t) of the geodesic from `base` with initial velocity `xi`:
///   U(t) = U V cos(t S) V^T + W sin(t S) V^T,   xi = W S V^T (thin SVD).
/// The result is QR-corrected if orthonormality drift exceeds 1e-12.
GrassmannPoint exp_map(const GrassmannPoint& base, const TangentVector& xi, double t = 1.0);

/// Inverse of exp_map: the tangent vector at `base` pointing to `target`,
///   xi = W arctan(S) V^T,  W S V^T = svd((Z - U U^T Z)(U^T Z)^{-1}).
/// Throws CutLocusError when sigma_min(U^T Z) < 1e-10 (a principal angle at
/// pi/2), reporting the offending singular value.
TangentVector log_map(const GrassmannPoint& base, const GrassmannPoint& target);

/// Parallel translation of `zeta` along the geodesic with initial velocity
/// `xi`, evaluated at t = 1:
///   zeta(1) = ( -U V sin(S) W^T + W cos(S) W^T + (I - W W^T) ) zeta.
/// The result lives at exp_map(base, xi, 1) and preserves inner products.
TangentVector parallel_transport(const TangentVector& zeta, const GrassmannPoint& base,
                                 const TangentVector& xi);

/// Geodesic distance sqrt(sum_i theta_i^2), theta_i = arccos(sigma_i) with
/// sigma_i the singular values of a^T b clamped to [0, 1]. Never errors.
double distance(const GrassmannPoint& a, const GrassmannPoint& b);

/// Horizontal projection (I - U U^T) G of an ambient d x r matrix;
/// idempotent, used to turn Euclidean gradients into Riemannian ones.
TangentVector project_tangent(const GrassmannPoint& base, const Matrix& ambient);

struct KarcherResult {
  GrassmannPoint point;
  bool converged;
  int iterations;
  double grad_norm;  // mean-log norm at `point`
};

/// Riemannian gradient descent for the Karcher mean of `points`: unit-step
/// updates U <- exp_map(U, mean_i log_map(U, Q_i), 1) from points[0] until
/// the mean-log norm falls below `tol` or `max_iter` is hit. On
/// non-convergence returns the best iterate with converged = false.
KarcherResult karcher_mean(std::span<const GrassmannPoint> points, double tol = 1e-10,
                           int max_iter = 100);

/// Reusable parallel translation along the geodesic from `from` to `to`
/// (direction recovered by log_map). Factors the translation operator once
/// so several vectors can be moved between the same pair of tangent spaces.
class GeodesicTransporter {
 public:
  GeodesicTransporter(const GrassmannPoint& from, const GrassmannPoint& to);

  /// Transports a vector based at `from`; result is based at `to`.
  TangentVector operator()(const TangentVector& v) const;

  const GrassmannPoint& from() const { return from_; }
  const GrassmannPoint& to() const { return to_; }

 private:
  GrassmannPoint from_;
  GrassmannPoint to_;
  Matrix w_;        // left singular vectors of the connecting tangent
  Matrix rotated_;  // -U V sin(S) + W cos(S)
};

namespace detail {

/// Thin SVD A = W diag(sigma) V^T with a fixed gauge: singular values
/// descending and the first nonzero entry of every right singular vector
/// positive. Outputs of exp/log/transport are invariant to the gauge; fixing
/// it keeps runs bit-reproducible.
struct ThinSvd {
  Matrix w;
  Vector sigma;
  Matrix v;
};
ThinSvd thin_svd_canonical(const Matrix& a);

/// Thin QR orthonormalization with positive R diagonal (keeps Q close to the
/// input when the input is already near-orthonormal).
Matrix qr_orthonormalize(const Matrix& a);

}  // namespace detail

}  // namespace grsvrg
