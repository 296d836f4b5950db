#include "grsvrg/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace grsvrg {

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
  }
}

void check_same_base(const TangentVector& v, const GrassmannPoint& base, const char* what) {
  if (!v.base().same_representative(base)) {
    throw ContractViolation(std::string(what) + ": tangent vector is attached to a different base point");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Rng (lives here so the library has a single TU for low-level utilities)
// ---------------------------------------------------------------------------

Index Rng::uniform_below(Index n) {
  if (n <= 0) throw ContractViolation("Rng::uniform_below: n must be positive");
  std::uint64_t un = static_cast<std::uint64_t>(n);
  // Smallest power-of-two mask covering n, then reject.
  std::uint64_t mask = un - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    std::uint64_t x = next_u64() & mask;
    if (x < un) return static_cast<Index>(x);
  }
}

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform01();
  double u2 = uniform01();
  if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  have_cached_normal_ = true;
  return r * std::cos(theta);
}

Matrix Rng::gaussian(Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

Batch Rng::sample_without_replacement(Index n, Index k) {
  if (k < 0 || k > n) throw ContractViolation("sample_without_replacement: need 0 <= k <= n");
  Batch out;
  out.reserve(static_cast<std::size_t>(k));
  // Floyd's algorithm; membership test is linear but k is small (batch sizes).
  for (Index j = n - k; j < n; ++j) {
    Index t = uniform_below(j + 1);
    bool seen = false;
    for (Index v : out) {
      if (v == t) {
        seen = true;
        break;
      }
    }
    out.push_back(seen ? j : t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// SVD / QR helpers
// ---------------------------------------------------------------------------

namespace detail {

ThinSvd thin_svd_canonical(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  // Gauge fix: first nonzero entry of each right singular vector positive.
  for (Eigen::Index j = 0; j < out.v.cols(); ++j) {
    double lead = 0.0;
    for (Eigen::Index i = 0; i < out.v.rows(); ++i) {
      if (std::abs(out.v(i, j)) > 1e-13) {
        lead = out.v(i, j);
        break;
      }
    }
    if (lead < 0.0) {
      out.v.col(j) = -out.v.col(j);
      out.w.col(j) = -out.w.col(j);
    }
  }
  return out;
}

Matrix qr_orthonormalize(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// GrassmannPoint / TangentVector
// ---------------------------------------------------------------------------

GrassmannPoint::GrassmannPoint(Matrix mat) : mat_(std::move(mat)) {
  const auto d = mat_.rows();
  const auto r = mat_.cols();
  if (r < 1 || r >= d) {
    throw DimensionError("GrassmannPoint: need 1 <= r < d, got " + shape_str(mat_));
  }
  const double drift = (mat_.transpose() * mat_ - Matrix::Identity(r, r)).norm();
  if (!(drift <= kOrthoTol)) {
    throw ContractViolation("GrassmannPoint: columns not orthonormal, ||U^T U - I||_F = " +
                            std::to_string(drift));
  }
}

GrassmannPoint GrassmannPoint::orthonormalized(const Matrix& mat) {
  return GrassmannPoint(detail::qr_orthonormalize(mat));
}

GrassmannPoint GrassmannPoint::random(int d, int r, Rng& rng) {
  return orthonormalized(rng.gaussian(d, r));
}

TangentVector::TangentVector(GrassmannPoint base, Matrix mat)
    : base_(std::move(base)), mat_(std::move(mat)) {
  check_same_shape(base_.mat(), mat_, "TangentVector");
  const double horiz = (base_.mat().transpose() * mat_).norm();
  if (!(horiz <= kHorizTol)) {
    throw ContractViolation("TangentVector: not horizontal, ||U^T xi||_F = " +
                            std::to_string(horiz));
  }
}

TangentVector TangentVector::zero(const GrassmannPoint& base) {
  return TangentVector(base, Matrix::Zero(base.mat().rows(), base.mat().cols()));
}

TangentVector TangentVector::operator+(const TangentVector& other) const {
  check_same_base(other, base_, "TangentVector::operator+");
  return TangentVector(base_, mat_ + other.mat_);
}

TangentVector TangentVector::operator-(const TangentVector& other) const {
  check_same_base(other, base_, "TangentVector::operator-");
  return TangentVector(base_, mat_ - other.mat_);
}

double inner(const TangentVector& a, const TangentVector& b) {
  check_same_base(b, a.base(), "inner");
  return a.mat().cwiseProduct(b.mat()).sum();
}

// ---------------------------------------------------------------------------
// Core maps
// ---------------------------------------------------------------------------

GrassmannPoint exp_map(const GrassmannPoint& base, const TangentVector& xi, double t) {
  check_same_base(xi, base, "exp_map");
  if (!std::isfinite(t)) throw ContractViolation("exp_map: step t must be finite");

  const detail::ThinSvd svd = detail::thin_svd_canonical(xi.mat());
  const Vector ts = t * svd.sigma;
  const Vector c = ts.array().cos();
  const Vector s = ts.array().sin();

  Matrix u_new = base.mat() * (svd.v * c.asDiagonal() * svd.v.transpose()) +
                 svd.w * s.asDiagonal() * svd.v.transpose();

  const auto r = u_new.cols();
  const double drift = (u_new.transpose() * u_new - Matrix::Identity(r, r)).norm();
  if (drift > kQrDriftTol) u_new = detail::qr_orthonormalize(u_new);
  return GrassmannPoint(std::move(u_new));
}

TangentVector log_map(const GrassmannPoint& base, const GrassmannPoint& target) {
  check_same_shape(base.mat(), target.mat(), "log_map");

  const Matrix overlap = base.mat().transpose() * target.mat();  // U(0)^T U(t), r x r
  Eigen::JacobiSVD<Matrix> osvd(overlap, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma_min = osvd.singularValues().minCoeff();
  if (sigma_min < kCutLocusTol) {
    throw CutLocusError("log_map: target on cut locus of base, sigma_min(U^T Z) = " +
                            std::to_string(sigma_min),
                        sigma_min);
  }
  // (Z - U U^T Z) (U^T Z)^{-1}, inverse via the SVD just computed.
  const Matrix inv = osvd.matrixV() *
                     osvd.singularValues().cwiseInverse().asDiagonal() *
                     osvd.matrixU().transpose();
  const Matrix m = (target.mat() - base.mat() * overlap) * inv;

  const detail::ThinSvd svd = detail::thin_svd_canonical(m);
  const Vector theta = svd.sigma.array().atan();
  Matrix xi = svd.w * theta.asDiagonal() * svd.v.transpose();
  // Kill the O(eps) vertical component before constructing the tangent.
  xi -= base.mat() * (base.mat().transpose() * xi);
  return TangentVector(base, std::move(xi));
}

GeodesicTransporter::GeodesicTransporter(const GrassmannPoint& from, const GrassmannPoint& to)
    : from_(from), to_(to) {
  const TangentVector dir = log_map(from, to);
  const detail::ThinSvd svd = detail::thin_svd_canonical(dir.mat());
  const Vector c = svd.sigma.array().cos();
  const Vector s = svd.sigma.array().sin();
  w_ = svd.w;
  rotated_ = -from.mat() * (svd.v * s.asDiagonal()) + svd.w * c.asDiagonal();
}

TangentVector GeodesicTransporter::operator()(const TangentVector& v) const {
  check_same_base(v, from_, "GeodesicTransporter");
  const Matrix wv = w_.transpose() * v.mat();
  Matrix out = rotated_ * wv + v.mat() - w_ * wv;
  out -= to_.mat() * (to_.mat().transpose() * out);
  return TangentVector(to_, std::move(out));
}

TangentVector parallel_transport(const TangentVector& zeta, const GrassmannPoint& base,
                                 const TangentVector& xi) {
  check_same_base(zeta, base, "parallel_transport");
  check_same_base(xi, base, "parallel_transport");

  const GrassmannPoint dest = exp_map(base, xi, 1.0);
  const detail::ThinSvd svd = detail::thin_svd_canonical(xi.mat());
  const Vector c = svd.sigma.array().cos();
  const Vector s = svd.sigma.array().sin();
  const Matrix rotated = -base.mat() * (svd.v * s.asDiagonal()) + svd.w * c.asDiagonal();
  const Matrix wz = svd.w.transpose() * zeta.mat();
  Matrix out = rotated * wz + zeta.mat() - svd.w * wz;
  out -= dest.mat() * (dest.mat().transpose() * out);
  return TangentVector(dest, std::move(out));
}

double distance(const GrassmannPoint& a, const GrassmannPoint& b) {
  check_same_shape(a.mat(), b.mat(), "distance");
  if (a.mat() == b.mat()) return 0.0;
  const Matrix overlap = a.mat().transpose() * b.mat();
  Eigen::JacobiSVD<Matrix> csvd(overlap);
  const Vector& cosines = csvd.singularValues();  // cos(theta), theta ascending
  // arccos alone loses half the digits for angles near 0; recover small
  // angles from the complementary sines sigma(b - a a^T b) = sin(theta).
  Eigen::JacobiSVD<Matrix> ssvd(b.mat() - a.mat() * overlap);
  const Vector& sines = ssvd.singularValues();  // sin(theta), theta descending
  const Eigen::Index r = cosines.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r; ++i) {
    const double c = std::min(1.0, std::max(0.0, cosines(i)));
    const double s = std::min(1.0, std::max(0.0, sines(r - 1 - i)));
    const double theta = c > s ? std::asin(s) : std::acos(c);
    sum += theta * theta;
  }
  return std::sqrt(sum);
}

TangentVector project_tangent(const GrassmannPoint& base, const Matrix& ambient) {
  check_same_shape(base.mat(), ambient, "project_tangent");
  Matrix h = ambient - base.mat() * (base.mat().transpose() * ambient);
  // Second pass removes the O(eps * ||G||) residue so the horizontality
  // invariant holds even for large-norm inputs.
  h -= base.mat() * (base.mat().transpose() * h);
  return TangentVector(base, std::move(h));
}

KarcherResult karcher_mean(std::span<const GrassmannPoint> points, double tol, int max_iter) {
  if (points.empty()) throw ContractViolation("karcher_mean: need at least one point");
  for (const auto& p : points) {
    if (!p.same_shape(points.front())) {
      throw DimensionError("karcher_mean: points have mixed shapes");
    }
  }

  GrassmannPoint u = points.front();
  GrassmannPoint best = u;
  double best_norm = std::numeric_limits<double>::infinity();

  for (int it = 0; it <= max_iter; ++it) {
    Matrix mean = Matrix::Zero(u.mat().rows(), u.mat().cols());
    for (const auto& q : points) mean += log_map(u, q).mat();
    mean /= static_cast<double>(points.size());
    TangentVector step = project_tangent(u, mean);

    const double n = step.norm();
    if (n < best_norm) {
      best_norm = n;
      best = u;
    }
    if (n <= tol) return {u, true, it, n};
    if (it == max_iter) break;
    u = exp_map(u, step, 1.0);
  }
  return {best, false, max_iter, best_norm};
}

}  // namespace grsvrg
