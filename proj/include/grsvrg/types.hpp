#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace grsvrg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = std::int64_t;
using Batch = std::vector<Index>;

/// Shapes disagree (matrix dimensions, subspace ranks).
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A documented precondition or invariant was violated by the caller.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Logarithm map requested for a target on (or numerically at) the cut locus.
class CutLocusError : public std::runtime_error {
 public:
  CutLocusError(const std::string& what, double sigma_min)
      : std::runtime_error(what), sigma_min_(sigma_min) {}
  double sigma_min() const { return sigma_min_; }

 private:
  double sigma_min_;
};

/// An optimizer run produced a non-finite iterate or cost.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch, double eta)
      : std::runtime_error(what), epoch_(epoch), eta_(eta) {}
  int epoch() const { return epoch_; }
  double eta() const { return eta_; }

 private:
  int epoch_;
  double eta_;
};

/// Backtracking line search exhausted its halving budget.
class LineSearchError : public std::runtime_error {
 public:
  explicit LineSearchError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid experiment configuration (missing keys, empty grid, bad paths).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Deterministic RNG. Wraps mt19937_64 but generates variates through fixed
/// arithmetic (no std::*_distribution) so that a given seed reproduces the
/// same stream of batches and matrices on every run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  Index uniform_below(Index n);

  /// Standard normal via Box-Muller.
  double normal();

  Matrix gaussian(Eigen::Index rows, Eigen::Index cols);

  /// k distinct indices from {0, ..., n-1}, returned sorted ascending.
  /// Floyd's algorithm: O(k) draws independent of n.
  Batch sample_without_replacement(Index n, Index k);

 private:
  std::mt19937_64 engine_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace grsvrg
