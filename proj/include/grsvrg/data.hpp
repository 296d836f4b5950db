#pragma once

#include "grsvrg/manifold.hpp"
#include "grsvrg/problems.hpp"
#include "grsvrg/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace grsvrg {

enum class ProblemKind { pca, karcher, mc };

std::string to_string(ProblemKind k);

/// Parameters of a synthetic benchmark instance. All generators are pure
/// functions of (spec, seed).
struct SyntheticSpec {
  ProblemKind kind = ProblemKind::pca;
  Index n = 0;
  int d = 0;
  int r = 0;
  double condition_number = 1.0;           // mc: sigma_max / sigma_min of the planted factor
  double oversampling = 5.0;               // mc: |Omega| = round(OS (N + d - r) r)
  std::optional<double> noise_sigma;       // pca: spike noise (< 1 plants a spike);
                                           // karcher: dispersion (default 0.3)
  std::uint64_t seed = 0;
};

/// PCA data: i.i.d. standard normal columns, or (when noise_sigma < 1) a
/// planted spike x_n = U_p a_n + sigma e_n giving a clear top-r eigengap.
PcaProblem gen_pca(const SyntheticSpec& spec);

/// N subspaces exp(C, sigma xi_n) scattered around a random center with unit
/// random horizontal directions; sigma defaults to 0.3, which keeps every
/// pair well inside the injectivity radius.
KarcherProblem gen_karcher(const SyntheticSpec& spec);

struct McInstance {
  McProblem problem;
  GrassmannPoint ground_truth;  // planted column space
};

/// Exact low-rank ground truth X = U* S A with geometrically spaced singular
/// values (max/min = condition_number), observed on |Omega| cells sampled
/// uniformly without replacement and tested on a disjoint set of equal size.
McInstance gen_mc(const SyntheticSpec& spec, double ridge = 1e-8);

struct RatingTriplet {
  int row = 0;  // item
  int col = 0;  // user
  double value = 0.0;

  bool operator==(const RatingTriplet&) const = default;
};

struct RatingDataset {
  int d = 0;        // items
  Index n_users = 0;
  std::vector<RatingTriplet> train;
  std::vector<RatingTriplet> test;
  double value_min = 0.0;
  double value_max = 0.0;
};

enum class RatingFormat { jester, movielens };

/// jester: one dense CSV row per user, 99 marks a missing rating.
/// movielens: UserID::MovieID::Rating::Timestamp lines, 1-based ids.
/// All ratings land in `train`; use split_ratings to carve out a test set.
RatingDataset load_ratings(const std::string& path, RatingFormat format);

struct SplitResult {
  RatingDataset dataset;
  long dropped_users = 0;  // users with fewer than per_user_holdout + 1 ratings
};

/// Holds out `per_user_holdout` ratings per user (uniformly, seeded) into the
/// test set; users too small to leave at least one train rating are dropped.
SplitResult split_ratings(const RatingDataset& ds, int per_user_holdout, std::uint64_t seed);

/// Canonical triplet CSV: header "row,col,value", one triplet per line.
void save_triplets(const std::string& path, const std::vector<RatingTriplet>& triplets);
std::vector<RatingTriplet> load_triplets(const std::string& path);

/// Round-trips a dataset through a pair of canonical CSVs.
void save_ratings(const RatingDataset& ds, const std::string& train_path,
                  const std::string& test_path);
RatingDataset load_saved_ratings(const std::string& train_path, const std::string& test_path);

McProblem mc_from_dataset(const RatingDataset& ds, int r, double ridge = 1e-8);

}  // namespace grsvrg
