#include "grsvrg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace grsvrg {

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::pca: return "pca";
    case ProblemKind::karcher: return "karcher";
    case ProblemKind::mc: return "mc";
  }
  return "unknown";
}

namespace {

void check_sizes(const SyntheticSpec& spec) {
  if (spec.n < 1) throw ContractViolation("SyntheticSpec: n must be >= 1");
  if (spec.r < 1 || spec.r >= spec.d) throw ContractViolation("SyntheticSpec: need 1 <= r < d");
}

double parse_double(const std::string& token, long line, const std::string& path) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end || begin == end) {
    throw ParseError(path + ": cannot parse value '" + token + "'", line);
  }
  return value;
}

long parse_long(const std::string& token, long line, const std::string& path) {
  long value = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size() || token.empty()) {
    throw ParseError(path + ": cannot parse integer '" + token + "'", line);
  }
  return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

void update_range(RatingDataset& ds) {
  ds.value_min = std::numeric_limits<double>::infinity();
  ds.value_max = -std::numeric_limits<double>::infinity();
  for (const auto* list : {&ds.train, &ds.test}) {
    for (const auto& t : *list) {
      ds.value_min = std::min(ds.value_min, t.value);
      ds.value_max = std::max(ds.value_max, t.value);
    }
  }
  if (ds.train.empty() && ds.test.empty()) {
    ds.value_min = ds.value_max = 0.0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

PcaProblem gen_pca(const SyntheticSpec& spec) {
  check_sizes(spec);
  Rng rng(spec.seed);
  const bool spiked = spec.noise_sigma.has_value() && *spec.noise_sigma < 1.0;
  if (!spiked) {
    return PcaProblem(rng.gaussian(spec.d, spec.n), spec.r);
  }
  const double sigma = std::max(0.0, *spec.noise_sigma);
  const GrassmannPoint planted = GrassmannPoint::random(spec.d, spec.r, rng);
  Matrix data = planted.mat() * rng.gaussian(spec.r, spec.n);
  if (sigma > 0.0) data += sigma * rng.gaussian(spec.d, spec.n);
  return PcaProblem(std::move(data), spec.r);
}

KarcherProblem gen_karcher(const SyntheticSpec& spec) {
  check_sizes(spec);
  Rng rng(spec.seed);
  const double sigma = spec.noise_sigma.value_or(0.3);
  if (sigma < 0) throw ContractViolation("gen_karcher: noise_sigma must be >= 0");

  const GrassmannPoint center = GrassmannPoint::random(spec.d, spec.r, rng);
  std::vector<GrassmannPoint> points;
  points.reserve(static_cast<std::size_t>(spec.n));
  for (Index i = 0; i < spec.n; ++i) {
    if (sigma == 0.0) {
      points.push_back(center);
      continue;
    }
    TangentVector dir = project_tangent(center, rng.gaussian(spec.d, spec.r));
    dir = dir * (1.0 / std::max(dir.norm(), 1e-300));
    points.push_back(exp_map(center, dir, sigma));
  }
  return KarcherProblem(std::move(points));
}

McInstance gen_mc(const SyntheticSpec& spec, double ridge) {
  check_sizes(spec);
  if (!(spec.condition_number >= 1.0)) {
    throw ContractViolation("gen_mc: condition_number must be >= 1");
  }
  if (!(spec.oversampling > 1.0)) throw ContractViolation("gen_mc: oversampling must be > 1");

  Rng rng(spec.seed);
  const int d = spec.d;
  const Index n = spec.n;
  const int r = spec.r;

  const GrassmannPoint u_star = GrassmannPoint::random(d, r, rng);
  // Right factor with orthonormal rows, scaled so data entries are O(1).
  const Matrix a_cols = detail::qr_orthonormalize(rng.gaussian(n, r));
  Vector s(r);
  for (int i = 0; i < r; ++i) {
    const double expo = r == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(r - 1);
    s(i) = std::pow(spec.condition_number, -expo);
  }
  s *= std::sqrt(static_cast<double>(n));
  const Matrix x = u_star.mat() * s.asDiagonal() * a_cols.transpose();

  const Index total = static_cast<Index>(d) * n;
  const Index omega_size =
      static_cast<Index>(std::llround(spec.oversampling * static_cast<double>(n + d - r) * r));
  if (2 * omega_size > total) {
    throw ContractViolation("gen_mc: oversampling too large for disjoint train/test sets");
  }

  // Partial Fisher-Yates over all cells: first |Omega| train, next |Omega| test.
  std::vector<Index> cells(static_cast<std::size_t>(total));
  for (Index i = 0; i < total; ++i) cells[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < 2 * omega_size; ++i) {
    const Index j = i + rng.uniform_below(total - i);
    std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
  }

  std::vector<std::vector<int>> train_rows(static_cast<std::size_t>(n)),
      test_rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < omega_size; ++i) {
    const Index cell = cells[static_cast<std::size_t>(i)];
    train_rows[static_cast<std::size_t>(cell / d)].push_back(static_cast<int>(cell % d));
  }
  for (Index i = omega_size; i < 2 * omega_size; ++i) {
    const Index cell = cells[static_cast<std::size_t>(i)];
    test_rows[static_cast<std::size_t>(cell / d)].push_back(static_cast<int>(cell % d));
  }

  std::vector<Vector> train_vals(static_cast<std::size_t>(n)), test_vals(static_cast<std::size_t>(n));
  for (Index c = 0; c < n; ++c) {
    auto& tr = train_rows[static_cast<std::size_t>(c)];
    auto& te = test_rows[static_cast<std::size_t>(c)];
    std::sort(tr.begin(), tr.end());
    std::sort(te.begin(), te.end());
    Vector tv(static_cast<Eigen::Index>(tr.size())), sv(static_cast<Eigen::Index>(te.size()));
    for (std::size_t k = 0; k < tr.size(); ++k) tv(static_cast<Eigen::Index>(k)) = x(tr[k], c);
    for (std::size_t k = 0; k < te.size(); ++k) sv(static_cast<Eigen::Index>(k)) = x(te[k], c);
    train_vals[static_cast<std::size_t>(c)] = std::move(tv);
    test_vals[static_cast<std::size_t>(c)] = std::move(sv);
  }

  McProblem problem(d, r, std::move(train_rows), std::move(train_vals), std::move(test_rows),
                    std::move(test_vals), ridge);
  return {std::move(problem), u_star};
}

// ---------------------------------------------------------------------------
// Rating loaders
// ---------------------------------------------------------------------------

RatingDataset load_ratings(const std::string& path, RatingFormat format) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_ratings: cannot open '" + path + "'");

  RatingDataset ds;
  std::string line;
  long line_no = 0;
  int max_row = -1;
  Index max_col = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (format == RatingFormat::jester) {
      const auto fields = split(line, ',');
      if (ds.d == 0) {
        ds.d = static_cast<int>(fields.size());
      } else if (static_cast<int>(fields.size()) != ds.d) {
        throw ParseError(path + ": expected " + std::to_string(ds.d) + " fields, got " +
                             std::to_string(fields.size()),
                         line_no);
      }
      const int user = static_cast<int>(line_no) - 1;
      for (int item = 0; item < ds.d; ++item) {
        const double v = parse_double(fields[static_cast<std::size_t>(item)], line_no, path);
        if (v == 99.0) continue;  // sentinel: not rated
        ds.train.push_back({item, user, v});
      }
      max_col = std::max<Index>(max_col, user);
      max_row = ds.d - 1;
    } else {
      const auto fields = split(line, ':');
      // "u::m::r::ts" splits on ':' into 7 tokens with empty ones between.
      if (fields.size() != 7 || !fields[1].empty() || !fields[3].empty() || !fields[5].empty()) {
        throw ParseError(path + ": expected UserID::MovieID::Rating::Timestamp", line_no);
      }
      const long user = parse_long(fields[0], line_no, path);
      const long movie = parse_long(fields[2], line_no, path);
      const double rating = parse_double(fields[4], line_no, path);
      if (user < 1 || movie < 1) {
        throw ParseError(path + ": ids must be positive", line_no);
      }
      ds.train.push_back({static_cast<int>(movie - 1), static_cast<int>(user - 1), rating});
      max_row = std::max(max_row, static_cast<int>(movie - 1));
      max_col = std::max<Index>(max_col, user - 1);
    }
  }

  ds.d = std::max(ds.d, max_row + 1);
  ds.n_users = max_col + 1;
  update_range(ds);
  return ds;
}

SplitResult split_ratings(const RatingDataset& ds, int per_user_holdout, std::uint64_t seed) {
  if (per_user_holdout < 1) throw ContractViolation("split_ratings: per_user_holdout must be >= 1");
  Rng rng(seed);

  std::map<int, std::vector<RatingTriplet>> by_user;
  for (const auto& t : ds.train) by_user[t.col].push_back(t);

  SplitResult out;
  out.dataset.d = ds.d;
  out.dataset.n_users = ds.n_users;

  for (auto& [user, ratings] : by_user) {
    if (static_cast<int>(ratings.size()) < per_user_holdout + 1) {
      ++out.dropped_users;
      continue;
    }
    const Batch held =
        rng.sample_without_replacement(static_cast<Index>(ratings.size()), per_user_holdout);
    std::size_t next_held = 0;
    for (std::size_t i = 0; i < ratings.size(); ++i) {
      if (next_held < held.size() && static_cast<Index>(i) == held[next_held]) {
        out.dataset.test.push_back(ratings[i]);
        ++next_held;
      } else {
        out.dataset.train.push_back(ratings[i]);
      }
    }
  }
  update_range(out.dataset);
  return out;
}

void save_triplets(const std::string& path, const std::vector<RatingTriplet>& triplets) {
  std::ofstream outf(path);
  if (!outf) throw ConfigError("save_triplets: cannot open '" + path + "' for writing");
  outf << "row,col,value\n";
  char buf[64];
  for (const auto& t : triplets) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", t.row, t.col, t.value);
    outf << buf;
  }
}

std::vector<RatingTriplet> load_triplets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_triplets: cannot open '" + path + "'");
  std::string line;
  long line_no = 0;
  std::vector<RatingTriplet> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line.rfind("row,col,value", 0) != 0) {
        throw ParseError(path + ": missing 'row,col,value' header", line_no);
      }
      continue;
    }
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3) throw ParseError(path + ": expected 3 fields", line_no);
    out.push_back({static_cast<int>(parse_long(fields[0], line_no, path)),
                   static_cast<int>(parse_long(fields[1], line_no, path)),
                   parse_double(fields[2], line_no, path)});
  }
  return out;
}

void save_ratings(const RatingDataset& ds, const std::string& train_path,
                  const std::string& test_path) {
  save_triplets(train_path, ds.train);
  save_triplets(test_path, ds.test);
}

RatingDataset load_saved_ratings(const std::string& train_path, const std::string& test_path) {
  RatingDataset ds;
  ds.train = load_triplets(train_path);
  ds.test = load_triplets(test_path);
  int max_row = -1;
  Index max_col = -1;
  for (const auto* list : {&ds.train, &ds.test}) {
    for (const auto& t : *list) {
      max_row = std::max(max_row, t.row);
      max_col = std::max<Index>(max_col, t.col);
    }
  }
  ds.d = max_row + 1;
  ds.n_users = max_col + 1;
  update_range(ds);
  return ds;
}

McProblem mc_from_dataset(const RatingDataset& ds, int r, double ridge) {
  if (ds.d < 2 || ds.n_users < 1) throw ContractViolation("mc_from_dataset: empty dataset");
  const std::size_t n = static_cast<std::size_t>(ds.n_users);
  std::vector<std::vector<int>> train_rows(n), test_rows(n);
  std::vector<std::vector<double>> train_raw(n), test_raw(n);
  for (const auto& t : ds.train) {
    train_rows[static_cast<std::size_t>(t.col)].push_back(t.row);
    train_raw[static_cast<std::size_t>(t.col)].push_back(t.value);
  }
  for (const auto& t : ds.test) {
    test_rows[static_cast<std::size_t>(t.col)].push_back(t.row);
    test_raw[static_cast<std::size_t>(t.col)].push_back(t.value);
  }
  std::vector<Vector> train_vals(n), test_vals(n);
  for (std::size_t c = 0; c < n; ++c) {
    train_vals[c] = Eigen::Map<const Vector>(train_raw[c].data(),
                                             static_cast<Eigen::Index>(train_raw[c].size()));
    test_vals[c] =
        Eigen::Map<const Vector>(test_raw[c].data(), static_cast<Eigen::Index>(test_raw[c].size()));
  }
  return McProblem(ds.d, r, std::move(train_rows), std::move(train_vals), std::move(test_rows),
                   std::move(test_vals), ridge);
}

}  // namespace grsvrg
