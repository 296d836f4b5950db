#include "grsvrg/experiment.hpp"

#include "grsvrg/hash.hpp"
#include "grsvrg/verify.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace grsvrg {

namespace detail_csv {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "epoch,grad_evals_over_N,train_loss,test_loss,optimality_gap,grad_norm,wall_time\n";
  for (const auto& rec : trace) {
    // wall_time is pinned to 0 in the file so reruns are byte-identical;
    // measured timings live in the manifest.
    out << rec.epoch << ',' << format_double(rec.grad_evals_over_n) << ','
        << format_double(rec.train_loss) << ',' << format_double(rec.test_loss) << ','
        << format_double(rec.optimality_gap) << ',' << format_double(rec.full_grad_norm)
        << ",0\n";
  }
}

std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file '" + path + "'");
  std::vector<TraceRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    TraceRecord rec;
    auto next = [&]() -> double {
      if (!std::getline(ss, tok, ',')) throw ParseError(path + ": short row", line_no);
      if (tok == "nan" || tok == "-nan") return std::numeric_limits<double>::quiet_NaN();
      return std::stod(tok);
    };
    rec.epoch = static_cast<int>(next());
    rec.grad_evals_over_n = next();
    rec.train_loss = next();
    rec.test_loss = next();
    rec.optimality_gap = next();
    rec.full_grad_norm = next();
    rec.wall_time = next();
    out.push_back(rec);
  }
  return out;
}

}  // namespace detail_csv

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

struct RawConfig {
  std::map<std::string, std::vector<std::string>> values;
  std::string source;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::string get_one(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end() || it->second.empty()) {
      throw ConfigError(source + ": missing required key '" + key + "'");
    }
    if (it->second.size() > 1) {
      throw ConfigError(source + ": key '" + key + "' given more than once");
    }
    return it->second.front();
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_one(key) : fallback;
  }

  std::vector<std::string> get_list(const std::string& key) const {
    const auto it = values.find(key);
    return it == values.end() ? std::vector<std::string>{} : it->second;
  }
};

double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse number '" + s + "'");
  }
}

long to_long(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse integer '" + s + "'");
  }
}

Variant parse_variant(const std::string& s) {
  if (s == "rsvrg") return Variant::rsvrg;
  if (s == "rsvrg_plus") return Variant::rsvrg_plus;
  if (s == "rsgd") return Variant::rsgd;
  if (s == "rsd") return Variant::rsd;
  throw ConfigError("unknown algorithm '" + s + "'");
}

Averaging parse_averaging(const std::string& s) {
  if (s == "option_I_karcher") return Averaging::option_I_karcher;
  if (s == "option_I_random_t") return Averaging::option_I_random_t;
  if (s == "option_II_last") return Averaging::option_II_last;
  throw ConfigError("unknown averaging '" + s + "'");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name) {
  RawConfig raw;
  raw.source = source_name;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string{};
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": empty key or value");
    }
    raw.values[key].push_back(value);
  }

  ExperimentConfig cfg;
  cfg.source_path = source_name;

  const std::string problem = raw.get_one("problem");
  if (problem == "pca" || problem == "karcher" || problem == "mc") {
    SyntheticSpec spec;
    spec.kind = problem == "pca" ? ProblemKind::pca
                                 : (problem == "karcher" ? ProblemKind::karcher : ProblemKind::mc);
    spec.n = to_long(raw.get_one("n"), "n");
    spec.d = static_cast<int>(to_long(raw.get_one("d"), "d"));
    spec.r = static_cast<int>(to_long(raw.get_one("r"), "r"));
    if (raw.has("condition_number")) {
      spec.condition_number = to_double(raw.get_one("condition_number"), "condition_number");
    }
    if (raw.has("oversampling")) {
      spec.oversampling = to_double(raw.get_one("oversampling"), "oversampling");
    }
    if (raw.has("noise_sigma")) {
      spec.noise_sigma = to_double(raw.get_one("noise_sigma"), "noise_sigma");
    }
    cfg.synthetic = spec;
  } else if (problem == "mc_dataset") {
    cfg.dataset_path = raw.get_one("dataset_path");
    const std::string fmt = raw.get_or("dataset_format", "movielens");
    if (fmt == "jester") {
      cfg.dataset_format = RatingFormat::jester;
    } else if (fmt == "movielens") {
      cfg.dataset_format = RatingFormat::movielens;
    } else {
      throw ConfigError("unknown dataset_format '" + fmt + "'");
    }
    cfg.per_user_holdout = static_cast<int>(to_long(raw.get_or("per_user_holdout", "2"),
                                                    "per_user_holdout"));
    cfg.dataset_rank = static_cast<int>(to_long(raw.get_or("rank", "5"), "rank"));
    if (!fs::exists(cfg.dataset_path)) {
      throw ConfigError("dataset_path '" + cfg.dataset_path + "' does not exist");
    }
  } else {
    throw ConfigError("unknown problem '" + problem + "'");
  }
  if (raw.has("ridge")) cfg.ridge = to_double(raw.get_one("ridge"), "ridge");

  for (const auto& a : raw.get_list("algorithm")) cfg.algorithms.push_back(parse_variant(a));
  if (cfg.algorithms.empty()) throw ConfigError(source_name + ": no 'algorithm' entries");

  const int s_threshold =
      static_cast<int>(to_long(raw.get_or("s_threshold", "5"), "s_threshold"));
  std::vector<double> eta0s;
  for (const auto& s : raw.get_list("eta0")) eta0s.push_back(to_double(s, "eta0"));
  std::vector<double> lambdas;
  for (const auto& s : raw.get_list("lambda")) lambdas.push_back(to_double(s, "lambda"));

  for (const auto& kind : raw.get_list("schedule_kind")) {
    if (kind == "fixed") {
      for (double e : eta0s) cfg.schedule_grid.push_back(Schedule::Fixed(e));
    } else if (kind == "decay" || kind == "hybrid") {
      if (lambdas.empty()) {
        throw ConfigError("schedule_kind '" + kind + "' needs at least one 'lambda'");
      }
      for (double e : eta0s) {
        for (double l : lambdas) {
          cfg.schedule_grid.push_back(kind == "decay" ? Schedule::Decay(e, l)
                                                      : Schedule::Hybrid(e, l, s_threshold));
        }
      }
    } else {
      throw ConfigError("unknown schedule_kind '" + kind + "'");
    }
  }
  if (cfg.schedule_grid.empty()) {
    throw ConfigError(source_name + ": empty schedule grid (need schedule_kind and eta0)");
  }

  if (raw.has("seed")) cfg.seed = static_cast<std::uint64_t>(to_long(raw.get_one("seed"), "seed"));
  cfg.optim.seed = cfg.seed;
  if (raw.has("batch_size")) {
    cfg.optim.batch_size = static_cast<int>(to_long(raw.get_one("batch_size"), "batch_size"));
  }
  if (raw.has("max_epochs")) {
    cfg.optim.max_epochs = static_cast<int>(to_long(raw.get_one("max_epochs"), "max_epochs"));
  }
  if (raw.has("m_s")) cfg.optim.m_s = to_long(raw.get_one("m_s"), "m_s");
  if (raw.has("grad_tol")) cfg.optim.grad_tol = to_double(raw.get_one("grad_tol"), "grad_tol");
  if (raw.has("averaging")) cfg.optim.averaging = parse_averaging(raw.get_one("averaging"));
  if (raw.has("out_dir")) cfg.out_dir = raw.get_one("out_dir");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig cfg = parse_config_text(text.str(), path);
  cfg.source_path = path;
  return cfg;
}

// ---------------------------------------------------------------------------
// Problem construction
// ---------------------------------------------------------------------------

ProblemSetup build_problem(const ExperimentConfig& config) {
  std::shared_ptr<Problem> problem;
  double f_star = std::numeric_limits<double>::quiet_NaN();
  std::optional<GrassmannPoint> reference;

  if (config.synthetic) {
    SyntheticSpec spec = *config.synthetic;
    spec.seed = config.seed;
    switch (spec.kind) {
      case ProblemKind::pca: {
        auto pca = std::make_shared<PcaProblem>(gen_pca(spec));
        const PcaOptimum opt = pca_optimum(pca->data(), spec.r);
        f_star = opt.f_star;
        reference = opt.point;
        problem = std::move(pca);
        break;
      }
      case ProblemKind::karcher: {
        auto karcher = std::make_shared<KarcherProblem>(gen_karcher(spec));
        const KarcherResult mean = karcher_mean(karcher->points());
        reference = mean.point;
        f_star = karcher->cost(mean.point);
        problem = std::move(karcher);
        break;
      }
      case ProblemKind::mc: {
        McInstance inst = gen_mc(spec, config.ridge);
        reference = inst.ground_truth;
        f_star = 0.0;  // exact planted low-rank data
        problem = std::make_shared<McProblem>(std::move(inst.problem));
        break;
      }
    }
  } else {
    RatingDataset ds = load_ratings(config.dataset_path, config.dataset_format);
    SplitResult split = split_ratings(ds, config.per_user_holdout, config.seed);
    problem = std::make_shared<McProblem>(
        mc_from_dataset(split.dataset, config.dataset_rank, config.ridge));
  }

  Rng init_rng(mix_seed(config.seed, 0xA11CE));
  GrassmannPoint u0 =
      GrassmannPoint::random(problem->ambient_dim(), problem->subspace_rank(), init_rng);
  return {std::move(problem), f_star, std::move(reference), std::move(u0)};
}

// ---------------------------------------------------------------------------
// Grid execution
// ---------------------------------------------------------------------------

namespace {

struct GridCell {
  Variant algorithm;
  Schedule schedule;   // ignored by rsd
  std::string schedule_name;
};

std::vector<GridCell> expand_cells(const ExperimentConfig& config) {
  std::vector<GridCell> cells;
  for (Variant algo : config.algorithms) {
    if (algo == Variant::rsd) {
      cells.push_back({algo, Schedule::Fixed(1.0), "backtracking"});
      continue;
    }
    for (const Schedule& sched : config.schedule_grid) {
      cells.push_back({algo, sched, sched.name()});
    }
  }
  return cells;
}

CellOutcome run_cell(const GridCell& cell, const ExperimentConfig& config,
                     const ProblemSetup& setup, const std::string& out_dir) {
  CellOutcome outcome;
  outcome.algorithm = to_string(cell.algorithm);
  outcome.schedule = cell.schedule_name;
  outcome.trace_file = "trace_" + outcome.algorithm + "_" + outcome.schedule + ".csv";

  OptimizerConfig opt = config.optim;
  opt.variant = cell.algorithm;
  opt.seed = config.seed;

  const auto start = std::chrono::steady_clock::now();
  try {
    const RunResult result = [&]() -> RunResult {
      switch (cell.algorithm) {
        case Variant::rsvrg:
        case Variant::rsvrg_plus:
          return run_rsvrg(*setup.problem, opt, cell.schedule, setup.u0, setup.f_star);
        case Variant::rsgd:
          return run_rsgd(*setup.problem, opt, cell.schedule, setup.u0, setup.f_star);
        case Variant::rsd:
          return run_rsd(*setup.problem, opt, setup.u0, setup.f_star);
      }
      throw ContractViolation("run_cell: unknown algorithm");
    }();
    detail_csv::write_trace_csv((fs::path(out_dir) / outcome.trace_file).string(), result.trace);
    if (!result.trace.empty()) {
      const TraceRecord& last = result.trace.back();
      outcome.final_train_loss = last.train_loss;
      outcome.final_test_loss = last.test_loss;
      outcome.final_gap = last.optimality_gap;
      outcome.final_grad_norm = last.full_grad_norm;
      outcome.grad_evals_over_n = last.grad_evals_over_n;
      outcome.epochs = last.epoch;
    }
    outcome.converged = result.converged;
  } catch (const std::exception& e) {
    outcome.failed = true;
    outcome.error = e.what();
  }
  outcome.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return outcome;
}

json schedule_to_json(const Schedule& s) {
  json j;
  switch (s.kind) {
    case ScheduleKind::fixed: j["kind"] = "fixed"; break;
    case ScheduleKind::decay: j["kind"] = "decay"; break;
    case ScheduleKind::hybrid: j["kind"] = "hybrid"; break;
  }
  j["eta0"] = s.eta0;
  j["lambda"] = s.lambda;
  j["s_threshold"] = s.s_threshold;
  return j;
}

Schedule schedule_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed") return Schedule::Fixed(j.at("eta0").get<double>());
  if (kind == "decay") {
    return Schedule::Decay(j.at("eta0").get<double>(), j.at("lambda").get<double>());
  }
  return Schedule::Hybrid(j.at("eta0").get<double>(), j.at("lambda").get<double>(),
                          j.at("s_threshold").get<int>());
}

json config_to_json(const ExperimentConfig& config) {
  json j;
  j["seed"] = config.seed;
  if (config.synthetic) {
    const SyntheticSpec& s = *config.synthetic;
    j["problem"] = {{"type", "synthetic"},
                    {"kind", to_string(s.kind)},
                    {"n", s.n},
                    {"d", s.d},
                    {"r", s.r},
                    {"condition_number", s.condition_number},
                    {"oversampling", s.oversampling}};
    if (s.noise_sigma) {
      j["problem"]["noise_sigma"] = *s.noise_sigma;
    } else {
      j["problem"]["noise_sigma"] = nullptr;
    }
  } else {
    j["problem"] = {{"type", "dataset"},
                    {"dataset_path", config.dataset_path},
                    {"dataset_format",
                     config.dataset_format == RatingFormat::jester ? "jester" : "movielens"},
                    {"per_user_holdout", config.per_user_holdout},
                    {"rank", config.dataset_rank}};
  }
  j["problem"]["ridge"] = config.ridge;
  j["optimizer"] = {{"m_s", config.optim.m_s},
                    {"batch_size", config.optim.batch_size},
                    {"max_epochs", config.optim.max_epochs},
                    {"grad_tol", config.optim.grad_tol},
                    {"averaging", to_string(config.optim.averaging)}};
  json algos = json::array();
  for (Variant v : config.algorithms) algos.push_back(to_string(v));
  j["algorithms"] = algos;
  json scheds = json::array();
  for (const Schedule& s : config.schedule_grid) scheds.push_back(schedule_to_json(s));
  j["schedules"] = scheds;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const json& p = j.at("problem");
  if (p.at("type") == "synthetic") {
    SyntheticSpec spec;
    const std::string kind = p.at("kind").get<std::string>();
    spec.kind = kind == "pca" ? ProblemKind::pca
                              : (kind == "karcher" ? ProblemKind::karcher : ProblemKind::mc);
    spec.n = p.at("n").get<Index>();
    spec.d = p.at("d").get<int>();
    spec.r = p.at("r").get<int>();
    spec.condition_number = p.at("condition_number").get<double>();
    spec.oversampling = p.at("oversampling").get<double>();
    if (!p.at("noise_sigma").is_null()) spec.noise_sigma = p.at("noise_sigma").get<double>();
    spec.seed = cfg.seed;
    cfg.synthetic = spec;
  } else {
    cfg.dataset_path = p.at("dataset_path").get<std::string>();
    cfg.dataset_format =
        p.at("dataset_format") == "jester" ? RatingFormat::jester : RatingFormat::movielens;
    cfg.per_user_holdout = p.at("per_user_holdout").get<int>();
    cfg.dataset_rank = p.at("rank").get<int>();
  }
  cfg.ridge = p.at("ridge").get<double>();
  const json& o = j.at("optimizer");
  cfg.optim.m_s = o.at("m_s").get<long>();
  cfg.optim.batch_size = o.at("batch_size").get<int>();
  cfg.optim.max_epochs = o.at("max_epochs").get<int>();
  cfg.optim.grad_tol = o.at("grad_tol").get<double>();
  cfg.optim.averaging = parse_averaging(o.at("averaging").get<std::string>());
  cfg.optim.seed = cfg.seed;
  for (const auto& a : j.at("algorithms")) cfg.algorithms.push_back(parse_variant(a));
  for (const auto& s : j.at("schedules")) cfg.schedule_grid.push_back(schedule_from_json(s));
  return cfg;
}

}  // namespace

std::vector<SummaryRow> build_summary(const std::vector<CellOutcome>& cells) {
  std::vector<SummaryRow> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) rows.push_back({c, false});

  std::map<std::string, std::size_t> best_index;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const CellOutcome& c = rows[i].cell;
    if (c.failed || !std::isfinite(c.final_train_loss)) continue;
    const auto it = best_index.find(c.algorithm);
    if (it == best_index.end() ||
        c.final_train_loss < rows[it->second].cell.final_train_loss) {
      best_index[c.algorithm] = i;
    }
  }
  for (const auto& [algo, idx] : best_index) rows[idx].best = true;
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int workers) {
  return run_experiment(config, build_problem(config), workers);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProblemSetup& setup,
                                int workers) {
  fs::create_directories(config.out_dir);
  const std::vector<GridCell> cells = expand_cells(config);

  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  workers = std::min<int>(workers, static_cast<int>(cells.size()));

  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      outcomes[i] = run_cell(cells[i], config, setup, config.out_dir);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const std::vector<SummaryRow> summary = build_summary(outcomes);

  // summary.csv: deterministic, one row per cell.
  {
    std::ofstream out(fs::path(config.out_dir) / "summary.csv");
    out << "algorithm,schedule,epochs,grad_evals_over_N,final_train_loss,final_test_loss,"
           "final_optimality_gap,final_grad_norm,converged,failed,best\n";
    for (const auto& row : summary) {
      const CellOutcome& c = row.cell;
      out << c.algorithm << ',' << c.schedule << ',' << c.epochs << ','
          << detail_csv::format_double(c.grad_evals_over_n) << ','
          << detail_csv::format_double(c.final_train_loss) << ','
          << detail_csv::format_double(c.final_test_loss) << ','
          << detail_csv::format_double(c.final_gap) << ','
          << detail_csv::format_double(c.final_grad_norm) << ',' << (c.converged ? 1 : 0) << ','
          << (c.failed ? 1 : 0) << ',' << (row.best ? 1 : 0) << '\n';
    }
  }

  // manifest.json: full parameter echo, input hashes, per-cell status.
  {
    json manifest;
    manifest["format"] = "grsvrg-experiment-v1";
    manifest["config"] = config_to_json(config);
    json inputs = json::object();
    if (!config.source_path.empty() && fs::exists(config.source_path)) {
      inputs["config_file"] = {{"path", config.source_path},
                               {"git_blob_sha1", git_blob_hash(config.source_path)}};
    }
    if (!config.dataset_path.empty() && fs::exists(config.dataset_path)) {
      inputs["dataset_file"] = {{"path", config.dataset_path},
                                {"git_blob_sha1", git_blob_hash(config.dataset_path)}};
    }
    manifest["inputs"] = inputs;
    manifest["f_star"] = std::isfinite(setup.f_star) ? json(setup.f_star) : json(nullptr);
    manifest["conventions"] = {
        {"grad_eval_accounting",
         "counted per-sample evaluations; R-SVRG epoch = N + 2*batch_size*m_s, R-SGD epoch = "
         "batch_size*m_s (per-epoch full gradients are diagnostic only), R-SD iteration = N + "
         "trials*N/2 (line-search cost evaluations count as N/2)"},
        {"wall_time_column", "trace CSVs write 0 so reruns are byte-identical; measured "
                             "wall_seconds per cell are recorded below"},
        {"stopping_rule", "epoch full-gradient norm <= grad_tol, or max_epochs"}};
    json jcells = json::array();
    for (const auto& row : summary) {
      const CellOutcome& c = row.cell;
      json jc = {{"algorithm", c.algorithm},
                 {"schedule", c.schedule},
                 {"trace_file", c.trace_file},
                 {"failed", c.failed},
                 {"error", c.error},
                 {"converged", c.converged},
                 {"epochs", c.epochs},
                 {"wall_seconds", c.wall_seconds},
                 {"best", row.best}};
      jc["final_train_loss"] =
          std::isfinite(c.final_train_loss) ? json(c.final_train_loss) : json(nullptr);
      jc["final_test_loss"] =
          std::isfinite(c.final_test_loss) ? json(c.final_test_loss) : json(nullptr);
      jc["final_optimality_gap"] = std::isfinite(c.final_gap) ? json(c.final_gap) : json(nullptr);
      jc["final_grad_norm"] =
          std::isfinite(c.final_grad_norm) ? json(c.final_grad_norm) : json(nullptr);
      jc["grad_evals_over_n"] =
          std::isfinite(c.grad_evals_over_n) ? json(c.grad_evals_over_n) : json(nullptr);
      jcells.push_back(jc);
    }
    manifest["cells"] = jcells;
    std::ofstream out(fs::path(config.out_dir) / "manifest.json");
    out << manifest.dump(2) << '\n';
  }

  ExperimentResult result;
  result.out_dir = config.out_dir;
  result.summary = summary;
  result.total_cells = static_cast<long>(outcomes.size());
  for (const auto& c : outcomes) {
    if (c.failed) ++result.failed_cells;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

void emit_plot_data(const std::string& artifact_dir) {
  const fs::path dir(artifact_dir);
  std::ifstream min(dir / "manifest.json");
  if (!min) throw ConfigError("emit_plot_data: no manifest.json in '" + artifact_dir + "'");
  json manifest;
  min >> manifest;

  struct MetricColumn {
    const char* name;
    double TraceRecord::* field;
  };
  const MetricColumn metrics[] = {{"train_loss", &TraceRecord::train_loss},
                                  {"test_loss", &TraceRecord::test_loss},
                                  {"optimality_gap", &TraceRecord::optimality_gap},
                                  {"grad_norm", &TraceRecord::full_grad_norm}};

  for (const auto& metric : metrics) {
    std::ofstream out(dir / (std::string("plot_") + metric.name + ".csv"));
    out << "algorithm,schedule,x,y\n";
    for (const auto& cell : manifest.at("cells")) {
      if (cell.at("failed").get<bool>()) continue;
      const auto trace =
          detail_csv::read_trace_csv((dir / cell.at("trace_file").get<std::string>()).string());
      for (const TraceRecord& rec : trace) {
        const double y = rec.*(metric.field);
        if (!std::isfinite(y)) continue;
        out << cell.at("algorithm").get<std::string>() << ','
            << cell.at("schedule").get<std::string>() << ','
            << detail_csv::format_double(rec.grad_evals_over_n) << ','
            << detail_csv::format_double(y) << '\n';
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Artifact verification
// ---------------------------------------------------------------------------

int verify_artifacts(const std::string& artifact_dir) {
  const fs::path dir(artifact_dir);
  std::ifstream min(dir / "manifest.json");
  if (!min) throw ConfigError("verify: no manifest.json in '" + artifact_dir + "'");
  json manifest;
  min >> manifest;

  ExperimentConfig config = config_from_json(manifest.at("config"));
  const ProblemSetup setup = build_problem(config);

  // Pick the best variance-reduced cell to replay.
  std::optional<json> target;
  for (const auto& cell : manifest.at("cells")) {
    const std::string algo = cell.at("algorithm").get<std::string>();
    if (cell.at("failed").get<bool>() || (algo != "rsvrg" && algo != "rsvrg_plus")) continue;
    if (cell.at("best").get<bool>()) {
      target = cell;
      break;
    }
    if (!target) target = cell;
  }
  if (!target) {
    std::cout << "verify: no variance-reduced cells in this experiment; nothing to check\n";
    return 0;
  }

  // Recover the schedule parameters from the config echo by name.
  std::optional<Schedule> schedule;
  for (const auto& js : manifest.at("config").at("schedules")) {
    const Schedule s = schedule_from_json(js);
    if (s.name() == target->at("schedule").get<std::string>()) {
      schedule = s;
      break;
    }
  }
  if (!schedule) throw ConfigError("verify: schedule of best cell not found in manifest");

  OptimizerConfig opt = config.optim;
  opt.variant = target->at("algorithm").get<std::string>() == "rsvrg" ? Variant::rsvrg
                                                                      : Variant::rsvrg_plus;
  opt.seed = config.seed;
  const long n = setup.problem->n_samples();
  const long m_s = opt.m_s > 0 ? opt.m_s : 5 * n;
  opt.checkpoint_stride = static_cast<int>(std::max<long>(1, m_s / 2));
  opt.max_checkpoints = 2 * opt.max_epochs + 2;

  std::cout << "verify: replaying " << target->at("algorithm").get<std::string>() << " / "
            << target->at("schedule").get<std::string>() << " with checkpoints\n";
  const RunResult replay =
      run_rsvrg(*setup.problem, opt, *schedule, setup.u0, setup.f_star);

  int failures = 0;
  const auto report = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << what << '\n';
    if (!ok) ++failures;
  };

  // Unbiasedness of the modified direction at recorded checkpoints.
  {
    double worst = 0.0;
    std::size_t checked = 0;
    for (const Checkpoint& cp : replay.checkpoints) {
      if (checked >= 20) break;
      const TangentVector mean = exact_xi_mean(*setup.problem, cp.point, cp.snapshot);
      const TangentVector full = setup.problem->full_grad(cp.point);
      worst = std::max(worst, (mean - full).norm());
      ++checked;
    }
    report(checked > 0 && worst <= 1e-10,
           "unbiasedness: max ||E[xi] - grad f|| = " + detail_csv::format_double(worst) + " over " +
               std::to_string(checked) + " checkpoints (tol 1e-10)");
  }

  // Variance shrinks between epoch 2 and the final epoch. Checkpoints at
  // t = 1 are excluded: there the direction is deterministic by construction.
  if (replay.trace.size() >= 3) {
    std::optional<Checkpoint> early, late;
    for (const Checkpoint& cp : replay.checkpoints) {
      if (cp.iteration <= 1) continue;
      if (cp.epoch == 2 && !early) early = cp;
      if (cp.epoch == replay.trace.back().epoch) late = cp;
    }
    if (early && late) {
      const double var_early = exact_xi_variance(*setup.problem, early->point, early->snapshot);
      const double var_late = exact_xi_variance(*setup.problem, late->point, late->snapshot);
      if (var_early <= 1e-18) {
        std::cout << "[skip] variance trend: epoch-2 variance already at numerical zero\n";
      } else {
        report(var_late < var_early, "variance trend: final epoch Var[xi] = " +
                                         detail_csv::format_double(var_late) +
                                         " < epoch-2 Var[xi] = " +
                                         detail_csv::format_double(var_early));
      }
    }
  }

  // Second-moment bound against the empirical Lipschitz constant.
  if (setup.reference) {
    double radius = 0.0;
    for (const Checkpoint& cp : replay.checkpoints) {
      radius = std::max(radius, distance(cp.point, *setup.reference));
      radius = std::max(radius, distance(cp.snapshot, *setup.reference));
    }
    radius = std::max(radius * 1.05, 1e-3);
    const LipschitzEstimate beta =
        estimate_beta(*setup.problem, *setup.reference, radius, 1000, mix_seed(config.seed, 7));
    const VarianceBoundReport bound =
        check_variance_bound(*setup.problem, replay.checkpoints, *setup.reference, beta.beta_hat);
    report(bound.n_violations == 0,
           "second-moment bound: " + std::to_string(bound.n_violations) + " violations over " +
               std::to_string(bound.n_checked) + " checkpoints (beta_hat = " +
               detail_csv::format_double(beta.beta_hat) +
               ", max ratio = " + detail_csv::format_double(bound.max_ratio) + ")");

    // Local rate of the replayed trajectory.
    if (replay.epoch_points.size() >= 6) {
      std::vector<double> dist_sq;
      for (const auto& p : replay.epoch_points) {
        const double dist = log_map(*setup.reference, p).norm();
        dist_sq.push_back(dist * dist);
      }
      const RateFit fit = fit_linear_rate(dist_sq, 20);
      report(fit.contraction < 1.0, "local rate: fitted contraction = " +
                                        detail_csv::format_double(fit.contraction) +
                                        " (r^2 = " + detail_csv::format_double(fit.r_squared) + ")");
    }
  } else {
    std::cout << "[skip] second-moment bound and rate fit: no reference minimizer for this "
                 "problem\n";
  }

  std::cout << (failures == 0 ? "verify: all checks passed\n"
                              : "verify: " + std::to_string(failures) + " check(s) failed\n");
  return failures;
}

}  // namespace grsvrg

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

#include <CLI11.hpp>

namespace grsvrg {

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Stochastic variance-reduced optimization on the Grassmann manifold"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int workers = 0;
  long long seed_override = -1;
  CLI::App* run = app.add_subcommand("run", "run an experiment grid from a config file");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--workers", workers, "max concurrent grid cells (default: hardware)");
  run->add_option("--seed", seed_override, "seed override");

  std::string plot_dir;
  CLI::App* plot = app.add_subcommand("plotdata", "emit tidy per-metric CSVs from an artifact dir");
  plot->add_option("dir", plot_dir, "artifact directory")->required();

  std::string verify_dir;
  CLI::App* verify = app.add_subcommand("verify", "replay and check an experiment's statistics");
  verify->add_option("dir", verify_dir, "artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      ExperimentConfig config = parse_config_file(config_path);
      if (!out_dir.empty()) config.out_dir = out_dir;
      if (seed_override >= 0) {
        config.seed = static_cast<std::uint64_t>(seed_override);
        config.optim.seed = config.seed;
      }
      const ExperimentResult result = run_experiment(config, workers);
      std::cout << "wrote " << result.total_cells << " cells to " << result.out_dir << " ("
                << result.failed_cells << " failed)\n";
      if (result.total_cells > 0 && result.failed_cells == result.total_cells) {
        for (const auto& row : result.summary) {
          std::cerr << "cell " << row.cell.algorithm << "/" << row.cell.schedule
                    << " failed: " << row.cell.error << '\n';
        }
        return 3;
      }
      return 0;
    }
    if (plot->parsed()) {
      emit_plot_data(plot_dir);
      std::cout << "wrote plot_*.csv to " << plot_dir << '\n';
      return 0;
    }
    if (verify->parsed()) {
      return verify_artifacts(verify_dir) == 0 ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace grsvrg
