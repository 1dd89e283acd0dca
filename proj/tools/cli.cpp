#include "cli.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "CLI11.hpp"

#include "tasksel/allocation.hpp"
#include "tasksel/error.hpp"
#include "tasksel/io.hpp"
#include "tasksel/manifest.hpp"
#include "tasksel/pool.hpp"
#include "tasksel/scoring.hpp"
#include "tasksel/strategy.hpp"

namespace tasksel::cli {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string pool;
  std::string embeddings;
  std::string strategy;
  long long budget = 0;
  std::uint64_t seed = 0;
  long long base_allocation = static_cast<long long>(kDefaultBaseAllocation);
  std::string kernel = "rbf";
  double gamma = 0.1;
  double jitter = kDefaultDppJitter;
  std::string scores_cache;
  std::string output;
  std::string manifest;
};

std::optional<std::string> opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

StrategyConfig to_strategy_config(const RunConfig& rc) {
  StrategyConfig sc;
  auto strategy = parse_strategy(rc.strategy);
  if (!strategy) {
    std::string names;
    for (auto s : strategy_catalog()) {
      names += names.empty() ? "" : ", ";
      names += strategy_name(s);
    }
    throw Error(ErrorCode::kConfig,
                "unknown strategy '" + rc.strategy + "' (expected one of: " + names + ")");
  }
  sc.strategy = *strategy;
  if (rc.budget < 1) {
    throw Error(ErrorCode::kConfig, "--budget must be at least 1");
  }
  sc.budget = static_cast<std::size_t>(rc.budget);
  sc.seed = rc.seed;
  if (rc.base_allocation < 0) {
    throw Error(ErrorCode::kConfig, "--base-allocation must be non-negative");
  }
  sc.base_allocation = static_cast<std::size_t>(rc.base_allocation);
  auto kind = parse_kernel_kind(rc.kernel);
  if (!kind) {
    throw Error(ErrorCode::kConfig,
                "unknown kernel '" + rc.kernel + "' (expected euclidean, rbf or cosine)");
  }
  sc.kernel = {*kind, rc.gamma};
  if (*kind == KernelKind::kRbf && !(rc.gamma > 0.0)) {
    throw Error(ErrorCode::kConfig, "--gamma must be positive for the rbf kernel");
  }
  if (!(rc.jitter > 0.0)) {
    throw Error(ErrorCode::kConfig, "--jitter must be positive");
  }
  sc.jitter = rc.jitter;
  return sc;
}

Pool load(const RunConfig& rc) {
  std::optional<fs::path> emb;
  if (!rc.embeddings.empty()) emb = rc.embeddings;
  return load_pool(rc.pool, emb);
}

bool needs_scores(Strategy s) {
  switch (s) {
    case Strategy::kLeastConfidence:
    case Strategy::kMeanEntropy:
    case Strategy::kMeanMargin:
    case Strategy::kMinMargin:
    case Strategy::kActiveIt:
    case Strategy::kWeightedTaskDiversity:
      return true;
    default:
      return false;
  }
}

// Reads the cache when it exists; otherwise scores the pool and writes it.
std::vector<ExampleScores> cached_scores(const Pool& pool, const std::string& cache) {
  if (fs::exists(cache)) return read_scores_cache(cache, pool);
  auto scores = score_pool(pool);
  write_scores_cache(cache, pool, scores);
  return scores;
}

int cmd_score(const RunConfig& rc, std::ostream& out) {
  const auto pool = load(rc);
  const auto scores = score_pool(pool);
  write_scores_cache(rc.output, pool, scores);
  out << "scored " << pool.size() << " records -> " << rc.output << "\n";
  return 0;
}

int cmd_allocate(const RunConfig& rc, std::ostream& out) {
  const auto config = to_strategy_config(rc);
  const auto pool = load(rc);
  const auto& partition = pool.partition();
  std::vector<ExampleScores> scores;
  if (!rc.scores_cache.empty()) scores = cached_scores(pool, rc.scores_cache);

  std::optional<TaskConfidence> conf;
  AllocationVector allocation;
  auto task_conf = [&] {
    return scores.empty() ? task_mean_confidence(pool, partition)
                          : task_mean_confidence(pool, partition, scores);
  };
  switch (config.strategy) {
    case Strategy::kTaskDiversity:
      allocation = allocate_task_diversity(partition.counts, config.budget);
      break;
    case Strategy::kWeightedTaskDiversity:
      conf = task_conf();
      allocation = allocate_weighted(partition.counts, conf->values, config.budget,
                                     config.base_allocation);
      break;
    case Strategy::kActiveIt:
      conf = task_conf();
      allocation = allocate_active_it(partition.counts, conf->values, config.budget);
      break;
    default:
      throw Error(ErrorCode::kConfig, "strategy '" + rc.strategy +
                                          "' has no task allocation; use task_diversity, "
                                          "weighted_task_diversity or active_it");
  }
  write_file_atomic(rc.output,
                    allocation_report_jsonl(partition, allocation, conf ? &*conf : nullptr));
  out << "allocated " << allocation.target << " over " << partition.size() << " tasks -> "
      << rc.output << "\n";
  return 0;
}

int cmd_select(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const auto config = to_strategy_config(rc);
  const auto pool = load(rc);
  std::vector<ExampleScores> scores;
  if (!rc.scores_cache.empty() && needs_scores(config.strategy)) {
    scores = cached_scores(pool, rc.scores_cache);
  }
  const auto result = run_strategy(pool, config, scores);
  ManifestInputs inputs{rc.pool, opt(rc.embeddings), opt(rc.scores_cache)};
  write_file_atomic(rc.output, render_manifest(pool, config, result, inputs));
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  out << "selected " << result.selected.size() << " of " << pool.size() << " with "
      << result.descriptor << " -> " << rc.output << "\n";
  return 0;
}

int cmd_report(const RunConfig& rc, std::ostream& out) {
  const auto manifest = parse_manifest(read_file(rc.manifest));
  out << format_report(manifest);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Budgeted prompt selection for annotation", "tasksel"};
  app.require_subcommand(1);

  auto pool_opts = [&](CLI::App* sub) {
    sub->add_option("--pool", rc.pool, "Line-delimited JSON prompt pool")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--embeddings", rc.embeddings,
                    "Binary embedding sidecar (u64 rows, u64 dim, f32 row-major)")
        ->check(CLI::ExistingFile);
  };
  auto strategy_opts = [&](CLI::App* sub) {
    sub->add_option("--strategy", rc.strategy, "Selection strategy")->required();
    sub->add_option("--budget", rc.budget, "Annotation budget k (>= 1)")->required();
    sub->add_option("--seed", rc.seed, "Sampling seed (default 0)");
    sub->add_option("--base-allocation", rc.base_allocation,
                    "Per-task floor for weighted task diversity (default 5)");
    sub->add_option("--kernel", rc.kernel,
                    "Similarity for facility location / DPP: euclidean, rbf, cosine "
                    "(default rbf)");
    sub->add_option("--gamma", rc.gamma, "RBF bandwidth (default 0.1; 0.002 also common)");
    sub->add_option("--jitter", rc.jitter, "DPP diagonal jitter (default 1e-6)");
    sub->add_option("--scores-cache", rc.scores_cache,
                    "Scores cache; read if present, otherwise written");
  };

  auto* score = app.add_subcommand("score", "Compute per-example uncertainty scores");
  pool_opts(score);
  score->add_option("--output", rc.output, "Scores cache to write")->required();

  auto* allocate = app.add_subcommand("allocate", "Write the per-task allocation report");
  pool_opts(allocate);
  strategy_opts(allocate);
  allocate->add_option("--output", rc.output, "Allocation report to write")->required();

  auto* select = app.add_subcommand("select", "Select prompts and write a manifest");
  pool_opts(select);
  strategy_opts(select);
  select->add_option("--output", rc.output, "Selection manifest to write")->required();

  auto* report = app.add_subcommand("report", "Summarize a selection manifest");
  report->add_option("manifest", rc.manifest, "Selection manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*score) return cmd_score(rc, out);
    if (*allocate) return cmd_allocate(rc, out);
    if (*select) return cmd_select(rc, out, err);
    if (*report) return cmd_report(rc, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfig ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace tasksel::cli
