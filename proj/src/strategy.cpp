#include "tasksel/strategy.hpp"

#include <array>

#include "tasksel/allocation.hpp"
#include "tasksel/error.hpp"

namespace tasksel {

namespace {

constexpr std::array kCatalog = {
    Strategy::kRandom,          Strategy::kLeastConfidence,
    Strategy::kMeanEntropy,     Strategy::kMeanMargin,
    Strategy::kMinMargin,       Strategy::kActiveIt,
    Strategy::kKCenter,         Strategy::kFacilityLocation,
    Strategy::kDpp,             Strategy::kTaskDiversity,
    Strategy::kWeightedTaskDiversity,
};

SelectionResult from_allocation(const Pool& pool, AllocationVector allocation,
                                const StrategyConfig& config, Strategy strategy) {
  auto result = round_robin(allocation, pool.partition(), config.budget, config.seed);
  result.strategy = std::string(strategy_name(strategy));
  result.descriptor = result.strategy;
  if (strategy == Strategy::kWeightedTaskDiversity) {
    result.descriptor += "(base=" + std::to_string(config.base_allocation) + ")";
  }
  std::vector<std::string> warnings = allocation.warnings;
  for (auto& w : result.warnings) warnings.push_back(std::move(w));
  result.warnings = std::move(warnings);
  result.allocation = std::move(allocation);
  return result;
}

std::vector<ExampleScores> ensure_scores(const Pool& pool,
                                         std::span<const ExampleScores> scores) {
  if (!scores.empty()) {
    if (scores.size() != pool.size()) {
      throw Error(ErrorCode::kShape, "scores do not cover the pool");
    }
    return {scores.begin(), scores.end()};
  }
  return score_pool(pool);
}

TaskConfidence task_confidence_for(const Pool& pool,
                                   std::span<const ExampleScores> scores) {
  if (scores.empty()) return task_mean_confidence(pool, pool.partition());
  return task_mean_confidence(pool, pool.partition(), scores);
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kLeastConfidence: return "least_confidence";
    case Strategy::kMeanEntropy: return "mean_entropy";
    case Strategy::kMeanMargin: return "mean_margin";
    case Strategy::kMinMargin: return "min_margin";
    case Strategy::kActiveIt: return "active_it";
    case Strategy::kKCenter: return "k_center";
    case Strategy::kFacilityLocation: return "facility_location";
    case Strategy::kDpp: return "dpp";
    case Strategy::kTaskDiversity: return "task_diversity";
    case Strategy::kWeightedTaskDiversity: return "weighted_task_diversity";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (auto s : kCatalog) {
    if (strategy_name(s) == name) return s;
  }
  return std::nullopt;
}

std::span<const Strategy> strategy_catalog() { return kCatalog; }

SelectionResult run_strategy(const Pool& pool, const StrategyConfig& config,
                             std::span<const ExampleScores> scores) {
  if (config.budget == 0) {
    throw Error(ErrorCode::kInvalidBudget, "budget must be positive");
  }
  SelectionResult result;
  const auto& partition = pool.partition();
  switch (config.strategy) {
    case Strategy::kRandom:
      result = select_random(pool, config.budget, config.seed);
      break;
    case Strategy::kLeastConfidence:
    case Strategy::kMeanEntropy:
    case Strategy::kMeanMargin:
    case Strategy::kMinMargin: {
      const auto criterion =
          config.strategy == Strategy::kLeastConfidence ? UncertaintyCriterion::kLeastConfidence
          : config.strategy == Strategy::kMeanEntropy   ? UncertaintyCriterion::kMeanEntropy
          : config.strategy == Strategy::kMeanMargin    ? UncertaintyCriterion::kMeanMargin
                                                        : UncertaintyCriterion::kMinMargin;
      const auto s = ensure_scores(pool, scores);
      result = select_uncertainty(pool, s, criterion, config.budget);
      break;
    }
    case Strategy::kKCenter:
      result = select_k_center(pool, config.budget);
      break;
    case Strategy::kFacilityLocation:
      result = select_facility_location(pool, config.budget, config.kernel);
      break;
    case Strategy::kDpp:
      result = select_dpp(pool, config.budget, config.kernel, config.jitter);
      break;
    case Strategy::kTaskDiversity:
      result = from_allocation(pool, allocate_task_diversity(partition.counts, config.budget),
                               config, config.strategy);
      break;
    case Strategy::kWeightedTaskDiversity: {
      auto conf = task_confidence_for(pool, scores);
      result = from_allocation(
          pool,
          allocate_weighted(partition.counts, conf.values, config.budget,
                            config.base_allocation),
          config, config.strategy);
      result.task_confidence = std::move(conf);
      break;
    }
    case Strategy::kActiveIt: {
      auto conf = task_confidence_for(pool, scores);
      result = from_allocation(
          pool, allocate_active_it(partition.counts, conf.values, config.budget), config,
          config.strategy);
      result.task_confidence = std::move(conf);
      break;
    }
  }
  result.seed = config.seed;
  return result;
}

}  // namespace tasksel
