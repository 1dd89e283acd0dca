#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tasksel/kernel.hpp"
#include "tasksel/pool.hpp"
#include "tasksel/scoring.hpp"
#include "tasksel/selectors.hpp"

namespace tasksel {

enum class Strategy {
  kRandom,
  kLeastConfidence,
  kMeanEntropy,
  kMeanMargin,
  kMinMargin,
  kActiveIt,
  kKCenter,
  kFacilityLocation,
  kDpp,
  kTaskDiversity,
  kWeightedTaskDiversity,
};

std::string_view strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);
std::span<const Strategy> strategy_catalog();

struct StrategyConfig {
  Strategy strategy = Strategy::kWeightedTaskDiversity;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  std::size_t base_allocation = kDefaultBaseAllocation;
  KernelSpec kernel;
  double jitter = kDefaultDppJitter;
};

/// Runs one strategy end to end. The task strategies compose as
/// partition -> (task confidence, weighted only) -> allocation -> round_robin.
/// `scores` replaces on-the-fly scoring when given (e.g. from a cache).
SelectionResult run_strategy(const Pool& pool, const StrategyConfig& config,
                             std::span<const ExampleScores> scores = {});

}  // namespace tasksel
