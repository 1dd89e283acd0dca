#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tasksel/pool.hpp"
#include "tasksel/scoring.hpp"

namespace tasksel {

/// Real-valued per-task budget. `target` is the budget after capping at the
/// pool size; the alphas sum to `target`.
struct AllocationVector {
  std::vector<double> alpha;
  std::size_t budget = 0;
  std::size_t target = 0;
  bool feasible = true;
  std::string strategy;
  /// Scale constant C of the weighted allocation, when one was solved for.
  std::optional<double> scale;
  std::vector<std::string> warnings;
};

/// Min-max allocation: the water-filling level L with alpha_t = min(n_t, L).
AllocationVector allocate_task_diversity(std::span<const std::size_t> counts,
                                         std::size_t budget);

inline constexpr std::size_t kDefaultBaseAllocation = 5;

/// Inverse-confidence allocation alpha_t = clamp(C / conf_t, min(base, n_t), n_t)
/// with C chosen so the alphas sum to the budget.
///
/// C comes from a sweep over the sorted clamp activation points
/// (lo_t * conf_t and n_t * conf_t): the total is linear between consecutive
/// points, so the crossing segment is solved in closed form. Bisection on C
/// takes over if the closed form misses the budget by more than 1e-9.
///
/// If the base allocations alone exceed the budget this falls back to
/// allocate_task_diversity and records a warning.
AllocationVector allocate_weighted(std::span<const std::size_t> counts,
                                   std::span<const double> task_conf,
                                   std::size_t budget,
                                   std::size_t base = kDefaultBaseAllocation);

/// Whole tasks in ascending confidence (ties by slot, i.e. label) until the
/// next one no longer fits; that task takes the remainder.
AllocationVector allocate_active_it(std::span<const std::size_t> counts,
                                    std::span<const double> task_conf,
                                    std::size_t budget);

/// Integer caps used by round-robin. A relative slack of 1e-9 absorbs
/// round-off so that 20.000000000000004 maps to 20.
std::size_t ceil_alpha(double alpha);

/// One JSON line per task: {label, count, conf_t?, alpha_real, alpha_ceil}.
std::string allocation_report_jsonl(const TaskPartition& partition,
                                    const AllocationVector& allocation,
                                    const TaskConfidence* task_conf = nullptr);

}  // namespace tasksel
