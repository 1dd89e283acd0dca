#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tasksel/allocation.hpp"
#include "tasksel/kernel.hpp"
#include "tasksel/pool.hpp"
#include "tasksel/scoring.hpp"

namespace tasksel {

struct SelectionResult {
  /// Pool indices in pick order.
  std::vector<std::size_t> selected;
  /// Realized count per partition slot.
  std::vector<std::size_t> per_task;
  std::string strategy;
  std::string descriptor;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> objective_trace;
  /// Set when the DPP factorization broke down before the budget was met.
  bool partial = false;
  std::optional<AllocationVector> allocation;
  std::optional<TaskConfidence> task_confidence;
  std::vector<std::string> warnings;
};

/// Fills `per_task` from `selected`.
void tally_tasks(const Pool& pool, SelectionResult& result);

/// Materializes an allocation. Tasks are visited in ascending ceil(alpha)
/// (ties by slot); each pass gives one more member to every task still below
/// min(ceil(alpha_t), |X_t|), stopping the moment `budget` picks are made.
/// Members are drawn uniformly without replacement from a stream keyed by
/// (seed, task label).
SelectionResult round_robin(const AllocationVector& allocation,
                            const TaskPartition& partition, std::size_t budget,
                            std::uint64_t seed);

SelectionResult select_random(const Pool& pool, std::size_t budget, std::uint64_t seed);

enum class UncertaintyCriterion { kLeastConfidence, kMeanEntropy, kMeanMargin, kMinMargin };

std::string_view criterion_name(UncertaintyCriterion c);

/// Most-uncertain first: ascending confidence, descending entropy, ascending
/// mean or min margin. Ties go to the lower pool index.
SelectionResult select_uncertainty(const Pool& pool,
                                   std::span<const ExampleScores> scores,
                                   UncertaintyCriterion criterion,
                                   std::size_t budget);

/// Raw greedy output over a point matrix.
struct GreedyPath {
  std::vector<std::size_t> picks;
  std::vector<double> objective;
  bool rank_exhausted = false;
};

/// Farthest-first traversal seeded at the point with the least total squared
/// distance to all others. objective[s] is the covering radius after s+1 picks.
GreedyPath k_center_greedy(const Points& points, std::size_t budget);

/// Lazy greedy maximization of F(S) = sum_i max_{j in S} K(i, j).
/// objective[s] is F after s+1 picks.
GreedyPath facility_location_greedy(const Points& points, std::size_t budget,
                                    const KernelSpec& kernel);

inline constexpr double kDefaultDppJitter = 1e-6;

/// Greedy log det(K(S) + jitter I) via an incrementally grown Cholesky factor.
/// Each step takes the candidate with the largest residual variance d_i^2.
/// objective[s] is the log-determinant after s+1 picks.
GreedyPath dpp_greedy(const Points& points, std::size_t budget,
                      const KernelSpec& kernel, double jitter = kDefaultDppJitter);

SelectionResult select_k_center(const Pool& pool, std::size_t budget);
SelectionResult select_facility_location(const Pool& pool, std::size_t budget,
                                         const KernelSpec& kernel);
SelectionResult select_dpp(const Pool& pool, std::size_t budget,
                           const KernelSpec& kernel, double jitter = kDefaultDppJitter);

}  // namespace tasksel
