#include <algorithm>
#include <numeric>

#include "tasksel/error.hpp"
#include "tasksel/rng.hpp"
#include "tasksel/selectors.hpp"

namespace tasksel {

namespace {

// Lazy Fisher-Yates over one task's members.
class TaskDrawer {
 public:
  TaskDrawer(const std::vector<std::size_t>& members, CounterRng rng)
      : pool_(members), rng_(rng) {}

  std::size_t draw() {
    const auto remaining = pool_.size() - taken_;
    const auto j = taken_ + static_cast<std::size_t>(rng_.below(remaining));
    std::swap(pool_[taken_], pool_[j]);
    return pool_[taken_++];
  }

 private:
  std::vector<std::size_t> pool_;
  std::size_t taken_ = 0;
  CounterRng rng_;
};

}  // namespace

void tally_tasks(const Pool& pool, SelectionResult& result) {
  result.per_task.assign(pool.partition().size(), 0);
  for (auto i : result.selected) ++result.per_task[pool.task_slot(i)];
}

SelectionResult round_robin(const AllocationVector& allocation,
                            const TaskPartition& partition, std::size_t budget,
                            std::uint64_t seed) {
  if (budget == 0) {
    throw Error(ErrorCode::kInvalidBudget, "budget must be positive");
  }
  const std::size_t tasks = partition.size();
  if (allocation.alpha.size() != tasks) {
    throw Error(ErrorCode::kShape, "allocation covers " +
                                       std::to_string(allocation.alpha.size()) +
                                       " tasks, partition has " + std::to_string(tasks));
  }

  std::vector<std::size_t> ceil_caps(tasks), caps(tasks);
  std::size_t available = 0;
  for (std::size_t t = 0; t < tasks; ++t) {
    ceil_caps[t] = ceil_alpha(allocation.alpha[t]);
    caps[t] = std::min(ceil_caps[t], partition.counts[t]);
    available += caps[t];
  }

  std::vector<std::size_t> order(tasks);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return ceil_caps[a] < ceil_caps[b]; });

  SelectionResult result;
  result.strategy = "round_robin";
  result.descriptor = "round_robin";
  result.seed = seed;
  result.per_task.assign(tasks, 0);
  result.selected.reserve(std::min(budget, available));

  std::vector<std::optional<TaskDrawer>> drawers(tasks);
  std::vector<std::size_t> active;
  for (auto t : order) {
    if (caps[t] > 0) active.push_back(t);
  }

  while (!active.empty() && result.selected.size() < budget) {
    std::size_t keep = 0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto t = active[a];
      if (result.selected.size() == budget) {
        active[keep++] = t;
        continue;
      }
      if (!drawers[t]) {
        drawers[t].emplace(partition.members[t],
                           CounterRng::for_stream(seed, partition.tasks[t]));
      }
      result.selected.push_back(drawers[t]->draw());
      if (++result.per_task[t] < caps[t]) active[keep++] = t;
    }
    active.resize(keep);
  }

  if (result.selected.size() < budget) {
    result.warnings.push_back("allocation exhausted: selected " +
                              std::to_string(result.selected.size()) + " of budget " +
                              std::to_string(budget));
  }
  return result;
}

}  // namespace tasksel
