#include "tasksel/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "tasksel/error.hpp"

namespace tasksel {

namespace {

std::size_t total_of(std::span<const std::size_t> counts) {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

void check_instance(std::span<const std::size_t> counts, std::size_t budget) {
  if (counts.empty()) {
    throw Error(ErrorCode::kNoTasks, "allocation needs at least one task");
  }
  if (budget == 0) {
    throw Error(ErrorCode::kInvalidBudget, "budget must be positive");
  }
}

void check_conf(std::span<const std::size_t> counts, std::span<const double> conf) {
  if (conf.size() != counts.size()) {
    throw Error(ErrorCode::kShape, "got " + std::to_string(conf.size()) +
                                       " task confidences for " +
                                       std::to_string(counts.size()) + " tasks");
  }
  for (double c : conf) {
    if (std::isnan(c)) {
      throw Error(ErrorCode::kValidation, "task confidence is NaN");
    }
  }
}

AllocationVector start(std::span<const std::size_t> counts, std::size_t budget,
                       std::string strategy) {
  AllocationVector a;
  a.alpha.assign(counts.size(), 0.0);
  a.budget = budget;
  a.strategy = std::move(strategy);
  const std::size_t total = total_of(counts);
  a.target = std::min(budget, total);
  if (budget > total) {
    a.feasible = false;
    a.warnings.push_back("budget " + std::to_string(budget) +
                         " exceeds pool size " + std::to_string(total) +
                         "; capped to " + std::to_string(total));
  }
  return a;
}

struct WeightedProblem {
  std::vector<double> lo, hi, conf;
  double target = 0.0;

  double alpha(std::size_t t, double scale) const {
    return std::clamp(scale / conf[t], lo[t], hi[t]);
  }
  double total(double scale) const {
    double s = 0.0;
    for (std::size_t t = 0; t < lo.size(); ++t) s += alpha(t, scale);
    return s;
  }
};

double solve_scale_sweep(const WeightedProblem& p) {
  const std::size_t n = p.lo.size();
  struct Event {
    double at;
    std::size_t task;
    bool upper;
  };
  std::vector<Event> events;
  events.reserve(2 * n);
  double fixed = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    fixed += p.lo[t];
    if (p.lo[t] == p.hi[t]) continue;  // never free
    events.push_back({p.lo[t] * p.conf[t], t, false});
    events.push_back({p.hi[t] * p.conf[t], t, true});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.at != b.at) return a.at < b.at;
    if (a.upper != b.upper) return !a.upper;
    return a.task < b.task;
  });

  double slope = 0.0;
  double prev = 0.0;
  for (std::size_t e = 0; e < events.size();) {
    const double at = events[e].at;
    if (slope > 0.0 && fixed + slope * at >= p.target) {
      // Crossing lies in [prev, at]; rebuild that segment's line exactly.
      const double mid = 0.5 * (prev + at);
      double seg_fixed = 0.0;
      double seg_slope = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        if (p.lo[t] == p.hi[t] || p.lo[t] * p.conf[t] > mid) {
          seg_fixed += p.lo[t];
        } else if (p.hi[t] * p.conf[t] < mid) {
          seg_fixed += p.hi[t];
        } else {
          seg_slope += 1.0 / p.conf[t];
        }
      }
      return (p.target - seg_fixed) / seg_slope;
    }
    for (; e < events.size() && events[e].at == at; ++e) {
      const auto t = events[e].task;
      if (events[e].upper) {
        fixed += p.hi[t];
        slope -= 1.0 / p.conf[t];
      } else {
        fixed -= p.lo[t];
        slope += 1.0 / p.conf[t];
      }
    }
    if (slope < 0.0) slope = 0.0;
    prev = at;
  }
  return prev;
}

double solve_scale_bisection(const WeightedProblem& p, double lo_c, double hi_c) {
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo_c + hi_c);
    const double f = p.total(mid);
    if (std::abs(f - p.target) <= 1e-9) return mid;
    if (f < p.target) {
      lo_c = mid;
    } else {
      hi_c = mid;
    }
  }
  return 0.5 * (lo_c + hi_c);
}

}  // namespace

std::size_t ceil_alpha(double alpha) {
  if (!(alpha > 0.0)) return 0;
  const double slack = 1e-9 * std::max(1.0, alpha);
  return static_cast<std::size_t>(std::ceil(alpha - slack));
}

AllocationVector allocate_task_diversity(std::span<const std::size_t> counts,
                                         std::size_t budget) {
  check_instance(counts, budget);
  auto a = start(counts, budget, "task_diversity");

  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto x, auto y) { return counts[x] < counts[y]; });

  std::size_t remaining = a.target;
  std::size_t open = counts.size();
  std::size_t k = 0;
  // Saturate every task that fits under the current level.
  for (; k < order.size(); ++k) {
    const auto n = counts[order[k]];
    if (n * open > remaining) break;
    a.alpha[order[k]] = static_cast<double>(n);
    remaining -= n;
    --open;
  }
  if (open > 0) {
    const double level = static_cast<double>(remaining) / static_cast<double>(open);
    for (; k < order.size(); ++k) a.alpha[order[k]] = level;
  }
  return a;
}

AllocationVector allocate_weighted(std::span<const std::size_t> counts,
                                   std::span<const double> task_conf,
                                   std::size_t budget, std::size_t base) {
  check_instance(counts, budget);
  check_conf(counts, task_conf);
  auto a = start(counts, budget, "weighted_task_diversity");

  WeightedProblem p;
  p.target = static_cast<double>(a.target);
  std::size_t base_total = 0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    const auto floor_n = std::min(base, counts[t]);
    base_total += floor_n;
    p.lo.push_back(static_cast<double>(floor_n));
    p.hi.push_back(static_cast<double>(counts[t]));
    p.conf.push_back(std::max(task_conf[t], kTaskConfidenceFloor));
  }

  if (base_total > a.target) {
    auto fallback = allocate_task_diversity(counts, budget);
    fallback.strategy = "weighted_task_diversity";
    fallback.feasible = false;
    fallback.warnings.push_back(
        "InfeasibleBase: base allocations need " + std::to_string(base_total) +
        " examples but the budget is " + std::to_string(a.target) +
        "; fell back to task diversity");
    return fallback;
  }

  double scale = 0.0;
  if (base_total == a.target) {
    scale = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < counts.size(); ++t) {
      scale = std::min(scale, p.lo[t] * p.conf[t]);
    }
  } else if (a.target == total_of(counts)) {
    for (std::size_t t = 0; t < counts.size(); ++t) {
      scale = std::max(scale, p.hi[t] * p.conf[t]);
    }
  } else {
    scale = solve_scale_sweep(p);
    if (!(std::abs(p.total(scale) - p.target) <= 1e-9)) {
      double hi_c = 0.0;
      for (std::size_t t = 0; t < counts.size(); ++t) {
        hi_c = std::max(hi_c, p.hi[t] * p.conf[t]);
      }
      scale = solve_scale_bisection(p, 0.0, hi_c);
    }
  }
  a.scale = scale;
  for (std::size_t t = 0; t < counts.size(); ++t) a.alpha[t] = p.alpha(t, scale);
  return a;
}

AllocationVector allocate_active_it(std::span<const std::size_t> counts,
                                    std::span<const double> task_conf,
                                    std::size_t budget) {
  check_instance(counts, budget);
  check_conf(counts, task_conf);
  auto a = start(counts, budget, "active_it");

  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto x, auto y) { return task_conf[x] < task_conf[y]; });

  std::size_t remaining = a.target;
  for (auto t : order) {
    if (remaining == 0) break;
    const auto take = std::min(counts[t], remaining);
    a.alpha[t] = static_cast<double>(take);
    remaining -= take;
  }
  return a;
}

std::string allocation_report_jsonl(const TaskPartition& partition,
                                    const AllocationVector& allocation,
                                    const TaskConfidence* task_conf) {
  std::string out;
  for (std::size_t t = 0; t < partition.size(); ++t) {
    nlohmann::json obj;
    obj["label"] = partition.tasks[t];
    obj["count"] = partition.counts[t];
    if (task_conf) obj["conf_t"] = task_conf->values[t];
    obj["alpha_real"] = allocation.alpha[t];
    obj["alpha_ceil"] = ceil_alpha(allocation.alpha[t]);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace tasksel
