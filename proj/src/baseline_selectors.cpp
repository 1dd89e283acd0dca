#include <algorithm>
#include <cmath>
#include <numeric>

#include "tasksel/error.hpp"
#include "tasksel/rng.hpp"
#include "tasksel/selectors.hpp"

namespace tasksel {

namespace {

std::size_t capped(const Pool& pool, std::size_t budget, SelectionResult& result) {
  if (budget == 0) {
    throw Error(ErrorCode::kInvalidBudget, "budget must be positive");
  }
  if (budget > pool.size()) {
    result.warnings.push_back("budget " + std::to_string(budget) +
                              " exceeds pool size " + std::to_string(pool.size()) +
                              "; capped to " + std::to_string(pool.size()));
    return pool.size();
  }
  return budget;
}

}  // namespace

std::string_view criterion_name(UncertaintyCriterion c) {
  switch (c) {
    case UncertaintyCriterion::kLeastConfidence: return "least_confidence";
    case UncertaintyCriterion::kMeanEntropy: return "mean_entropy";
    case UncertaintyCriterion::kMeanMargin: return "mean_margin";
    case UncertaintyCriterion::kMinMargin: return "min_margin";
  }
  return "unknown";
}

SelectionResult select_random(const Pool& pool, std::size_t budget, std::uint64_t seed) {
  SelectionResult result;
  result.strategy = "random";
  result.descriptor = "random";
  result.seed = seed;
  const auto k = capped(pool, budget, result);

  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = CounterRng::for_stream(seed, "random");
  for (std::size_t s = 0; s < k; ++s) {
    const auto j = s + static_cast<std::size_t>(rng.below(idx.size() - s));
    std::swap(idx[s], idx[j]);
  }
  idx.resize(k);
  result.selected = std::move(idx);
  tally_tasks(pool, result);
  return result;
}

SelectionResult select_uncertainty(const Pool& pool,
                                   std::span<const ExampleScores> scores,
                                   UncertaintyCriterion criterion,
                                   std::size_t budget) {
  SelectionResult result;
  result.strategy = std::string(criterion_name(criterion));
  result.descriptor = result.strategy;
  const auto k = capped(pool, budget, result);
  if (scores.size() != pool.size()) {
    throw Error(ErrorCode::kShape, "scores do not cover the pool");
  }

  // Keys are arranged so that ascending order means most uncertain first.
  std::vector<double> key(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& s = scores[i];
    std::optional<double> v;
    switch (criterion) {
      case UncertaintyCriterion::kLeastConfidence:
        if (s.log_confidence) {
          v = *s.log_confidence;
        } else if (s.confidence) {
          v = std::log(*s.confidence);
        }
        break;
      case UncertaintyCriterion::kMeanEntropy:
        if (s.mean_entropy) v = -*s.mean_entropy;
        break;
      case UncertaintyCriterion::kMeanMargin:
        v = s.mean_margin;
        break;
      case UncertaintyCriterion::kMinMargin:
        v = s.min_margin;
        break;
    }
    if (!v) {
      throw Error(ErrorCode::kMissingScore,
                  pool[i].id + " has no " + std::string(criterion_name(criterion)));
    }
    key[i] = *v;
  }

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), [&](auto a, auto b) {
                      if (key[a] != key[b]) return key[a] < key[b];
                      return a < b;
                    });
  order.resize(k);
  result.selected = std::move(order);
  tally_tasks(pool, result);
  return result;
}

}  // namespace tasksel
