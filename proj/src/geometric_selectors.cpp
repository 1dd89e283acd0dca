#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <span>

#include "tasksel/error.hpp"
#include "tasksel/selectors.hpp"

namespace tasksel {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t cap_budget(std::size_t budget, std::size_t n) {
  if (budget == 0) {
    throw Error(ErrorCode::kInvalidBudget, "budget must be positive");
  }
  return std::min(budget, n);
}

// Relative gap under which two greedy scores count as tied, so that values
// equal up to round-off resolve to the lower index.
constexpr double kTieTolerance = 1e-11;

// Index-ordered argmax over unselected entries; among entries within
// `rel_tol` of the maximum the lowest index wins.
std::size_t argmax_open(const Eigen::VectorXd& v, const std::vector<bool>& taken,
                        double rel_tol = 0.0) {
  double best_value = kNegInf;
  bool any = false;
  for (std::size_t i = 0; i < taken.size(); ++i) {
    if (taken[i]) continue;
    const double x = v[static_cast<Eigen::Index>(i)];
    if (!any || x > best_value) best_value = x;
    any = true;
  }
  if (!any) return taken.size();
  const double floor = best_value - rel_tol * std::abs(best_value);
  for (std::size_t i = 0; i < taken.size(); ++i) {
    if (!taken[i] && v[static_cast<Eigen::Index>(i)] >= floor) return i;
  }
  return taken.size();
}

SelectionResult wrap(const Pool& pool, GreedyPath path, std::string strategy,
                     std::string descriptor, std::size_t budget) {
  SelectionResult result;
  result.strategy = std::move(strategy);
  result.descriptor = std::move(descriptor);
  result.selected = std::move(path.picks);
  result.objective_trace = std::move(path.objective);
  result.partial = path.rank_exhausted;
  if (budget > pool.size()) {
    result.warnings.push_back("budget " + std::to_string(budget) +
                              " exceeds pool size " + std::to_string(pool.size()) +
                              "; capped to " + std::to_string(pool.size()));
  }
  if (path.rank_exhausted) {
    result.warnings.push_back("RankExhausted: kernel factorization broke down after " +
                              std::to_string(result.selected.size()) + " picks");
  }
  tally_tasks(pool, result);
  return result;
}

}  // namespace

GreedyPath k_center_greedy(const Points& points, std::size_t budget) {
  const auto n = static_cast<std::size_t>(points.rows());
  const auto k = cap_budget(budget, n);
  GreedyPath path;
  if (n == 0) return path;

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::VectorXd sq_norms(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    sq_norms[i] = row_dot(points, i, points.data() + i * points.cols());
  }
  // Total squared distance from each point to all points, in closed form.
  const Eigen::RowVectorXd centroid_sum = points.colwise().sum();
  Eigen::VectorXd spread(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    spread[i] = static_cast<double>(n) * sq_norms[i] + sq_norms.sum() -
                2.0 * row_dot(points, i, centroid_sum.data());
  }

  std::vector<bool> taken(n, false);
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (spread[static_cast<Eigen::Index>(i)] < spread[static_cast<Eigen::Index>(first)]) {
      first = i;
    }
  }

  Eigen::VectorXd nearest = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                                      std::numeric_limits<double>::infinity());
  Eigen::VectorXd dist;
  std::size_t pick = first;
  for (std::size_t s = 0; s < k; ++s) {
    taken[pick] = true;
    path.picks.push_back(pick);
    squared_distances(points, sq_norms, pick, dist);
    nearest = nearest.cwiseMin(dist);
    nearest[static_cast<Eigen::Index>(pick)] = 0.0;
    path.objective.push_back(std::sqrt(nearest.maxCoeff()));
    if (s + 1 < k) pick = argmax_open(nearest, taken);
  }
  return path;
}

GreedyPath facility_location_greedy(const Points& points, std::size_t budget,
                                    const KernelSpec& kernel) {
  const auto n = static_cast<std::size_t>(points.rows());
  const auto k = cap_budget(budget, n);
  GreedyPath path;
  if (n == 0) return path;

  KernelMatrix K(points, kernel, KernelMatrix::Role::kFacilityLocation);
  // Starting every client at a lower bound of its row (instead of -inf)
  // leaves F unchanged on non-empty sets and makes gains finite, which is
  // what the lazy heap needs.
  Eigen::VectorXd best = K.row_lower_bounds();
  const double base = best.sum();
  const Eigen::VectorXd first_gain = K.column_sums().array() - base;

  struct Entry {
    double gain;
    std::size_t index;
    std::size_t step;
  };
  auto lower_priority = [](const Entry& a, const Entry& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.index > b.index;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower_priority)> heap(
      lower_priority);
  for (std::size_t i = 0; i < n; ++i) {
    heap.push({first_gain[static_cast<Eigen::Index>(i)], i, 0});
  }

  // Stale entries are refreshed in batches that share one pass over the
  // points; refreshing extra entries only tightens their bounds.
  constexpr std::size_t kRefreshBatch = 64;
  Eigen::MatrixXd block;
  std::vector<std::size_t> cols;
  Eigen::VectorXd gains;
  auto refresh = [&](std::span<Entry> entries, std::size_t step) {
    const auto rows = static_cast<Eigen::Index>(n);
    for (std::size_t b0 = 0; b0 < entries.size(); b0 += kRefreshBatch) {
      const auto batch = entries.subspan(b0, std::min(kRefreshBatch, entries.size() - b0));
      cols.clear();
      for (const auto& e : batch) cols.push_back(e.index);
      gains = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(batch.size()));
      for (Eigen::Index i0 = 0; i0 < rows; i0 += KernelMatrix::kTileRows) {
        const auto len = std::min(KernelMatrix::kTileRows, rows - i0);
        K.tile(i0, len, cols, block);
        for (Eigen::Index c = 0; c < block.cols(); ++c) {
          gains[c] += (block.col(c) - best.segment(i0, len)).cwiseMax(0.0).sum();
        }
      }
      for (std::size_t c = 0; c < batch.size(); ++c) {
        batch[c].gain = gains[static_cast<Eigen::Index>(c)];
        batch[c].step = step;
      }
    }
  };

  double value = base;
  std::vector<Entry> pending;
  for (std::size_t step = 0; step < k; ++step) {
    std::optional<Entry> top;
    while (!heap.empty()) {
      if (heap.top().step == step) {
        top = heap.top();
        heap.pop();
        break;
      }
      pending.clear();
      while (!heap.empty() && heap.top().step != step && pending.size() < kRefreshBatch) {
        pending.push_back(heap.top());
        heap.pop();
      }
      refresh(pending, step);
      for (const auto& e : pending) heap.push(e);
    }
    if (!top) break;

    // Everything within tolerance of the leader is a tie; stale bounds in
    // that band are refreshed, and the lowest index among fresh ties wins.
    const double tol =
        kTieTolerance * std::max({1.0, std::abs(top->gain), std::abs(value)});
    pending.clear();
    while (!heap.empty() && heap.top().gain >= top->gain - tol) {
      pending.push_back(heap.top());
      heap.pop();
    }
    auto stale = std::partition(pending.begin(), pending.end(),
                                [step](const Entry& e) { return e.step == step; });
    refresh(std::span<Entry>(stale, pending.end()), step);
    Entry chosen = *top;
    for (auto& e : pending) {
      if (e.gain >= top->gain - tol && e.index < chosen.index) std::swap(chosen, e);
    }
    for (const auto& e : pending) heap.push(e);

    const std::size_t chosen_index[] = {chosen.index};
    for (Eigen::Index i0 = 0; i0 < static_cast<Eigen::Index>(n); i0 += KernelMatrix::kTileRows) {
      const auto len = std::min(KernelMatrix::kTileRows, static_cast<Eigen::Index>(n) - i0);
      K.tile(i0, len, chosen_index, block);
      best.segment(i0, len) = best.segment(i0, len).cwiseMax(block.col(0));
    }
    value = best.sum();
    path.picks.push_back(chosen.index);
    path.objective.push_back(value);
  }
  return path;
}

GreedyPath dpp_greedy(const Points& points, std::size_t budget, const KernelSpec& kernel,
                      double jitter) {
  if (!(jitter > 0.0) || !std::isfinite(jitter)) {
    throw Error(ErrorCode::kInvalidKernel, "DPP jitter must be positive");
  }
  const auto n = static_cast<std::size_t>(points.rows());
  const auto k = cap_budget(budget, n);
  GreedyPath path;
  if (n == 0) return path;

  KernelMatrix K(points, kernel, KernelMatrix::Role::kDpp);
  const auto nn = static_cast<Eigen::Index>(n);
  // residual[i] = K(i,i) + jitter - |c_i|^2, the squared Cholesky pivot that
  // point i would get if appended to the current selection.
  Eigen::VectorXd residual(nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    residual[i] = K.diagonal(static_cast<std::size_t>(i)) + jitter;
  }
  // Row s holds the s-th row of the factor's off-diagonal part, over all points.
  Eigen::MatrixXd factor(static_cast<Eigen::Index>(k), nn);
  std::vector<bool> taken(n, false);
  Eigen::VectorXd column;
  double logdet = 0.0;

  for (std::size_t s = 0; s < k; ++s) {
    const auto pick = argmax_open(residual, taken, kTieTolerance);
    const double pivot = residual[static_cast<Eigen::Index>(pick)];
    if (!(pivot > 0.0)) {
      path.rank_exhausted = true;
      break;
    }
    taken[pick] = true;
    logdet += std::log(pivot);
    path.picks.push_back(pick);
    path.objective.push_back(logdet);
    if (s + 1 == k) break;

    const auto rows = static_cast<Eigen::Index>(s);
    const auto p = static_cast<Eigen::Index>(pick);
    K.column(pick, column);
    Eigen::VectorXd e = column;
    if (rows > 0) {
      e.noalias() -= factor.topRows(rows).transpose() * factor.col(p).head(rows);
    }
    e /= std::sqrt(pivot);
    factor.row(rows) = e.transpose();
    residual.array() -= e.array().square();
  }
  return path;
}

SelectionResult select_k_center(const Pool& pool, std::size_t budget) {
  const Points z = points_from_pool(pool);
  return wrap(pool, k_center_greedy(z, budget), "k_center", "k_center(euclidean)",
              budget);
}

SelectionResult select_facility_location(const Pool& pool, std::size_t budget,
                                         const KernelSpec& kernel) {
  kernel.validate();
  const Points z = points_from_pool(pool);
  return wrap(pool, facility_location_greedy(z, budget, kernel), "facility_location",
              "facility_location(" + kernel.describe() + ")", budget);
}

SelectionResult select_dpp(const Pool& pool, std::size_t budget, const KernelSpec& kernel,
                           double jitter) {
  kernel.validate();
  const Points z = points_from_pool(pool);
  return wrap(pool, dpp_greedy(z, budget, kernel, jitter), "dpp",
              "dpp(" + kernel.describe() + ", jitter=" + std::to_string(jitter) + ")",
              budget);
}

}  // namespace tasksel
