#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tasksel/pool.hpp"
#include "tasksel/selectors.hpp"
#include "tasksel/strategy.hpp"

namespace tasksel {

inline constexpr std::string_view kManifestFormat = "tasksel.selection/1";

/// Input files echoed into the manifest alongside the strategy parameters.
struct ManifestInputs {
  std::string pool;
  std::optional<std::string> embeddings;
  std::optional<std::string> scores_cache;
};

/// JSON manifest text (with trailing newline). Output is a pure function of
/// its arguments, so identical runs produce identical bytes.
std::string render_manifest(const Pool& pool, const StrategyConfig& config,
                            const SelectionResult& result, const ManifestInputs& inputs);

struct ManifestTask {
  std::string task;
  std::size_t available = 0;
  std::size_t count = 0;
  std::optional<double> alpha;
  std::optional<std::size_t> alpha_ceil;
  std::optional<double> conf_t;
};

struct Manifest {
  std::string strategy;
  std::string descriptor;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::string> selected_ids;
  std::vector<ManifestTask> per_task;
  std::optional<std::vector<double>> objective_trace;
  std::vector<std::string> warnings;
  bool partial = false;
};

/// Throws ParseError on malformed or inconsistent manifests.
Manifest parse_manifest(std::string_view text);

/// Per-task allocation table sorted by count (descending, then label), with
/// strategy metadata and an objective-trace summary when present.
std::string format_report(const Manifest& manifest);

}  // namespace tasksel
