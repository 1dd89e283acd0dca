#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tasksel/pool.hpp"

namespace tasksel {

/// Per-example uncertainty scores. Fields stay empty when their inputs are
/// absent. Confidence is carried in log space; `confidence` holds the value
/// reported at the boundary (the precomputed field verbatim when present).
struct ExampleScores {
  std::optional<double> log_confidence;
  std::optional<double> confidence;
  std::optional<double> mean_entropy;
  std::optional<double> mean_margin;
  std::optional<double> min_margin;

  bool operator==(const ExampleScores&) const = default;
};

/// Sum of log realized-token probabilities (entry 0 of each position).
double log_confidence(const TokenTrace& trace);

/// Product of realized-token probabilities, accumulated in log space.
double confidence(const TokenTrace& trace);

/// Average Shannon entropy (natural log) over positions; 0 log 0 = 0.
double mean_entropy(const TokenTrace& trace);

struct Margins {
  double mean = 0.0;
  double min = 0.0;
};

/// Top-1 minus top-2 probability per position, averaged and minimized.
Margins margins(const TokenTrace& trace);

ExampleScores score_example(const PromptRecord& record);
std::vector<ExampleScores> score_pool(const Pool& pool);

/// Mean raw confidence per task, aligned with `partition.tasks`.
struct TaskConfidence {
  std::vector<double> values;
};

/// Lower bound applied to task confidences before they are inverted.
inline constexpr double kTaskConfidenceFloor = 1e-12;

TaskConfidence task_mean_confidence(const Pool& pool,
                                    const TaskPartition& partition);

/// Same, from already-computed scores (e.g. a loaded cache).
TaskConfidence task_mean_confidence(const Pool& pool,
                                    const TaskPartition& partition,
                                    std::span<const ExampleScores> scores);

/// Line-delimited {id, confidence, log_confidence, mean_entropy, mean_margin,
/// min_margin}; absent scores are omitted.
std::string scores_to_jsonl(const Pool& pool, std::span<const ExampleScores> scores);
void write_scores_cache(const std::filesystem::path& path, const Pool& pool,
                        std::span<const ExampleScores> scores);

/// Loads a cache and aligns it to pool order. Every pool id must appear.
std::vector<ExampleScores> read_scores_cache(const std::filesystem::path& path,
                                             const Pool& pool);

}  // namespace tasksel
