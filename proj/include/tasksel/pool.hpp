#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tasksel {

/// Per-position candidate-token probabilities of a generated response, each
/// position sorted in descending order; entry 0 is the realized token.
using TokenTrace = std::vector<std::vector<double>>;

struct PromptRecord {
  std::string id;
  std::string task;
  std::optional<double> confidence;
  std::optional<TokenTrace> token_probs;

  bool operator==(const PromptRecord&) const = default;
};

/// Pool indices grouped by task label. Tasks are ordered lexicographically
/// (byte-wise) and members ascend by pool index.
struct TaskPartition {
  std::vector<std::string> tasks;
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> counts;

  std::size_t size() const noexcept { return tasks.size(); }
  std::size_t total() const noexcept;
  std::optional<std::size_t> find(std::string_view label) const;

  bool operator==(const TaskPartition&) const = default;
};

TaskPartition partition_by_task(std::span<const PromptRecord> records);

/// Dense row-major embedding storage with a per-row presence mask.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// Every row present. data.size() must equal rows * dim.
  EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<float> data);
  /// Rows given individually; empty rows are absent. Throws ShapeError when
  /// present rows disagree on dimension.
  static EmbeddingTable from_rows(const std::vector<std::vector<float>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool has(std::size_t i) const { return i < present_.size() && present_[i]; }
  bool complete() const noexcept { return rows_ > 0 && present_count_ == rows_; }
  bool empty() const noexcept { return present_count_ == 0; }
  std::span<const float> row(std::size_t i) const;
  std::span<const float> data() const noexcept { return data_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::size_t present_count_ = 0;
  std::vector<float> data_;
  std::vector<bool> present_;
};

/// Immutable prompt pool: records in file order plus the task partition.
class Pool {
 public:
  /// Validates every record (ids, probability ranges, embedding shapes) and
  /// builds the partition. An empty embedding table means "no embeddings".
  explicit Pool(std::vector<PromptRecord> records,
                EmbeddingTable embeddings = {});

  std::size_t size() const noexcept { return records_.size(); }
  const PromptRecord& operator[](std::size_t i) const { return records_[i]; }
  std::span<const PromptRecord> records() const noexcept { return records_; }
  const TaskPartition& partition() const noexcept { return partition_; }
  const EmbeddingTable& embeddings() const noexcept { return embeddings_; }
  std::optional<std::span<const float>> embedding(std::size_t i) const;

  /// Partition slot of record i.
  std::size_t task_slot(std::size_t i) const { return task_slot_[i]; }
  std::optional<std::size_t> find_id(std::string_view id) const;

 private:
  std::vector<PromptRecord> records_;
  EmbeddingTable embeddings_;
  TaskPartition partition_;
  std::vector<std::size_t> task_slot_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads a line-delimited JSON pool, optionally with a binary embedding
/// sidecar. Inline embeddings and a sidecar are mutually exclusive.
Pool load_pool(const std::filesystem::path& pool_path,
               const std::optional<std::filesystem::path>& embeddings_path = {});

TaskPartition partition_by_task(const Pool& pool);

/// Writes the pool back as line-delimited JSON with inline embeddings.
void save_pool(const Pool& pool, const std::filesystem::path& pool_path);

/// Sidecar: u64 LE rows, u64 LE dim, then rows*dim f32 LE, row-major.
EmbeddingTable read_embeddings_sidecar(const std::filesystem::path& path);
void write_embeddings_sidecar(const std::filesystem::path& path,
                              const EmbeddingTable& table);

}  // namespace tasksel
