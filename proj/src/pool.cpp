#include "tasksel/pool.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "tasksel/error.hpp"
#include "tasksel/io.hpp"

namespace tasksel {

namespace {

using nlohmann::json;

std::string at_line(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

void validate_record(const PromptRecord& r, const std::string& where) {
  if (r.id.empty()) {
    throw Error(ErrorCode::kValidation, where + "empty id");
  }
  if (r.confidence) {
    const double c = *r.confidence;
    if (!std::isfinite(c) || c <= 0.0 || c > 1.0) {
      throw Error(ErrorCode::kValidation,
                  where + "confidence of '" + r.id + "' outside (0, 1]");
    }
  }
  if (r.token_probs) {
    for (std::size_t j = 0; j < r.token_probs->size(); ++j) {
      const auto& pos = (*r.token_probs)[j];
      if (pos.empty()) {
        throw Error(ErrorCode::kValidation, where + "token_probs position " +
                                                std::to_string(j) + " of '" +
                                                r.id + "' is empty");
      }
      for (std::size_t i = 0; i < pos.size(); ++i) {
        const double p = pos[i];
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
          throw Error(ErrorCode::kValidation,
                      where + "probability outside [0, 1] in '" + r.id + "'");
        }
        if (i > 0 && p > pos[i - 1]) {
          throw Error(ErrorCode::kValidation,
                      where + "token_probs position " + std::to_string(j) +
                          " of '" + r.id + "' is not in descending order");
        }
      }
    }
  }
}

double number_field(const json& v, const char* name, const std::string& where) {
  if (!v.is_number()) {
    throw Error(ErrorCode::kParse, where + "'" + name + "' must be a number");
  }
  return v.get<double>();
}

std::vector<float> parse_embedding(const json& v, const std::string& where) {
  if (!v.is_array()) {
    throw Error(ErrorCode::kParse, where + "'embedding' must be an array");
  }
  std::vector<float> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    const double value = number_field(x, "embedding", where);
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kValidation, where + "non-finite embedding value");
    }
    out.push_back(static_cast<float>(value));
  }
  if (out.empty()) {
    throw Error(ErrorCode::kShape, where + "embedding has dimension 0");
  }
  return out;
}

TokenTrace parse_trace(const json& v, const std::string& where) {
  if (!v.is_array()) {
    throw Error(ErrorCode::kParse, where + "'token_probs' must be an array of arrays");
  }
  TokenTrace trace;
  trace.reserve(v.size());
  for (const auto& pos : v) {
    if (!pos.is_array()) {
      throw Error(ErrorCode::kParse, where + "'token_probs' must be an array of arrays");
    }
    std::vector<double> probs;
    probs.reserve(pos.size());
    for (const auto& p : pos) probs.push_back(number_field(p, "token_probs", where));
    trace.push_back(std::move(probs));
  }
  return trace;
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

}  // namespace

std::size_t TaskPartition::total() const noexcept {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::optional<std::size_t> TaskPartition::find(std::string_view label) const {
  auto it = std::lower_bound(tasks.begin(), tasks.end(), label);
  if (it == tasks.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - tasks.begin());
}

TaskPartition partition_by_task(std::span<const PromptRecord> records) {
  std::map<std::string, std::vector<std::size_t>, std::less<>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    groups[records[i].task].push_back(i);
  }
  TaskPartition p;
  p.tasks.reserve(groups.size());
  p.members.reserve(groups.size());
  p.counts.reserve(groups.size());
  for (auto& [label, members] : groups) {
    p.tasks.push_back(label);
    p.counts.push_back(members.size());
    p.members.push_back(std::move(members));
  }
  return p;
}

TaskPartition partition_by_task(const Pool& pool) { return pool.partition(); }

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim,
                               std::vector<float> data)
    : rows_(rows), dim_(dim), present_count_(rows), data_(std::move(data)),
      present_(rows, true) {
  if (rows > 0 && dim == 0) {
    throw Error(ErrorCode::kShape, "embedding dimension must be at least 1");
  }
  if (data_.size() != rows * dim) {
    throw Error(ErrorCode::kShape, "embedding buffer has " +
                                       std::to_string(data_.size()) +
                                       " values, expected " +
                                       std::to_string(rows * dim));
  }
}

EmbeddingTable EmbeddingTable::from_rows(
    const std::vector<std::vector<float>>& rows) {
  EmbeddingTable t;
  t.rows_ = rows.size();
  t.present_.assign(rows.size(), false);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    if (t.dim_ == 0) {
      t.dim_ = rows[i].size();
    } else if (rows[i].size() != t.dim_) {
      throw Error(ErrorCode::kShape,
                  "embedding of row " + std::to_string(i) + " has dimension " +
                      std::to_string(rows[i].size()) + ", expected " +
                      std::to_string(t.dim_));
    }
  }
  if (t.dim_ == 0) return EmbeddingTable{};
  t.data_.assign(t.rows_ * t.dim_, 0.0f);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    std::copy(rows[i].begin(), rows[i].end(), t.data_.begin() + i * t.dim_);
    t.present_[i] = true;
    ++t.present_count_;
  }
  return t;
}

std::span<const float> EmbeddingTable::row(std::size_t i) const {
  return std::span<const float>(data_).subspan(i * dim_, dim_);
}

Pool::Pool(std::vector<PromptRecord> records, EmbeddingTable embeddings)
    : records_(std::move(records)), embeddings_(std::move(embeddings)) {
  if (records_.empty()) {
    throw Error(ErrorCode::kValidation, "pool is empty");
  }
  if (!embeddings_.empty() && embeddings_.rows() != records_.size()) {
    throw Error(ErrorCode::kShape,
                "embedding table has " + std::to_string(embeddings_.rows()) +
                    " rows for " + std::to_string(records_.size()) + " records");
  }
  if (embeddings_.empty()) embeddings_ = EmbeddingTable{};
  by_id_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    validate_record(records_[i], "record " + std::to_string(i) + ": ");
    if (!by_id_.emplace(records_[i].id, i).second) {
      throw Error(ErrorCode::kDuplicateId, "id '" + records_[i].id + "' repeats");
    }
  }
  partition_ = partition_by_task(std::span<const PromptRecord>(records_));
  task_slot_.resize(records_.size());
  for (std::size_t t = 0; t < partition_.size(); ++t) {
    for (auto i : partition_.members[t]) task_slot_[i] = t;
  }
}

std::optional<std::span<const float>> Pool::embedding(std::size_t i) const {
  if (!embeddings_.has(i)) return std::nullopt;
  return embeddings_.row(i);
}

std::optional<std::size_t> Pool::find_id(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Pool load_pool(const std::filesystem::path& pool_path,
               const std::optional<std::filesystem::path>& embeddings_path) {
  std::ifstream in(pool_path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open pool file " + pool_path.string());
  }

  std::vector<PromptRecord> records;
  std::vector<std::vector<float>> inline_rows;
  std::unordered_map<std::string, std::size_t> seen;
  bool any_inline = false;
  std::size_t inline_dim = 0;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = at_line(lineno);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kParse, where + "record must be a JSON object");
    }

    PromptRecord r;
    auto id = obj.find("id");
    auto task = obj.find("task");
    if (id == obj.end() || !id->is_string()) {
      throw Error(ErrorCode::kParse, where + "missing string field 'id'");
    }
    if (task == obj.end() || !task->is_string()) {
      throw Error(ErrorCode::kParse, where + "missing string field 'task'");
    }
    r.id = id->get<std::string>();
    r.task = task->get<std::string>();

    if (auto c = obj.find("confidence"); c != obj.end() && !c->is_null()) {
      r.confidence = number_field(*c, "confidence", where);
    }
    if (auto t = obj.find("token_probs"); t != obj.end() && !t->is_null()) {
      r.token_probs = parse_trace(*t, where);
    }
    std::vector<float> emb;
    if (auto e = obj.find("embedding"); e != obj.end() && !e->is_null()) {
      emb = parse_embedding(*e, where);
      if (inline_dim == 0) {
        inline_dim = emb.size();
      } else if (emb.size() != inline_dim) {
        throw Error(ErrorCode::kShape, where + "embedding has dimension " +
                                           std::to_string(emb.size()) +
                                           ", expected " + std::to_string(inline_dim));
      }
      any_inline = true;
    }

    validate_record(r, where);
    if (!seen.emplace(r.id, lineno).second) {
      throw Error(ErrorCode::kDuplicateId,
                  where + "id '" + r.id + "' already used on line " +
                      std::to_string(seen[r.id]));
    }
    records.push_back(std::move(r));
    inline_rows.push_back(std::move(emb));
  }

  EmbeddingTable table;
  if (embeddings_path) {
    if (any_inline) {
      throw Error(ErrorCode::kValidation,
                  "pool has inline embeddings and an embedding sidecar was given");
    }
    table = read_embeddings_sidecar(*embeddings_path);
    if (table.rows() != records.size()) {
      throw Error(ErrorCode::kShape,
                  "embedding sidecar has " + std::to_string(table.rows()) +
                      " rows, pool has " + std::to_string(records.size()) +
                      " records");
    }
  } else if (any_inline) {
    table = EmbeddingTable::from_rows(inline_rows);
  }
  return Pool(std::move(records), std::move(table));
}

void save_pool(const Pool& pool, const std::filesystem::path& pool_path) {
  std::string out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& r = pool[i];
    json obj;
    obj["id"] = r.id;
    obj["task"] = r.task;
    if (auto e = pool.embedding(i)) {
      auto& arr = obj["embedding"] = json::array();
      for (float v : *e) arr.push_back(static_cast<double>(v));
    }
    if (r.confidence) obj["confidence"] = *r.confidence;
    if (r.token_probs) obj["token_probs"] = *r.token_probs;
    out += obj.dump();
    out += '\n';
  }
  write_file_atomic(pool_path, out);
}

EmbeddingTable read_embeddings_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open embedding sidecar " + path.string());
  }
  std::uint64_t header[2] = {0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(header))) {
    throw Error(ErrorCode::kShape, "embedding sidecar header truncated");
  }
  const std::uint64_t rows = to_le(header[0]);
  const std::uint64_t dim = to_le(header[1]);
  if (dim == 0) {
    throw Error(ErrorCode::kShape, "embedding sidecar declares dimension 0");
  }
  const auto file_size = std::filesystem::file_size(path);
  if (rows > (file_size - sizeof(header)) / 4 / dim ||
      file_size != sizeof(header) + rows * dim * 4) {
    throw Error(ErrorCode::kShape,
                "embedding sidecar size does not match its header (" +
                    std::to_string(rows) + " x " + std::to_string(dim) + ")");
  }
  std::vector<float> data(rows * dim);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : data) {
      v = std::bit_cast<float>(to_le(std::bit_cast<std::uint32_t>(v)));
    }
  }
  for (float v : data) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kValidation, "non-finite value in embedding sidecar");
    }
  }
  return EmbeddingTable(rows, dim, std::move(data));
}

void write_embeddings_sidecar(const std::filesystem::path& path,
                              const EmbeddingTable& table) {
  if (!table.complete()) {
    throw Error(ErrorCode::kMissingEmbedding,
                "sidecar requires an embedding for every row");
  }
  std::string buf(16 + table.data().size() * 4, '\0');
  const std::uint64_t header[2] = {to_le(static_cast<std::uint64_t>(table.rows())),
                                   to_le(static_cast<std::uint64_t>(table.dim()))};
  std::memcpy(buf.data(), header, sizeof(header));
  std::size_t off = 16;
  for (float v : table.data()) {
    const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(v));
    std::memcpy(buf.data() + off, &bits, 4);
    off += 4;
  }
  write_file_atomic(path, buf);
}

}  // namespace tasksel
