#include "tasksel/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "tasksel/error.hpp"
#include "tasksel/io.hpp"

namespace tasksel {

namespace {

using nlohmann::json;

void require_positions(const TokenTrace& trace) {
  if (trace.empty()) {
    throw Error(ErrorCode::kEmptySequence, "token trace has no positions");
  }
}

bool has_two_candidates(const TokenTrace& trace) {
  return std::all_of(trace.begin(), trace.end(),
                     [](const auto& pos) { return pos.size() >= 2; });
}

}  // namespace

double log_confidence(const TokenTrace& trace) {
  require_positions(trace);
  double sum = 0.0;
  for (const auto& pos : trace) {
    const double p = pos.empty() ? 0.0 : pos.front();
    if (!(p > 0.0)) {
      throw Error(ErrorCode::kDegenerateProbability,
                  "realized-token probability is zero");
    }
    sum += std::log(p);
  }
  return sum;
}

double confidence(const TokenTrace& trace) {
  return std::exp(log_confidence(trace));
}

double mean_entropy(const TokenTrace& trace) {
  require_positions(trace);
  double total = 0.0;
  for (const auto& pos : trace) {
    double mass = 0.0;
    double h = 0.0;
    for (double p : pos) {
      mass += p;
      if (p > 0.0) h -= p * std::log(p);
    }
    if (mass > 1.0 + 1e-6) {
      throw Error(ErrorCode::kValidation,
                  "position probabilities sum to " + std::to_string(mass));
    }
    total += h;
  }
  return total / static_cast<double>(trace.size());
}

Margins margins(const TokenTrace& trace) {
  require_positions(trace);
  double sum = 0.0;
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& pos : trace) {
    if (pos.size() < 2) {
      throw Error(ErrorCode::kInsufficientCandidates,
                  "margin needs at least two candidates per position");
    }
    const double m = pos[0] - pos[1];
    sum += m;
    lowest = std::min(lowest, m);
  }
  return {sum / static_cast<double>(trace.size()), lowest};
}

ExampleScores score_example(const PromptRecord& record) {
  ExampleScores s;
  if (record.confidence) {
    s.confidence = *record.confidence;
    s.log_confidence = std::log(*record.confidence);
  }
  if (record.token_probs) {
    const auto& trace = *record.token_probs;
    if (!s.confidence) {
      s.log_confidence = log_confidence(trace);
      s.confidence = std::exp(*s.log_confidence);
    }
    s.mean_entropy = mean_entropy(trace);
    // Positions with a single candidate carry no margin; leave both unset.
    if (has_two_candidates(trace)) {
      auto m = margins(trace);
      s.mean_margin = m.mean;
      s.min_margin = m.min;
    }
  }
  return s;
}

std::vector<ExampleScores> score_pool(const Pool& pool) {
  std::vector<ExampleScores> out;
  out.reserve(pool.size());
  for (const auto& r : pool.records()) {
    try {
      out.push_back(score_example(r));
    } catch (const Error& e) {
      throw Error(e.code(), "record '" + r.id + "': " + e.detail());
    }
  }
  return out;
}

TaskConfidence task_mean_confidence(const Pool& pool,
                                    const TaskPartition& partition,
                                    std::span<const ExampleScores> scores) {
  TaskConfidence tc;
  tc.values.reserve(partition.size());
  for (std::size_t t = 0; t < partition.size(); ++t) {
    double sum = 0.0;
    for (auto i : partition.members[t]) {
      const auto& c = scores[i].confidence;
      if (!c) {
        throw Error(ErrorCode::kMissingConfidence, pool[i].id);
      }
      sum += *c;
    }
    tc.values.push_back(sum / static_cast<double>(partition.members[t].size()));
  }
  return tc;
}

TaskConfidence task_mean_confidence(const Pool& pool,
                                    const TaskPartition& partition) {
  std::vector<ExampleScores> scores(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& r = pool[i];
    if (r.confidence) {
      scores[i].confidence = *r.confidence;
    } else if (r.token_probs) {
      scores[i].confidence = confidence(*r.token_probs);
    }
  }
  return task_mean_confidence(pool, partition, scores);
}

std::string scores_to_jsonl(const Pool& pool, std::span<const ExampleScores> scores) {
  std::string out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& s = scores[i];
    json obj;
    obj["id"] = pool[i].id;
    if (s.confidence) obj["confidence"] = *s.confidence;
    if (s.log_confidence) obj["log_confidence"] = *s.log_confidence;
    if (s.mean_entropy) obj["mean_entropy"] = *s.mean_entropy;
    if (s.mean_margin) obj["mean_margin"] = *s.mean_margin;
    if (s.min_margin) obj["min_margin"] = *s.min_margin;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_scores_cache(const std::filesystem::path& path, const Pool& pool,
                        std::span<const ExampleScores> scores) {
  write_file_atomic(path, scores_to_jsonl(pool, scores));
}

std::vector<ExampleScores> read_scores_cache(const std::filesystem::path& path,
                                             const Pool& pool) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open scores cache " + path.string());
  }
  std::vector<ExampleScores> scores(pool.size());
  std::vector<bool> seen(pool.size(), false);
  std::string line;
  std::size_t lineno = 0;
  auto number = [&](const json& obj, const char* key) -> std::optional<double> {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) {
      throw Error(ErrorCode::kParse, "scores cache line " + std::to_string(lineno) +
                                         ": '" + key + "' must be a number");
    }
    return it->get<double>();
  };
  while (std::getline(in, line)) {
    ++lineno;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse,
                  "scores cache line " + std::to_string(lineno) + ": " + e.what());
    }
    auto id = obj.is_object() ? obj.find("id") : obj.end();
    if (!obj.is_object() || id == obj.end() || !id->is_string()) {
      throw Error(ErrorCode::kParse,
                  "scores cache line " + std::to_string(lineno) + ": missing 'id'");
    }
    auto idx = pool.find_id(id->get<std::string>());
    if (!idx) {
      throw Error(ErrorCode::kValidation, "scores cache line " +
                                              std::to_string(lineno) + ": id '" +
                                              id->get<std::string>() +
                                              "' is not in the pool");
    }
    ExampleScores s;
    s.confidence = number(obj, "confidence");
    s.log_confidence = number(obj, "log_confidence");
    if (s.confidence && !s.log_confidence) s.log_confidence = std::log(*s.confidence);
    s.mean_entropy = number(obj, "mean_entropy");
    s.mean_margin = number(obj, "mean_margin");
    s.min_margin = number(obj, "min_margin");
    scores[*idx] = s;
    seen[*idx] = true;
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!seen[i]) {
      throw Error(ErrorCode::kMissingScore,
                  "scores cache has no entry for '" + pool[i].id + "'");
    }
  }
  return scores;
}

}  // namespace tasksel
