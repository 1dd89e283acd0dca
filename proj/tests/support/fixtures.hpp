#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tasksel/kernel.hpp"
#include "tasksel/pool.hpp"

namespace tasksel::testing {

/// Pool with ids "r0".."rN" over the given task labels.
inline Pool make_pool(const std::vector<std::string>& tasks,
                      const std::vector<double>& confidences = {},
                      const std::vector<std::vector<float>>& embeddings = {}) {
  std::vector<PromptRecord> records;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    PromptRecord r;
    r.id = "r" + std::to_string(i);
    r.task = tasks[i];
    if (!confidences.empty()) r.confidence = confidences[i];
    records.push_back(std::move(r));
  }
  return Pool(std::move(records), embeddings.empty() ? EmbeddingTable{}
                                                     : EmbeddingTable::from_rows(embeddings));
}

/// Pool with one task and the given embeddings.
inline Pool make_point_pool(const oracle::PointList& points) {
  std::vector<std::string> tasks(points.size(), "t");
  std::vector<std::vector<float>> emb;
  for (const auto& p : points) emb.emplace_back(p.begin(), p.end());
  return make_pool(tasks, {}, emb);
}

inline Points to_points(const oracle::PointList& list) {
  Points z(static_cast<Eigen::Index>(list.size()),
           static_cast<Eigen::Index>(list.empty() ? 0 : list[0].size()));
  for (std::size_t i = 0; i < list.size(); ++i) {
    for (std::size_t j = 0; j < list[i].size(); ++j) {
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = list[i][j];
    }
  }
  return z;
}

inline oracle::PointList random_points(std::mt19937_64& gen, std::size_t n, std::size_t d,
                                       double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  oracle::PointList pts(n, std::vector<double>(d));
  for (auto& p : pts) {
    for (auto& x : p) x = u(gen);
  }
  return pts;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("tasksel-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace tasksel::testing
