#include <algorithm>
#include <random>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tasksel/error.hpp"
#include "tasksel/io.hpp"
#include "tasksel/pool.hpp"

using namespace tasksel;
using tasksel::testing::TempDir;
using tasksel::testing::write_text;

namespace {

ErrorCode load_error(const std::filesystem::path& pool,
                     const std::optional<std::filesystem::path>& emb = {},
                     std::string* message = nullptr) {
  try {
    load_pool(pool, emb);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  FAIL("expected load_pool to throw");
  return ErrorCode::kIo;
}

}  // namespace

TEST_SUITE("pool_io") {

TEST_CASE("three records over two tasks") {
  TempDir dir;
  write_text(dir / "pool.jsonl",
             "{\"id\":\"x1\",\"task\":\"a\",\"confidence\":0.5}\n"
             "{\"id\":\"x2\",\"task\":\"a\"}\n"
             "{\"id\":\"x3\",\"task\":\"b\",\"token_probs\":[[0.9,0.1]]}\n");
  const auto pool = load_pool(dir / "pool.jsonl");
  REQUIRE(pool.size() == 3);
  const auto& p = pool.partition();
  CHECK(p.tasks == std::vector<std::string>{"a", "b"});
  CHECK(p.counts == std::vector<std::size_t>{2, 1});
  CHECK(p.members[0] == std::vector<std::size_t>{0, 1});
  CHECK(pool[2].token_probs->at(0) == std::vector<double>{0.9, 0.1});
  CHECK_FALSE(pool[1].confidence.has_value());
  CHECK(pool.task_slot(2) == 1);
  CHECK(pool.find_id("x2") == std::optional<std::size_t>(1));
}

TEST_CASE("embedding dimension mismatch is a shape error") {
  TempDir dir;
  write_text(dir / "pool.jsonl",
             "{\"id\":\"a\",\"task\":\"t\",\"embedding\":[1,2,3,4]}\n"
             "{\"id\":\"b\",\"task\":\"t\",\"embedding\":[1,2,3,4,5]}\n");
  std::string msg;
  CHECK(load_error(dir / "pool.jsonl", {}, &msg) == ErrorCode::kShape);
  CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("eight categories give eight tasks") {
  const std::vector<std::string> categories = {
      "brainstorming", "classification", "closed_qa", "creative_writing",
      "general_qa", "information_extraction", "open_qa", "summarization"};
  std::vector<std::string> tasks;
  for (int i = 0; i < 40; ++i) tasks.push_back(categories[(i * 7) % 8]);
  const auto pool = tasksel::testing::make_pool(tasks);
  CHECK(pool.partition().size() == 8);
  CHECK(pool.partition().tasks == categories);
}

TEST_CASE("error paths carry codes and line numbers") {
  TempDir dir;
  SUBCASE("duplicate id") {
    write_text(dir / "p.jsonl",
               "{\"id\":\"a\",\"task\":\"t\"}\n{\"id\":\"a\",\"task\":\"u\"}\n");
    CHECK(load_error(dir / "p.jsonl") == ErrorCode::kDuplicateId);
  }
  SUBCASE("malformed json") {
    std::string msg;
    write_text(dir / "p.jsonl", "{\"id\":\"a\",\"task\":\"t\"}\n{\"id\":\n");
    CHECK(load_error(dir / "p.jsonl", {}, &msg) == ErrorCode::kParse);
    CHECK(msg.find("line 2") != std::string::npos);
  }
  SUBCASE("missing task") {
    write_text(dir / "p.jsonl", "{\"id\":\"a\"}\n");
    CHECK(load_error(dir / "p.jsonl") == ErrorCode::kParse);
  }
  SUBCASE("wrong field type") {
    write_text(dir / "p.jsonl", "{\"id\":\"a\",\"task\":\"t\",\"confidence\":\"hi\"}\n");
    CHECK(load_error(dir / "p.jsonl") == ErrorCode::kParse);
  }
  SUBCASE("probability above one") {
    write_text(dir / "p.jsonl", "{\"id\":\"a\",\"task\":\"t\",\"token_probs\":[[1.2]]}\n");
    CHECK(load_error(dir / "p.jsonl") == ErrorCode::kValidation);
  }
  SUBCASE("negative probability") {
    write_text(dir / "p.jsonl",
               "{\"id\":\"a\",\"task\":\"t\",\"token_probs\":[[0.5,-0.1]]}\n");
    CHECK(load_error(dir / "p.jsonl") == ErrorCode::kValidation);
  }
  SUBCASE("position not descending") {
    write_text(dir / "p.jsonl",
               "{\"id\":\"a\",\"task\":\"t\",\"token_probs\":[[0.2,0.7]]}\n");
    CHECK(load_error(dir / "p.jsonl") == ErrorCode::kValidation);
  }
  SUBCASE("confidence outside (0,1]") {
    write_text(dir / "p.jsonl", "{\"id\":\"a\",\"task\":\"t\",\"confidence\":0}\n");
    CHECK(load_error(dir / "p.jsonl") == ErrorCode::kValidation);
  }
  SUBCASE("empty embedding") {
    write_text(dir / "p.jsonl", "{\"id\":\"a\",\"task\":\"t\",\"embedding\":[]}\n");
    CHECK(load_error(dir / "p.jsonl") == ErrorCode::kShape);
  }
  SUBCASE("empty file") {
    write_text(dir / "p.jsonl", "");
    CHECK(load_error(dir / "p.jsonl") == ErrorCode::kValidation);
  }
  SUBCASE("missing file") {
    CHECK(load_error(dir / "nope.jsonl") == ErrorCode::kIo);
  }
}

TEST_CASE("partition_by_task") {
  using tasksel::testing::make_pool;
  SUBCASE("single record") {
    const auto p = partition_by_task(make_pool({"x"}));
    CHECK(p.tasks == std::vector<std::string>{"x"});
    CHECK(p.counts == std::vector<std::size_t>{1});
  }
  SUBCASE("alternating tasks") {
    const auto p = partition_by_task(make_pool({"p", "q", "p", "q", "p", "q"}));
    CHECK(p.counts == std::vector<std::size_t>{3, 3});
    CHECK(p.members[1] == std::vector<std::size_t>{1, 3, 5});
  }
  SUBCASE("file order does not change task order") {
    const auto a = partition_by_task(make_pool({"zeta", "alpha", "mid", "alpha"}));
    const auto b = partition_by_task(make_pool({"alpha", "mid", "alpha", "zeta"}));
    CHECK(a.tasks == b.tasks);
    CHECK(a.counts == b.counts);
    CHECK(a.tasks == std::vector<std::string>{"alpha", "mid", "zeta"});
  }
  SUBCASE("labels are opaque") {
    const auto p = partition_by_task(
        make_pool({"translate/french-english", "translate/French-English", "qa "}));
    CHECK(p.size() == 3);
  }
}

TEST_CASE("embedding sidecar") {
  TempDir dir;
  write_text(dir / "pool.jsonl",
             "{\"id\":\"a\",\"task\":\"t\"}\n{\"id\":\"b\",\"task\":\"t\"}\n");
  const EmbeddingTable table(2, 3, {1.0f, 2.0f, 3.0f, -0.5f, 0.25f, 1e-3f});
  write_embeddings_sidecar(dir / "emb.bin", table);

  SUBCASE("bit layout") {
    const auto bytes = read_file(dir / "emb.bin");
    REQUIRE(bytes.size() == 16 + 6 * 4);
    // Little-endian u64 header (2, 3), then IEEE-754 1.0f = 0x3F800000.
    CHECK(static_cast<unsigned char>(bytes[0]) == 2);
    CHECK(static_cast<unsigned char>(bytes[8]) == 3);
    CHECK(static_cast<unsigned char>(bytes[16]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[18]) == 0x80);
    CHECK(static_cast<unsigned char>(bytes[19]) == 0x3F);
  }
  SUBCASE("loads alongside the pool") {
    const auto pool = load_pool(dir / "pool.jsonl", dir / "emb.bin");
    REQUIRE(pool.embedding(1).has_value());
    CHECK((*pool.embedding(1))[0] == -0.5f);
    CHECK(pool.embeddings().complete());
  }
  SUBCASE("row count must match") {
    write_embeddings_sidecar(dir / "emb3.bin", EmbeddingTable(3, 1, {1, 2, 3}));
    CHECK(load_error(dir / "pool.jsonl", dir / "emb3.bin") == ErrorCode::kShape);
  }
  SUBCASE("truncated payload") {
    auto bytes = read_file(dir / "emb.bin");
    bytes.pop_back();
    write_text(dir / "short.bin", bytes);
    CHECK(load_error(dir / "pool.jsonl", dir / "short.bin") == ErrorCode::kShape);
  }
  SUBCASE("inline and sidecar are exclusive") {
    write_text(dir / "inline.jsonl",
               "{\"id\":\"a\",\"task\":\"t\",\"embedding\":[1]}\n{\"id\":\"b\",\"task\":\"t\"}\n");
    CHECK(load_error(dir / "inline.jsonl", dir / "emb.bin") == ErrorCode::kValidation);
  }
}

TEST_CASE("save and reload reproduces records and partition") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TempDir dir;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + gen() % 30;
    std::vector<PromptRecord> records;
    std::vector<std::vector<float>> emb;
    const bool with_emb = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      PromptRecord r;
      r.id = "id-" + std::to_string(trial) + "-" + std::to_string(i);
      r.task = "task/" + std::to_string(gen() % 5);
      if (gen() % 2) r.confidence = 1e-9 + (1.0 - 1e-9) * u(gen);
      if (gen() % 2) {
        TokenTrace trace(1 + gen() % 4);
        for (auto& pos : trace) {
          pos = {u(gen), u(gen), u(gen)};
          std::sort(pos.rbegin(), pos.rend());
          const double s = pos[0] + pos[1] + pos[2];
          for (auto& p : pos) p /= s;
        }
        r.token_probs = trace;
      }
      records.push_back(r);
      if (with_emb) {
        emb.push_back({static_cast<float>(u(gen)), static_cast<float>(-u(gen) * 1e3),
                       static_cast<float>(u(gen) * 1e-7)});
      }
    }
    const Pool original(records, with_emb ? EmbeddingTable::from_rows(emb) : EmbeddingTable{});
    save_pool(original, dir / "rt.jsonl");
    const auto reloaded = load_pool(dir / "rt.jsonl");
    REQUIRE(reloaded.size() == original.size());
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(reloaded[i] == original[i]);
    }
    CHECK(reloaded.embeddings() == original.embeddings());
    CHECK(reloaded.partition() == original.partition());
    CHECK(reloaded.partition().total() == n);
  }
}

}  // TEST_SUITE
