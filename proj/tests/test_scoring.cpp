#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tasksel/error.hpp"
#include "tasksel/scoring.hpp"

using namespace tasksel;
using doctest::Approx;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

// Independent oracles: plain loops, no log-space tricks.
double direct_product(const TokenTrace& t) {
  double p = 1.0;
  for (const auto& pos : t) p *= pos[0];
  return p;
}

double direct_entropy(const TokenTrace& t) {
  double total = 0.0;
  for (const auto& pos : t) {
    double h = 0.0;
    for (double p : pos) {
      if (p > 0) h -= p * std::log(p);
    }
    total += h;
  }
  return total / static_cast<double>(t.size());
}

TokenTrace random_trace(std::mt19937_64& gen, std::size_t len, std::size_t width) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  TokenTrace t(len);
  for (auto& pos : t) {
    pos.resize(width);
    double s = 0.0;
    for (auto& p : pos) s += (p = u(gen));
    for (auto& p : pos) p /= s;
    std::sort(pos.rbegin(), pos.rend());
  }
  return t;
}

PromptRecord with_trace(TokenTrace t) {
  PromptRecord r;
  r.id = "x";
  r.task = "t";
  r.token_probs = std::move(t);
  return r;
}

}  // namespace

TEST_SUITE("scoring") {

TEST_CASE("confidence unit values") {
  CHECK(confidence({{1.0}, {1.0}, {1.0}}) == 1.0);
  CHECK(confidence({{0.5}, {0.5}}) == Approx(0.25).epsilon(1e-12));
  const TokenTrace t = {{0.9, 0.05}, {0.8, 0.1}, {0.7, 0.2}};
  CHECK(confidence(t) == Approx(direct_product(t)).epsilon(1e-12));
  CHECK(confidence(t) == Approx(0.504).epsilon(1e-12));
  CHECK(log_confidence(t) == Approx(std::log(0.9) + std::log(0.8) + std::log(0.7)));
}

TEST_CASE("confidence errors") {
  CHECK(code_of([] { confidence({}); }) == ErrorCode::kEmptySequence);
  CHECK(code_of([] { confidence({{0.0, 0.0}}); }) == ErrorCode::kDegenerateProbability);
  CHECK(code_of([] { mean_entropy({}); }) == ErrorCode::kEmptySequence);
}

TEST_CASE("mean entropy unit values") {
  CHECK(mean_entropy({{1.0}, {1.0}}) == 0.0);
  CHECK(mean_entropy({{0.5, 0.5}}) == Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(mean_entropy({{0.5, 0.5}, {1.0}}) == Approx(std::log(2.0) / 2).epsilon(1e-14));
  CHECK(mean_entropy({{0.5, 0.5}, {1.0}}) == Approx(0.3466).epsilon(1e-4));
  CHECK(mean_entropy({{1.0, 0.0}}) == 0.0);
}

TEST_CASE("margins unit values") {
  auto m = margins({{0.9, 0.1}, {0.9, 0.1}});
  CHECK(m.mean == Approx(0.8).epsilon(1e-14));
  CHECK(m.min == Approx(0.8).epsilon(1e-14));
  m = margins({{0.6, 0.4}, {0.9, 0.1}});
  CHECK(m.mean == Approx(0.5).epsilon(1e-14));
  CHECK(m.min == Approx(0.2).epsilon(1e-14));
  m = margins({{0.5, 0.5}});
  CHECK(m.mean == 0.0);
  CHECK(m.min == 0.0);
  CHECK(code_of([] { margins({{0.9, 0.1}, {1.0}}); }) == ErrorCode::kInsufficientCandidates);
}

TEST_CASE("log-space confidence matches the direct product") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto t = random_trace(gen, 1 + gen() % 20, 1 + gen() % 5);
    const double direct = direct_product(t);
    CHECK(std::abs(confidence(t) - direct) <= 1e-9 * direct);
  }
}

TEST_CASE("long traces stay finite in log space") {
  const TokenTrace t(5000, std::vector<double>{1e-3});
  CHECK(log_confidence(t) == Approx(5000 * std::log(1e-3)));
  CHECK(confidence(t) == 0.0);  // underflows at the boundary only
}

TEST_CASE("scores ignore position order") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto t = random_trace(gen, 2 + gen() % 10, 2 + gen() % 4);
    const auto a = score_example(with_trace(t));
    std::shuffle(t.begin(), t.end(), gen);
    const auto b = score_example(with_trace(t));
    CHECK(*a.confidence == Approx(*b.confidence).epsilon(1e-12));
    CHECK(*a.mean_entropy == Approx(*b.mean_entropy).epsilon(1e-12));
    CHECK(*a.mean_margin == Approx(*b.mean_margin).epsilon(1e-12));
    CHECK(*a.min_margin == *b.min_margin);
    CHECK(*a.mean_entropy == Approx(direct_entropy(t)).epsilon(1e-12));
  }
}

TEST_CASE("confidence never increases when a position is appended") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto t = random_trace(gen, 1 + gen() % 10, 3);
    const double before = confidence(t);
    t.push_back(random_trace(gen, 1, 3)[0]);
    CHECK(confidence(t) <= before);
  }
}

TEST_CASE("score_example field presence") {
  SUBCASE("precomputed confidence wins over the trace") {
    auto r = with_trace({{0.5, 0.5}});
    r.confidence = 0.9;
    const auto s = score_example(r);
    CHECK(*s.confidence == 0.9);
    CHECK(s.mean_entropy.has_value());
  }
  SUBCASE("confidence only") {
    PromptRecord r{"x", "t", 0.3, std::nullopt};
    const auto s = score_example(r);
    CHECK(*s.confidence == 0.3);
    CHECK_FALSE(s.mean_entropy.has_value());
    CHECK_FALSE(s.mean_margin.has_value());
  }
  SUBCASE("single-candidate positions leave margins empty") {
    const auto s = score_example(with_trace({{0.7}, {0.9, 0.1}}));
    CHECK(s.confidence.has_value());
    CHECK_FALSE(s.mean_margin.has_value());
    CHECK_FALSE(s.min_margin.has_value());
  }
  SUBCASE("nothing available") {
    CHECK(score_example(PromptRecord{"x", "t", std::nullopt, std::nullopt}) == ExampleScores{});
  }
}

TEST_CASE("task mean confidence") {
  using tasksel::testing::make_pool;
  auto pool = make_pool({"a", "a", "b"}, {0.2, 0.4, 0.7});
  auto conf = task_mean_confidence(pool, pool.partition());
  CHECK(conf.values[0] == Approx(0.3).epsilon(1e-14));
  CHECK(conf.values[1] == 0.7);

  pool = make_pool({"t", "t", "t"}, {0.504, 0.25, 0.25});
  conf = task_mean_confidence(pool, pool.partition());
  CHECK(conf.values[0] == Approx((0.504 + 0.25 + 0.25) / 3).epsilon(1e-14));
  CHECK(conf.values[0] == Approx(0.33467).epsilon(1e-4));

  const auto missing = make_pool({"t", "t"});
  CHECK(code_of([&] { task_mean_confidence(missing, missing.partition()); }) ==
        ErrorCode::kMissingConfidence);
}

TEST_CASE("scores cache round trip") {
  using tasksel::testing::TempDir;
  std::mt19937_64 gen(9);
  std::vector<PromptRecord> records;
  for (int i = 0; i < 12; ++i) {
    PromptRecord r;
    r.id = "q" + std::to_string(i);
    r.task = i % 2 ? "odd" : "even";
    if (i % 3 == 0) r.confidence = 0.1 + 0.05 * i;
    if (i % 3 != 2) r.token_probs = random_trace(gen, 1 + i % 4, 1 + i % 3);
    records.push_back(r);
  }
  const Pool pool(records);
  const auto scores = score_pool(pool);
  TempDir dir;
  write_scores_cache(dir / "s.jsonl", pool, scores);
  const auto back = read_scores_cache(dir / "s.jsonl", pool);
  REQUIRE(back.size() == scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) CHECK(back[i] == scores[i]);

  tasksel::testing::write_text(dir / "short.jsonl", "{\"id\":\"q0\",\"confidence\":0.5}\n");
  CHECK(code_of([&] { read_scores_cache(dir / "short.jsonl", pool); }) ==
        ErrorCode::kMissingScore);
}

}  // TEST_SUITE
