#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tasksel/error.hpp"
#include "tasksel/rng.hpp"
#include "tasksel/selectors.hpp"

using namespace tasksel;
using tasksel::testing::make_pool;

namespace {

AllocationVector alloc_of(std::vector<double> alpha) {
  AllocationVector a;
  a.alpha = std::move(alpha);
  return a;
}

Pool pool_with_sizes(const std::vector<std::size_t>& sizes) {
  std::vector<std::string> tasks;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    // Zero-padded so lexicographic order matches t.
    const std::string label = "task" + std::string(t < 10 ? "0" : "") + std::to_string(t);
    for (std::size_t i = 0; i < sizes[t]; ++i) tasks.push_back(label);
  }
  return make_pool(tasks);
}

}  // namespace

TEST_SUITE("round_robin") {

TEST_CASE("unit examples") {
  SUBCASE("allocation saturates both tasks") {
    const auto pool = pool_with_sizes({2, 2});
    const auto r = round_robin(alloc_of({2, 2}), pool.partition(), 4, 0);
    CHECK(r.per_task == std::vector<std::size_t>{2, 2});
    CHECK(std::set<std::size_t>(r.selected.begin(), r.selected.end()).size() == 4);
  }
  SUBCASE("budget stops mid pass") {
    const auto pool = pool_with_sizes({5, 5});
    const auto r = round_robin(alloc_of({1.2, 3.0}), pool.partition(), 4, 0);
    CHECK(r.per_task == std::vector<std::size_t>{2, 2});
    CHECK(r.selected.size() == 4);
  }
  SUBCASE("pool exhaustion") {
    const auto pool = pool_with_sizes({3});
    const auto r = round_robin(alloc_of({5}), pool.partition(), 5, 0);
    CHECK(r.per_task == std::vector<std::size_t>{3});
    CHECK(r.selected.size() == 3);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("exhausted") != std::string::npos);
  }
  SUBCASE("budget zero") {
    const auto pool = pool_with_sizes({3});
    CHECK_THROWS_AS(round_robin(alloc_of({3}), pool.partition(), 0, 0), Error);
  }
}

TEST_CASE("smaller allocations are served first") {
  // ceil alpha = [3, 1]: the second task is visited first, so with budget 1
  // it receives the only pick.
  const auto pool = pool_with_sizes({4, 4});
  const auto r = round_robin(alloc_of({3, 1}), pool.partition(), 1, 0);
  CHECK(r.per_task == std::vector<std::size_t>{0, 1});
}

TEST_CASE("randomized contract against the literal loop") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.0, 12.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> sizes(1 + gen() % 8);
    for (auto& s : sizes) s = 1 + gen() % 10;
    std::vector<double> alpha(sizes.size());
    for (auto& a : alpha) a = gen() % 3 == 0 ? std::floor(u(gen)) : u(gen);
    const std::size_t budget = 1 + gen() % 60;
    const std::uint64_t seed = gen();
    const auto pool = pool_with_sizes(sizes);
    const auto r = round_robin(alloc_of(alpha), pool.partition(), budget, seed);

    std::size_t available = 0;
    for (std::size_t t = 0; t < sizes.size(); ++t) {
      available += std::min(ceil_alpha(alpha[t]), sizes[t]);
    }
    CHECK(r.selected.size() == std::min(budget, available));
    CHECK(std::set<std::size_t>(r.selected.begin(), r.selected.end()).size() ==
          r.selected.size());
    CHECK(r.per_task == oracle::oracle_round_robin_counts(alpha, sizes, budget));

    std::vector<std::size_t> cap(sizes.size());
    for (std::size_t t = 0; t < sizes.size(); ++t) {
      cap[t] = std::min(ceil_alpha(alpha[t]), sizes[t]);
      CHECK(r.per_task[t] <= cap[t]);
    }
    for (std::size_t a = 0; a < sizes.size(); ++a) {
      for (std::size_t b = 0; b < sizes.size(); ++b) {
        if (r.per_task[a] < cap[a] && r.per_task[b] < cap[b]) {
          CHECK(r.per_task[a] <= r.per_task[b] + 1);
        }
      }
    }
    // Every selected index belongs to the task it was counted for.
    std::vector<std::size_t> recount(sizes.size(), 0);
    for (auto i : r.selected) ++recount[pool.task_slot(i)];
    CHECK(recount == r.per_task);
  }
}

TEST_CASE("seeded determinism and stream independence") {
  const auto pool = pool_with_sizes({9, 9, 9});
  const auto a = round_robin(alloc_of({4, 4, 4}), pool.partition(), 12, 77);
  const auto b = round_robin(alloc_of({4, 4, 4}), pool.partition(), 12, 77);
  CHECK(a.selected == b.selected);
  const auto c = round_robin(alloc_of({4, 4, 4}), pool.partition(), 12, 78);
  CHECK(a.selected != c.selected);

  // Draws inside task00 do not depend on what the other tasks receive.
  const auto d = round_robin(alloc_of({4, 1, 9}), pool.partition(), 14, 77);
  std::vector<std::size_t> first_a, first_d;
  for (auto i : a.selected) {
    if (pool.task_slot(i) == 0) first_a.push_back(i);
  }
  for (auto i : d.selected) {
    if (pool.task_slot(i) == 0) first_d.push_back(i);
  }
  CHECK(first_a == first_d);
}

TEST_CASE("within-task draws are roughly uniform") {
  const auto pool = pool_with_sizes({10});
  std::vector<int> hits(10, 0);
  const int runs = 20000;
  for (int s = 0; s < runs; ++s) {
    const auto r = round_robin(alloc_of({1}), pool.partition(), 1, static_cast<std::uint64_t>(s));
    ++hits[r.selected[0]];
  }
  for (int h : hits) {
    CHECK(h > runs / 10 - 300);
    CHECK(h < runs / 10 + 300);
  }
}

TEST_CASE("counter rng") {
  auto r = CounterRng::for_stream(1, "a");
  auto s = CounterRng::for_stream(1, "a");
  for (int i = 0; i < 10; ++i) CHECK(r.next() == s.next());
  CHECK(r.counter() == 10);
  CHECK(CounterRng::for_stream(1, "a").next() != CounterRng::for_stream(1, "b").next());
  CHECK(CounterRng::for_stream(1, "a").next() != CounterRng::for_stream(2, "a").next());
  auto t = CounterRng(5);
  for (int i = 0; i < 1000; ++i) CHECK(t.below(7) < 7);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

}  // TEST_SUITE
