#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "rradam/rng.hpp"

using rradam::SplitMix64;

TEST_CASE("splitmix64 matches the reference sequence for seed 0") {
  SplitMix64 g(0);
  CHECK(g() == 0xE220A8397B1DCDAFULL);
  CHECK(g() == 0x6E789E6AA1B965F4ULL);
  CHECK(g() == 0x06C45D188009454FULL);
}

TEST_CASE("streams are reproducible and distinct") {
  auto a = SplitMix64::stream(7, 3);
  auto b = SplitMix64::stream(7, 3);
  auto c = SplitMix64::stream(7, 4);
  auto d = SplitMix64::stream(8, 3);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
  }
  CHECK(a == b);
}

TEST_CASE("bounded stays in range and hits every residue") {
  SplitMix64 g(42);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto x = g.bounded(7);
    REQUIRE(x < 7);
    ++hits[x];
  }
  for (int h : hits) CHECK(h > 800);
  CHECK(g.bounded(1) == 0);
}

TEST_CASE("shuffle yields permutations and covers all orders of three") {
  SplitMix64 g(1);
  std::set<std::vector<std::size_t>> seen;
  for (int t = 0; t < 600; ++t) {
    std::vector<std::size_t> p(3);
    std::iota(p.begin(), p.end(), std::size_t{0});
    g.shuffle(p);
    auto s = p;
    std::sort(s.begin(), s.end());
    CHECK(s == std::vector<std::size_t>{0, 1, 2});
    seen.insert(p);
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("counter advances by the golden increment") {
  SplitMix64 g(5);
  g();
  CHECK(g.counter() == 5 + 0x9E3779B97F4A7C15ULL);
}
