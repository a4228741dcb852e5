#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "ertk/rng.hpp"

using ertk::WalkRng;

TEST_CASE("equal seeds give equal streams") {
  WalkRng a(42), b(42);
  for (int i = 0; i < 64; ++i) REQUIRE(a.next_u64() == b.next_u64());

  WalkRng c(42), d(43);
  bool differs = false;
  for (int i = 0; i < 8; ++i) differs |= c.next_u64() != d.next_u64();
  REQUIRE(differs);
}

TEST_CASE("first outputs are frozen") {
  // regression pins; any change to the mixing constants shows up here
  WalkRng r1(1);
  REQUIRE(r1.next_u64() == 10451216379200822465ull);
  REQUIRE(r1.next_u64() == 13757245211066428519ull);
  REQUIRE(WalkRng(42).next_u64() == 13679457532755275413ull);
}

TEST_CASE("derive is pure and does not advance the parent") {
  WalkRng parent(7), untouched(7);
  WalkRng child = parent.derive(3);
  (void)child;
  for (int i = 0; i < 8; ++i) REQUIRE(parent.next_u64() == untouched.next_u64());

  // deriving twice with the same id reproduces the same child stream
  WalkRng root(5);
  WalkRng c1 = root.derive(11), c2 = root.derive(11);
  for (int i = 0; i < 8; ++i) REQUIRE(c1.next_u64() == c2.next_u64());
}

TEST_CASE("sibling streams differ and the two-arg form nests") {
  WalkRng root(5);
  WalkRng a = root.derive(1), b = root.derive(2);
  bool differs = false;
  for (int i = 0; i < 8; ++i) differs |= a.next_u64() != b.next_u64();
  REQUIRE(differs);

  WalkRng two = root.derive(9, 4);
  WalkRng nested = root.derive(9).derive(4);
  for (int i = 0; i < 8; ++i) REQUIRE(two.next_u64() == nested.next_u64());
}

TEST_CASE("next_below stays in range and hits every bucket") {
  WalkRng rng(123);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 10000; ++i) {
    uint32_t v = rng.next_below(10);
    REQUIRE(v < 10);
    ++hits[v];
  }
  // expectation 1000 per bucket, sd ~30; +-200 is far outside noise
  for (int h : hits) {
    REQUIRE(h > 800);
    REQUIRE(h < 1200);
  }
  REQUIRE(rng.next_below(1) == 0);
}

TEST_CASE("next_unit lands in [0,1) with the right mean") {
  WalkRng rng(9);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = rng.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // sd of the mean is ~0.003, so 0.02 leaves a wide margin
  REQUIRE(sum / 10000 == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("next_coin is close to fair") {
  WalkRng rng(77);
  int heads = 0;
  for (int i = 0; i < 10000; ++i) heads += rng.next_coin();
  REQUIRE(heads > 4700);
  REQUIRE(heads < 5300);
}
