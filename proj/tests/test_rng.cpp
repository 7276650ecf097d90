#include <doctest.h>

#include <cmath>
#include <vector>

#include "switchmc/rng.hpp"

using switchmc::RngStream;

TEST_CASE("identical (seed, stream_id) replays the same sequence") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream ids diverge") {
  RngStream a(42, 0);
  RngStream b(42, 1);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64() ? 1 : 0;
  CHECK(same == 0);
}

TEST_CASE("uniform ranges") {
  RngStream s(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = s.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = s.uniform_open();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("gaussian first two moments") {
  RngStream s(2024, 3);
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> z(2);
  for (int i = 0; i < n / 2; ++i) {
    s.fill_normal(z);
    sum += z[0] + z[1];
    sum2 += z[0] * z[0] + z[1] * z[1];
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.004);
  CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("single normal path matches pairwise fill moments") {
  RngStream s(5, 11);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
}
