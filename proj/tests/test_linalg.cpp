#include <doctest.h>

#include <cmath>

#include "switchmc/linalg.hpp"
#include "switchmc/rng.hpp"

using namespace switchmc;

namespace {

SquareMatrix random_well_conditioned(int d, RngStream& stream) {
  // Random entries plus a dominant diagonal keep the condition number tame.
  SquareMatrix m(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = stream.normal() * 0.5 + (i == j ? 4.0 : 0.0);
  return m;
}

double max_abs_diff(const SquareMatrix& a, const SquareMatrix& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    r = std::max(r, std::abs(a.entries[i] - b.entries[i]));
  return r;
}

}  // namespace

TEST_CASE("identity inverts to identity") {
  const SquareMatrix id = SquareMatrix::identity(4);
  CHECK(max_abs_diff(lu_inverse(id), id) == 0.0);
}

TEST_CASE("diagonal inversion") {
  SquareMatrix m(2);
  m(0, 0) = 0.5;
  m(1, 1) = 0.5;
  const SquareMatrix inv = lu_inverse(m);
  CHECK(inv(0, 0) == doctest::Approx(2.0));
  CHECK(inv(1, 1) == doctest::Approx(2.0));
  CHECK(inv(0, 1) == 0.0);
}

TEST_CASE("multiply-back oracle on random 4x4 matrices") {
  RngStream stream(99, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const SquareMatrix m = random_well_conditioned(4, stream);
    const SquareMatrix prod = mat_mul(m, lu_inverse(m));
    CHECK(max_abs_diff(prod, SquareMatrix::identity(4)) < 1e-10);
  }
}

TEST_CASE("double inverse returns the matrix") {
  RngStream stream(7, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const SquareMatrix m = random_well_conditioned(3, stream);
    CHECK(max_abs_diff(lu_inverse(lu_inverse(m)), m) < 1e-8);
  }
}

TEST_CASE("singular matrix raises") {
  SquareMatrix m(2);
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  m(1, 0) = 0.5;
  m(1, 1) = 1.0;  // rank one
  CHECK_THROWS_AS(lu_inverse(m), SingularMatrixError);

  SquareMatrix tiny(1);
  tiny(0, 0) = 1e-13;
  CHECK_THROWS_AS(lu_inverse(tiny), SingularMatrixError);
}

TEST_CASE("frobenius pairing and infinity norms") {
  SquareMatrix a(2), b(2);
  a(0, 0) = 1.0;
  a(0, 1) = 2.0;
  a(1, 0) = -3.0;
  a(1, 1) = 0.5;
  b(0, 0) = 2.0;
  b(0, 1) = -1.0;
  b(1, 0) = 4.0;
  b(1, 1) = 1.0;
  CHECK(frobenius(a, b) == doctest::Approx(2.0 - 2.0 - 12.0 + 0.5));
  CHECK(inf_norm(a) == doctest::Approx(3.0));
  const Vec v{1.0, -5.0, 2.0};
  CHECK(inf_norm(v) == doctest::Approx(5.0));
}

TEST_CASE("kahan accumulation recovers small terms") {
  KahanSum s;
  s.add(1e16);
  for (int i = 0; i < 10000; ++i) s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == doctest::Approx(10000.0));
}
