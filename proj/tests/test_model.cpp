#include <doctest.h>

#include <cmath>

#include "switchmc/model.hpp"
#include "switchmc/rng.hpp"

using namespace switchmc;

TEST_CASE("built-in case registry") {
  CHECK(builtin_case(2).reference_value == doctest::Approx(0.17466));
  CHECK(builtin_case(3).reference_value == doctest::Approx(0.21408));
  CHECK(builtin_case(4).reference_value == doctest::Approx(0.2100));
  CHECK(builtin_case(5).reference_value == doctest::Approx(0.11806));
  CHECK_FALSE(builtin_case(1).reference_value.has_value());
  CHECK_FALSE(builtin_case(6).reference_value.has_value());
  CHECK(builtin_case(5).model.dim == 4);
  CHECK_THROWS_AS(builtin_case(0), ModelError);
  CHECK_THROWS_AS(builtin_case(7), ModelError);
}

TEST_CASE("drift vanishes at the common start point") {
  for (int id = 1; id <= 6; ++id) {
    const CaseSpec spec = builtin_case(id);
    const Vec b = spec.model.drift_at(0.0, spec.model.x0);
    for (double bi : b) CHECK(bi == 0.0);
  }
}

TEST_CASE("drift clamp stays within 10 everywhere") {
  RngStream stream(3, 0);
  for (int id = 1; id <= 6; ++id) {
    const CaseSpec spec = builtin_case(id);
    Vec x(static_cast<std::size_t>(spec.model.dim));
    for (int trial = 0; trial < 200; ++trial) {
      for (double& xi : x) xi = stream.normal() * 50.0;
      const Vec b = spec.model.drift_at(0.5, x);
      for (double bi : b) CHECK(std::abs(bi) <= 10.0);
    }
  }
}

TEST_CASE("diffusion evaluations") {
  SUBCASE("case 2 at x = 0") {
    const CaseSpec spec = builtin_case(2);
    const SquareMatrix a = a_of(spec.model, 0.0, Vec{0.0});
    CHECK(a(0, 0) == doctest::Approx(0.25));
  }
  SUBCASE("case 4 clamp at x = 2") {
    const CaseSpec spec = builtin_case(4);
    CHECK(spec.model.sigma_at(0.0, Vec{2.0})(0, 0) == doctest::Approx(1.0));
    CHECK(a_of(spec.model, 0.0, Vec{2.0})(0, 0) == doctest::Approx(1.0));
    CHECK(spec.model.sigma_at(0.0, Vec{0.0})(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("constant sigma = 0.5 I in d=2") {
    SdeModel m;
    m.dim = 2;
    m.x0 = {0.0, 0.0};
    m.drift = [](double, const Vec&, Vec& out) { out.assign(out.size(), 0.0); };
    m.sigma = [](double, const Vec&, SquareMatrix& out) {
      out = SquareMatrix::identity(2);
      out(0, 0) = out(1, 1) = 0.5;
    };
    const SquareMatrix a = a_of(m, 0.0, m.x0);
    CHECK(a(0, 0) == doctest::Approx(0.25));
    CHECK(a(1, 1) == doctest::Approx(0.25));
    CHECK(a(0, 1) == 0.0);
  }
}

TEST_CASE("sigma inverse") {
  SUBCASE("scalar reciprocal") {
    const CaseSpec spec = builtin_case(2);
    CHECK(sigma_inv_of(spec.model, 0.0, Vec{0.0})(0, 0) == doctest::Approx(2.0));
  }
  SUBCASE("case 5 diffusion is reciprocal-scalar times identity") {
    const CaseSpec spec = builtin_case(5);
    const SquareMatrix inv = sigma_inv_of(spec.model, 0.0, spec.model.x0);
    // sigma(x0) = 0.9 I since (sum x_i)^2 clamps to 1.
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(std::abs(inv(i, j) - (i == j ? 1.0 / 0.9 : 0.0)) < 1e-12);
  }
  SUBCASE("multiply-back on a full random SPD-rooted sigma") {
    RngStream stream(12, 1);
    SdeModel m;
    m.dim = 3;
    m.x0 = {0.0, 0.0, 0.0};
    SquareMatrix root(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) root(i, j) = stream.normal() * 0.3 + (i == j ? 1.5 : 0.0);
    m.sigma = [root](double, const Vec&, SquareMatrix& out) { out = root; };
    const SquareMatrix inv = sigma_inv_of(m, 0.0, m.x0);
    const SquareMatrix prod = mat_mul(inv, root);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::abs(prod(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);
  }
}

TEST_CASE("a_of flags non-finite coefficients") {
  SdeModel m;
  m.dim = 1;
  m.x0 = {1.0};
  m.sigma = [](double, const Vec&, SquareMatrix& out) { out(0, 0) = std::nan(""); };
  CHECK_THROWS_AS(a_of(m, 0.0, m.x0), ModelError);
}

TEST_CASE("case 5/6 diffusion stays a multiple of the identity") {
  RngStream stream(8, 0);
  for (int id : {5, 6}) {
    const CaseSpec spec = builtin_case(id);
    Vec x(4);
    for (int trial = 0; trial < 100; ++trial) {
      for (double& xi : x) xi = stream.normal();
      const SquareMatrix s = spec.model.sigma_at(0.3, x);
      for (int i = 0; i < 4; ++i) {
        CHECK(s(i, i) == doctest::Approx(s(0, 0)));
        CHECK(s(i, i) >= 0.5);
        for (int j = 0; j < 4; ++j)
          if (i != j) CHECK(s(i, j) == 0.0);
      }
    }
  }
}
