#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace switchmc {

using Vec = std::vector<double>;

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Small dense square matrix, row-major. Sized for diffusion matrices
// (d is a handful), not for general linear algebra.
struct SquareMatrix {
  int dim = 0;
  std::vector<double> entries;

  SquareMatrix() = default;
  explicit SquareMatrix(int d) : dim(d), entries(static_cast<std::size_t>(d) * d, 0.0) {}

  double& operator()(int i, int j) { return entries[static_cast<std::size_t>(i) * dim + j]; }
  double operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) * dim + j]; }

  static SquareMatrix identity(int d);
};

SquareMatrix mat_mul(const SquareMatrix& a, const SquareMatrix& b);
// a * a^T
SquareMatrix mat_aat(const SquareMatrix& a);
Vec mat_vec(const SquareMatrix& m, std::span<const double> v);
// m^T * v
Vec mat_transpose_vec(const SquareMatrix& m, std::span<const double> v);

// Allocation-free variants for hot loops; `out` is resized as needed and its
// storage reused.
void mat_aat_into(const SquareMatrix& a, SquareMatrix& out);
void mat_vec_into(const SquareMatrix& m, std::span<const double> v, Vec& out);
void mat_transpose_vec_into(const SquareMatrix& m, std::span<const double> v, Vec& out);

// Inverse via LU decomposition with partial pivoting. Throws
// SingularMatrixError when a pivot magnitude drops below 1e-12; the models
// this library handles have diffusions bounded away from singularity, so a
// tiny pivot indicates bad model data rather than a case to be solved.
// Dimensions up to 8 run entirely on the stack.
SquareMatrix lu_inverse(const SquareMatrix& m);
void lu_inverse_into(const SquareMatrix& m, SquareMatrix& out);

double dot(std::span<const double> a, std::span<const double> b);
// Frobenius pairing A:B = tr(A B^T) = sum_ij A_ij B_ij.
double frobenius(const SquareMatrix& a, const SquareMatrix& b);

// Max-abs-entry norms (the L-inf norm used throughout for vectors and
// coefficient-difference matrices).
double inf_norm(std::span<const double> v);
double inf_norm(const SquareMatrix& m);

// Kahan-compensated accumulator; reductions stay schedule-invariant as long
// as values are added in a fixed order.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

}  // namespace switchmc
