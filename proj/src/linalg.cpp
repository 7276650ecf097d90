#include "switchmc/linalg.hpp"

#include <cmath>
#include <cstdlib>

namespace switchmc {

namespace {
constexpr double kPivotFloor = 1e-12;
}

SquareMatrix SquareMatrix::identity(int d) {
  SquareMatrix m(d);
  for (int i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

SquareMatrix mat_mul(const SquareMatrix& a, const SquareMatrix& b) {
  const int d = a.dim;
  SquareMatrix out(d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < d; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

SquareMatrix mat_aat(const SquareMatrix& a) {
  const int d = a.dim;
  SquareMatrix out(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += a(i, k) * a(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

Vec mat_vec(const SquareMatrix& m, std::span<const double> v) {
  Vec out;
  mat_vec_into(m, v, out);
  return out;
}

Vec mat_transpose_vec(const SquareMatrix& m, std::span<const double> v) {
  Vec out;
  mat_transpose_vec_into(m, v, out);
  return out;
}

void mat_aat_into(const SquareMatrix& a, SquareMatrix& out) {
  const int d = a.dim;
  out.dim = d;
  out.entries.resize(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += a(i, k) * a(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
}

void mat_vec_into(const SquareMatrix& m, std::span<const double> v, Vec& out) {
  const int d = m.dim;
  out.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += m(i, j) * v[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s;
  }
}

void mat_transpose_vec_into(const SquareMatrix& m, std::span<const double> v, Vec& out) {
  const int d = m.dim;
  out.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += m(i, j) * v[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(j)] = s;
  }
}

namespace {

// Doolittle LU with partial pivoting on the working copy `lu` (row-major,
// d x d), then back-solve against the permuted identity one column at a time.
void lu_inverse_buffers(double* lu, int* perm, double* y, int d, SquareMatrix& out) {
  for (int i = 0; i < d; ++i) perm[i] = i;
  for (int col = 0; col < d; ++col) {
    int pivot_row = col;
    double best = std::abs(lu[col * d + col]);
    for (int r = col + 1; r < d; ++r) {
      const double cand = std::abs(lu[r * d + col]);
      if (cand > best) {
        best = cand;
        pivot_row = r;
      }
    }
    if (best <= kPivotFloor) throw SingularMatrixError("singular matrix in lu_inverse");
    if (pivot_row != col) {
      for (int j = 0; j < d; ++j) std::swap(lu[col * d + j], lu[pivot_row * d + j]);
      std::swap(perm[col], perm[pivot_row]);
    }
    const double inv_piv = 1.0 / lu[col * d + col];
    for (int r = col + 1; r < d; ++r) {
      const double f = lu[r * d + col] * inv_piv;
      lu[r * d + col] = f;
      for (int j = col + 1; j < d; ++j) lu[r * d + j] -= f * lu[col * d + j];
    }
  }

  for (int col = 0; col < d; ++col) {
    for (int i = 0; i < d; ++i) {
      double s = (perm[i] == col) ? 1.0 : 0.0;
      for (int j = 0; j < i; ++j) s -= lu[i * d + j] * y[j];
      y[i] = s;
    }
    for (int i = d - 1; i >= 0; --i) {
      double s = y[i];
      for (int j = i + 1; j < d; ++j) s -= lu[i * d + j] * out(j, col);
      out(i, col) = s / lu[i * d + i];
    }
  }
}

}  // namespace

void lu_inverse_into(const SquareMatrix& m, SquareMatrix& out) {
  const int d = m.dim;
  out.dim = d;
  out.entries.resize(static_cast<std::size_t>(d) * d);
  if (d == 1) {
    const double v = m(0, 0);
    if (std::abs(v) <= kPivotFloor) throw SingularMatrixError("singular 1x1 matrix");
    out(0, 0) = 1.0 / v;
    return;
  }
  if (d <= 8) {
    double lu[64];
    double y[8];
    int perm[8];
    for (int i = 0; i < d * d; ++i) lu[i] = m.entries[static_cast<std::size_t>(i)];
    lu_inverse_buffers(lu, perm, y, d, out);
    return;
  }
  std::vector<double> lu(m.entries.begin(), m.entries.end());
  std::vector<double> y(static_cast<std::size_t>(d));
  std::vector<int> perm(static_cast<std::size_t>(d));
  lu_inverse_buffers(lu.data(), perm.data(), y.data(), d, out);
}

SquareMatrix lu_inverse(const SquareMatrix& m) {
  SquareMatrix out(m.dim);
  lu_inverse_into(m, out);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double frobenius(const SquareMatrix& a, const SquareMatrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.entries.size(); ++i) s += a.entries[i] * b.entries[i];
  return s;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double inf_norm(const SquareMatrix& m) {
  double r = 0.0;
  for (double x : m.entries) r = std::max(r, std::abs(x));
  return r;
}

}  // namespace switchmc
