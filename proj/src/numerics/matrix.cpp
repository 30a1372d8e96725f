#include "coldrec/numerics/matrix.hpp"

#include <cmath>

#include "coldrec/error.hpp"

namespace coldrec {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("matrix " + shape_string() + " given " +
                     std::to_string(values_.size()) + " values");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Matrix::from_rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(values));
}

void Matrix::fill(double v) {
  for (double& x : values_) x = v;
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) {
    throw ShapeError("matvec: matrix " + a.shape_string() + " vs vector " +
                     length_string(x.size()));
  }
  Vector y(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* w = a.row(r).data();
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += w[c] * x[c];
    y[r] = s;
  }
  return y;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) {
    throw ShapeError("matvec_transposed: matrix " + a.shape_string() +
                     " vs vector " + length_string(x.size()));
  }
  Vector y(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* w = a.row(r).data();
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += w[c] * xr;
  }
  return y;
}

void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v,
               double scale) {
  if (u.size() != a.rows() || v.size() != a.cols()) {
    throw ShapeError("add_outer: matrix " + a.shape_string() + " vs " +
                     length_string(u.size()) + " x " + length_string(v.size()));
  }
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double ur = scale * u[r];
    if (ur == 0.0) continue;
    double* w = a.row(r).data();
    for (std::size_t c = 0; c < a.cols(); ++c) w[c] += ur * v[c];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: " + length_string(a.size()) + " vs " +
                     length_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

void axpy(std::span<double> y, double scale, std::span<const double> x) {
  if (y.size() != x.size()) {
    throw ShapeError("axpy: " + length_string(y.size()) + " vs " +
                     length_string(x.size()));
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * x[i];
}

Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void require_finite(std::span<const double> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(what + ": non-finite value at index " + std::to_string(i));
    }
  }
}

std::string length_string(std::size_t n) { return "[" + std::to_string(n) + "]"; }

}  // namespace coldrec
