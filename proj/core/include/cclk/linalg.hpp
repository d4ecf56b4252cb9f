#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace cclk {

// Dense row-major matrix of doubles. Every numeric quantity in the library
// (Gram matrices, weights, activations, column vectors) is carried by this type.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix ones(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 1.0); }
  static Matrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  // Rows [first, first + count) as a new matrix.
  Matrix slice_rows(std::size_t first, std::size_t count) const;
  Matrix gather_rows(std::span<const std::size_t> indices) const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

// Standard product with a fixed i-k-j accumulation order, so results are
// bitwise reproducible.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix hconcat(const Matrix& a, const Matrix& b);

double max_abs(const Matrix& a) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a) noexcept;
bool is_symmetric(const Matrix& a, double rel_tol = 1e-9) noexcept;

// Cholesky factor L (lower triangular, A = L Lᵀ). Returns false when a pivot is
// not strictly positive.
bool cholesky(const Matrix& a, Matrix& lower);

// Solves A·X = B for symmetric positive definite A via Cholesky. No inverse is
// ever formed. When factorization fails the diagonal is loaded with `jitter`,
// then 10×, then 100× before giving up with SingularityError. A zero jitter
// therefore means "fail on the first breakdown".
Matrix solve_spd(const Matrix& a, const Matrix& b, double jitter);

// (x - min) / (max - min) elementwise; a constant matrix maps to zeros.
Matrix minmax_normalize(const Matrix& a);

}  // namespace cclk
