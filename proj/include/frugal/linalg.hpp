#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace frugal {

// Dense row-major matrix. Dimensions here are tiny (copula and design
// matrices), so the operations below are plain loops.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace linalg {

Matrix matmul(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
Matrix transpose(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Cholesky factor L (lower) with A = L L^T; returns false if A is not
// positive definite. A must be symmetric.
bool cholesky(const Matrix& a, Matrix& l);

// Solves A x = b given the Cholesky factor L of A.
std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b);

struct EigenSym {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
EigenSym eigen_sym(const Matrix& a);

// Square root factor S with S S^T = A for symmetric PSD A (eigenvalues
// clamped at zero); used as the sampling factor when Cholesky fails.
Matrix psd_sqrt_factor(const Matrix& a);

// Least squares via Householder QR with a ridge fallback: if the triangular
// factor is numerically rank deficient, refits with lambda added to the
// normal equations diagonal. Throws FitError if still singular.
std::vector<double> least_squares(const Matrix& x, std::span<const double> y, double ridge = 1e-8);

}  // namespace linalg

}  // namespace frugal
