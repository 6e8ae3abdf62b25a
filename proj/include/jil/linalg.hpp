#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jil::linalg {

/// Dense row-major square or rectangular matrix. Only what the ridge path
/// and the oracles need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t k);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k is the eigenvector of values[k]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen jacobi_eigen(const Matrix& a, double tol = 1e-15,
                            int max_sweeps = 100);

/// Solves a x = b by Gaussian elimination with partial pivoting.
/// Throws std::domain_error on a (numerically) singular matrix.
std::vector<double> solve(Matrix a, std::vector<double> b);

double dot(std::span<const double> a, std::span<const double> b);
double frobenius_distance(const Matrix& a, const Matrix& b);

}  // namespace jil::linalg
