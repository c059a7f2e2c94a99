#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace projdebias {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  void append_row(std::span<const double> values);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Orthonormal basis of a subspace with per-direction variance-explained weights.
///
/// Invariants: unit vectors, pairwise orthogonal (1e-9), weights in [0,1],
/// non-increasing and summing to at most one.
struct Basis {
  std::vector<Vector> vectors;
  std::vector<double> weights;

  std::size_t size() const { return vectors.size(); }
  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }

  /// First `k` directions (variance ordered). Throws if fewer are available.
  Basis truncated(std::size_t k) const;

  /// Throws Error describing the first violated invariant.
  void validate(double tol = 1e-9) const;
};

struct SymmetricEigen {
  std::vector<double> values;  // descending
  std::vector<Vector> vectors;  // vectors[i] pairs with values[i]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tol = 1e-12, int max_sweeps = 100);

enum class Centering {
  Mean,  // subtract the column mean before forming the scatter matrix
  None,  // use the raw second-moment matrix
};

/// Scatter matrix (1/n) sum_r x_r x_r^T of the optionally centered rows.
Matrix covariance(const Matrix& rows, Centering centering);

/// Top-`k` principal components. Weights are eigenvalue / trace.
/// Each component is sign-normalized so its first nonzero coordinate is positive.
Basis pca(const Matrix& rows, std::size_t k, Centering centering = Centering::Mean);

/// h - sum_i v_i^n <h, g_i> g_i with n = 1 when `soft`, else n = 0.
Vector project_out(std::span<const double> h, const Basis& basis, bool soft);
void project_out_inplace(std::span<double> h, const Basis& basis, bool soft);

}  // namespace projdebias
