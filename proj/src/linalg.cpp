#include "projdebias/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "projdebias/error.hpp"

namespace projdebias {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error("matrix data length " + std::to_string(data_.size()) + " does not match " +
                std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  Matrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw Error("row width " + std::to_string(values.size()) + " does not match matrix width " +
                std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Basis Basis::truncated(std::size_t k) const {
  if (k > vectors.size()) {
    throw Error("requested " + std::to_string(k) + " subspace directions but only " +
                std::to_string(vectors.size()) + " available");
  }
  Basis out;
  out.vectors.assign(vectors.begin(), vectors.begin() + static_cast<std::ptrdiff_t>(k));
  out.weights.assign(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

void Basis::validate(double tol) const {
  if (vectors.size() != weights.size()) throw Error("basis: vector/weight count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != dim()) throw Error("basis: ragged vectors");
    for (double x : vectors[i]) {
      if (!std::isfinite(x)) throw Error("basis: non-finite entry");
    }
    if (std::abs(norm(vectors[i]) - 1.0) > tol) {
      throw Error("basis: vector " + std::to_string(i) + " is not unit length");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(dot(vectors[i], vectors[j])) > tol) {
        throw Error("basis: vectors " + std::to_string(j) + " and " + std::to_string(i) +
                    " are not orthogonal");
      }
    }
    if (weights[i] < -tol || weights[i] > 1.0 + tol) throw Error("basis: weight outside [0,1]");
    if (i > 0 && weights[i] > weights[i - 1] + tol) throw Error("basis: weights not non-increasing");
    total += weights[i];
  }
  if (total > 1.0 + tol) throw Error("basis: weights sum above one");
}

SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tol, int max_sweeps) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw Error("jacobi_eigen: matrix is not square");
  Matrix a = symmetric;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double scale = 0.0;
  for (double x : a.data()) scale += x * x;
  scale = std::sqrt(scale);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol * scale || off == 0.0) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that zeroes a(p,q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymmetricEigen out;
  for (std::size_t idx : order) {
    out.values.push_back(a(idx, idx));
    Vector vec(n);
    for (std::size_t k = 0; k < n; ++k) vec[k] = v(k, idx);
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

Matrix covariance(const Matrix& rows, Centering centering) {
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  Vector mean(d, 0.0);
  if (centering == Centering::Mean) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) mean[c] += rows(r, c);
    for (double& m : mean) m /= static_cast<double>(n);
  }
  Matrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = rows(r, i) - mean[i];
      for (std::size_t j = i; j < d; ++j) cov(i, j) += xi * (rows(r, j) - mean[j]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov(i, j) /= static_cast<double>(n);
      cov(j, i) = cov(i, j);
    }
  }
  return cov;
}

namespace {

void normalize_sign(Vector& v) {
  for (double x : v) {
    if (std::abs(x) > 1e-12) {
      if (x < 0.0) {
        for (double& y : v) y = -y;
      }
      return;
    }
  }
}

}  // namespace

Basis pca(const Matrix& rows, std::size_t k, Centering centering) {
  if (k == 0) throw Error("pca: k must be at least 1");
  if (rows.rows() < k || rows.cols() < k) {
    throw Error("pca: need at least k rows and k columns (have " + std::to_string(rows.rows()) +
                "x" + std::to_string(rows.cols()) + ", k=" + std::to_string(k) + ")");
  }
  for (double x : rows.data()) {
    if (!std::isfinite(x)) throw Error("pca: non-finite input");
  }

  const Matrix cov = covariance(rows, centering);
  double trace = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) trace += cov(i, i);

  const SymmetricEigen eig = jacobi_eigen(cov);
  if (!(trace > 0.0) || eig.values[k - 1] <= 1e-10 * trace) {
    throw Error("pca: insufficient rank for " + std::to_string(k) + " component(s)");
  }

  Basis basis;
  for (std::size_t i = 0; i < k; ++i) {
    Vector v = eig.vectors[i];
    const double len = norm(v);
    for (double& x : v) x /= len;
    normalize_sign(v);
    basis.vectors.push_back(std::move(v));
    basis.weights.push_back(std::clamp(eig.values[i] / trace, 0.0, 1.0));
  }
  return basis;
}

void project_out_inplace(std::span<double> h, const Basis& basis, bool soft) {
  if (basis.size() == 0) return;
  if (h.size() != basis.dim()) {
    throw Error("project_out: vector has length " + std::to_string(h.size()) +
                " but basis dimension is " + std::to_string(basis.dim()));
  }
  std::vector<double> coef(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    coef[i] = dot(h, basis.vectors[i]) * (soft ? basis.weights[i] : 1.0);
  }
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Vector& g = basis.vectors[i];
    for (std::size_t k = 0; k < h.size(); ++k) h[k] -= coef[i] * g[k];
  }
}

Vector project_out(std::span<const double> h, const Basis& basis, bool soft) {
  Vector out(h.begin(), h.end());
  project_out_inplace(out, basis, soft);
  return out;
}

}  // namespace projdebias
