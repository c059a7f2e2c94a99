#include "projdebias/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "projdebias/error.hpp"

using namespace projdebias;

namespace {

Basis random_basis(std::mt19937_64& rng, std::size_t dim, std::size_t k) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Basis b;
  while (b.vectors.size() < k) {
    Vector v(dim);
    for (double& x : v) x = normal(rng);
    for (const auto& g : b.vectors) {
      const double c = dot(v, g);
      for (std::size_t i = 0; i < dim; ++i) v[i] -= c * g[i];
    }
    const double n = norm(v);
    if (n < 1e-6) continue;
    for (double& x : v) x /= n;
    b.vectors.push_back(v);
  }
  double remaining = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = remaining * unit(rng);
    b.weights.push_back(w);
    remaining -= w;
  }
  std::sort(b.weights.rbegin(), b.weights.rend());
  return b;
}

}  // namespace

TEST(Pca, ConstantRowsHaveInsufficientRank) {
  const Matrix rows = Matrix::from_rows({{2, 0}, {2, 0}, {2, 0}});
  try {
    pca(rows, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient rank"), std::string::npos);
  }
}

TEST(Pca, VarianceOnOneAxis) {
  const Matrix rows = Matrix::from_rows({{1, 0}, {-1, 0}, {0.5, 0}, {-0.5, 0}});
  const Basis b = pca(rows, 1);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(b.vectors[0][0], 1.0, 1e-12);
  EXPECT_NEAR(b.vectors[0][1], 0.0, 1e-12);
  EXPECT_NEAR(b.weights[0], 1.0, 1e-12);
}

TEST(Pca, MatchesClosedForm2x2) {
  // tests/oracles/small_oracles.py
  const Matrix rows = Matrix::from_rows({{1, 0.1}, {-1, -0.1}, {0.2, 1}, {-0.2, -1}});
  const Basis b = pca(rows, 2);
  const double comps[] = {0.7245473127905081, 0.68922506594584443, 0.68922506594584454, -0.72454731279050799};
  const double weights[] = {0.64652427605732288, 0.35347572394267718};
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(b.vectors[i][0], comps[2 * i], 1e-10);
    EXPECT_NEAR(b.vectors[i][1], comps[2 * i + 1], 1e-10);
    EXPECT_NEAR(b.weights[i], weights[i], 1e-10);
  }
}

TEST(Pca, CenteringChoiceMatters) {
  // A constant offset is all signal without centering and nothing with it.
  const Matrix rows = Matrix::from_rows({{2, 0}, {3, 0}, {2.5, 0}});
  const Basis raw = pca(rows, 1, Centering::None);
  EXPECT_NEAR(raw.vectors[0][0], 1.0, 1e-12);
  EXPECT_NEAR(raw.weights[0], 1.0, 1e-12);
  const Basis centered = pca(rows, 1, Centering::Mean);
  EXPECT_NEAR(centered.weights[0], 1.0, 1e-12);
  EXPECT_THROW(pca(Matrix::from_rows({{2, 0}, {2, 0}}), 1, Centering::Mean), Error);
  EXPECT_NO_THROW(pca(Matrix::from_rows({{2, 0}, {2, 0}}), 1, Centering::None));
}

TEST(Pca, RejectsBadInput) {
  EXPECT_THROW(pca(Matrix::from_rows({{1, 2}}), 0), Error);
  EXPECT_THROW(pca(Matrix::from_rows({{1, 2}}), 2), Error);
  EXPECT_THROW(pca(Matrix::from_rows({{1, NAN}, {0, 1}}), 1), Error);
}

TEST(Pca, SignConventionAndBasisInvariants) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix rows(8, 4);
    for (double& v : rows.data()) v = normal(rng);
    const Basis b = pca(rows, 3);
    EXPECT_NO_THROW(b.validate());
    for (const auto& g : b.vectors) {
      const auto first = std::find_if(g.begin(), g.end(), [](double x) { return std::abs(x) > 1e-12; });
      ASSERT_NE(first, g.end());
      EXPECT_GT(*first, 0.0);
    }
  }
}

TEST(Pca, CovarianceReconstruction) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (std::size_t dim = 1; dim <= 5; ++dim) {
    Matrix rows(dim + 3, dim);
    for (double& v : rows.data()) v = normal(rng);
    const Matrix cov = covariance(rows, Centering::Mean);
    const SymmetricEigen eig = jacobi_eigen(cov);
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < dim; ++i) s += eig.values[i] * eig.vectors[i][r] * eig.vectors[i][c];
        EXPECT_NEAR(s, cov(r, c), 1e-8);
      }
    }
  }
}

TEST(Pca, SwappedSignsGiveSameBasis) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Matrix rows(6, 3);
  for (double& v : rows.data()) v = normal(rng);
  Matrix neg = rows;
  for (double& v : neg.data()) v = -v;
  const Basis a = pca(rows, 2, Centering::None);
  const Basis b = pca(neg, 2, Centering::None);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.vectors[i][j], b.vectors[i][j], 1e-9);
  }
}

TEST(ProjectOut, HardRemovesAxis) {
  const Basis b{{{1, 0, 0}}, {1.0}};
  const Vector out = project_out(Vector{1, 1, 0}, b, false);
  EXPECT_EQ(out, (Vector{0, 1, 0}));
}

TEST(ProjectOut, SoftScalesByWeight) {
  const Basis b{{{1, 0, 0}}, {0.5}};
  const Vector out = project_out(Vector{1, 1, 0}, b, true);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 1.0);
  EXPECT_DOUBLE_EQ(out[2], 0.0);
}

TEST(ProjectOut, SoftMatchesGramExpansion) {
  // tests/oracles/small_oracles.py
  const Basis b{{{1.0 / 3, 2.0 / 3, 2.0 / 3}, {2.0 / 3, 1.0 / 3, -2.0 / 3}}, {0.7, 0.2}};
  const Vector out = project_out(Vector{1, 2, 3}, b, true);
  EXPECT_NEAR(out[0], 0.2333333333333335, 1e-12);
  EXPECT_NEAR(out[1], 0.33333333333333365, 1e-12);
  EXPECT_NEAR(out[2], 1.2000000000000002, 1e-12);
}

TEST(ProjectOut, DimensionMismatch) {
  const Basis b{{{1, 0, 0}}, {1.0}};
  EXPECT_THROW(project_out(Vector{1, 1}, b, false), Error);
}

TEST(ProjectOut, EmptyBasisIsIdentity) {
  const Vector h{0.25, -3.0};
  EXPECT_EQ(project_out(h, Basis{}, false), h);
}

TEST(ProjectOut, RandomizedProperties) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> dims(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = dims(rng);
    const std::size_t k = std::min<std::size_t>(dim, 1 + trial % 3);
    const Basis b = random_basis(rng, dim, k);
    Vector h(dim);
    for (double& x : h) x = normal(rng);

    const Vector hard = project_out(h, b, false);
    const Vector twice = project_out(hard, b, false);
    for (std::size_t i = 0; i < dim; ++i) EXPECT_NEAR(hard[i], twice[i], 1e-9);
    for (const auto& g : b.vectors) EXPECT_NEAR(dot(hard, g), 0.0, 1e-9);
    EXPECT_LE(norm(hard), norm(h) + 1e-12);

    const Vector soft = project_out(h, b, true);
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_NEAR(dot(soft, b.vectors[i]), (1.0 - b.weights[i]) * dot(h, b.vectors[i]), 1e-9);
      EXPECT_LE(std::abs(dot(soft, b.vectors[i])), std::abs(dot(h, b.vectors[i])) + 1e-12);
    }
    EXPECT_LE(norm(soft), norm(h) + 1e-12);
  }
}

TEST(ProjectOut, UnitWeightsMakeSoftEqualHard) {
  const Basis b{{{0.6, 0.8, 0}, {0, 0, 1}}, {1.0, 1.0}};
  const Vector h{0.3, -2, 5};
  const Vector soft = project_out(h, b, true);
  const Vector hard = project_out(h, b, false);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(soft[i], hard[i], 1e-12);
}

TEST(Basis, ValidateCatchesViolations) {
  EXPECT_THROW((Basis{{{1, 1}}, {0.5}}).validate(), Error);
  EXPECT_THROW((Basis{{{1, 0}, {1, 0}}, {0.5, 0.1}}).validate(), Error);
  EXPECT_THROW((Basis{{{1, 0}, {0, 1}}, {0.2, 0.5}}).validate(), Error);
  EXPECT_THROW((Basis{{{1, 0}, {0, 1}}, {0.8, 0.5}}).validate(), Error);
  EXPECT_NO_THROW((Basis{{{1, 0}, {0, 1}}, {0.5, 0.5}}).validate());
}

TEST(Basis, Truncated) {
  const Basis b{{{1, 0}, {0, 1}}, {0.7, 0.3}};
  const Basis one = b.truncated(1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.weights[0], 0.7);
  EXPECT_THROW(b.truncated(3), Error);
}
