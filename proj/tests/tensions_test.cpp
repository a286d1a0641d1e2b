#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fracperim/tensions.hpp"
#include "support.hpp"

using namespace fracperim;
using fracperim::testing::brute_force_closure;
using fracperim::testing::max_entry_difference;

TEST(Validate, AcceptsMinimalMatrix) { EXPECT_FALSE(validate({{0, 1}, {1, 0}}).has_value()); }

TEST(Validate, ReportsAsymmetry) {
  const auto v = validate({{0, 1}, {2, 0}});
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->i, 1u);
  EXPECT_EQ(v->j, 2u);
}

TEST(Validate, ReportsNonPositiveEntry) {
  const auto v = validate({{0, 0}, {0, 0}});
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->i, 1u);
  EXPECT_EQ(v->j, 2u);
}

TEST(Validate, ReportsNonzeroDiagonal) {
  const auto v = validate({{0.5, 1}, {1, 0}});
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->i, 1u);
  EXPECT_EQ(v->j, 1u);
}

TEST(Relax, ShortensViolatedEntry) {
  const SurfaceTensionMatrix sigma{{0, 1, 1}, {1, 0, 3}, {1, 3, 0}};
  const SurfaceTensionMatrix expected{{0, 1, 1}, {1, 0, 2}, {1, 2, 0}};
  EXPECT_EQ(relax(sigma), expected);
  EXPECT_EQ(brute_force_closure(sigma), expected);
}

TEST(Relax, FixesMetrics) {
  const SurfaceTensionMatrix sigma{{0, 1, 1}, {1, 0, 2}, {1, 2, 0}};
  EXPECT_EQ(relax(sigma), sigma);
}

TEST(Relax, FixesAdditiveMatrices) {
  const std::vector<double> alpha{0.0, 0.25, 1.5, 2.0, 0.75};
  SurfaceTensionMatrix sigma(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i)
    for (std::size_t j = i + 1; j < alpha.size(); ++j) sigma.set_pair(i, j, alpha[i] + alpha[j]);
  EXPECT_EQ(relax(sigma), sigma);
}

TEST(Relax, RejectsInvalidInput) { EXPECT_THROW(relax({{0, 1}, {2, 0}}), std::invalid_argument); }

TEST(Relax, PathWitnessBreaksTiesLexicographically) {
  // 1 -> 2 costs 2 directly, via 3 and via 4; the smallest sequence wins.
  const SurfaceTensionMatrix sigma{{0, 2, 1, 1}, {2, 0, 1, 1}, {1, 1, 0, 5}, {1, 1, 5, 0}};
  EXPECT_EQ(relaxation_path(sigma, 1, 2), (std::vector<Label>{1, 2}));
  const SurfaceTensionMatrix wet{{0, 3, 1, 1}, {3, 0, 1, 1}, {1, 1, 0, 5}, {1, 1, 5, 0}};
  EXPECT_EQ(relaxation_path(wet, 1, 2), (std::vector<Label>{1, 3, 2}));
}

class RelaxProperties : public ::testing::TestWithParam<int> {};

TEST_P(RelaxProperties, AgreesWithBruteForceAndIsMaximal) {
  const auto m = static_cast<std::size_t>(GetParam());
  std::mt19937_64 rng(1000 + m);
  for (int trial = 0; trial < 200; ++trial) {
    const SurfaceTensionMatrix sigma = fracperim::testing::random_dyadic_matrix(m, rng);
    const SurfaceTensionMatrix bar = relax(sigma);
    ASSERT_EQ(bar, brute_force_closure(sigma));
    ASSERT_EQ(relax(bar), bar);
    ASSERT_TRUE(check_triangle(bar));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        ASSERT_LE(bar(i, j), sigma(i, j));
        if (i != j) ASSERT_GE(bar(i, j), sigma.min_off_diagonal());
      }
    // Any metric below sigma stays below the closure.
    SurfaceTensionMatrix below = relax(sigma.scaled(0.5));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) ASSERT_LE(below(i, j), bar(i, j));
  }
}

TEST_P(RelaxProperties, FloatingPointClosureIsIdempotentAndTriangular) {
  const auto m = static_cast<std::size_t>(GetParam());
  std::mt19937_64 rng(7 * m);
  for (int trial = 0; trial < 200; ++trial) {
    const SurfaceTensionMatrix bar = relax(fracperim::testing::random_matrix(m, rng));
    ASSERT_EQ(relax(bar), bar);
    ASSERT_TRUE(check_triangle(bar));
  }
}

INSTANTIATE_TEST_SUITE_P(ChamberCounts, RelaxProperties, ::testing::Values(2, 3, 4, 5, 6));

TEST(CheckTriangle, DirectCases) {
  EXPECT_FALSE(check_triangle({{0, 1, 1}, {1, 0, 3}, {1, 3, 0}}));
  EXPECT_TRUE(check_triangle({{0, 1, 1}, {1, 0, 2}, {1, 2, 0}}));
}

TEST(Additive3, SymmetricCase) {
  const auto a = additive_decomposition_3(SurfaceTensionMatrix::uniform(3, 1.0));
  EXPECT_EQ(a, (std::array<double, 3>{0.5, 0.5, 0.5}));
}

TEST(Additive3, SolvesLinearSystem) {
  const auto a = additive_decomposition_3({{0, 3, 4}, {3, 0, 5}, {4, 5, 0}});
  EXPECT_EQ(a, (std::array<double, 3>{1, 2, 3}));
}

TEST(Additive3, BoundaryCaseHasZeroWeight) {
  const auto a = additive_decomposition_3({{0, 1, 1}, {1, 0, 2}, {1, 2, 0}});
  EXPECT_EQ(a, (std::array<double, 3>{0, 1, 1}));
}

TEST(Additive3, RejectsBadInput) {
  EXPECT_THROW(additive_decomposition_3(SurfaceTensionMatrix::uniform(4, 1.0)), std::invalid_argument);
  EXPECT_THROW(additive_decomposition_3({{0, 1, 1}, {1, 0, 3}, {1, 3, 0}}), std::invalid_argument);
}

TEST(Additive3, ReconstructsRandomMetrics) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const SurfaceTensionMatrix sigma = fracperim::testing::random_metric(3, rng);
    const auto a = additive_decomposition_3(sigma);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_GE(a[i], 0.0);
      for (std::size_t j = i + 1; j < 3; ++j) EXPECT_NEAR(a[i] + a[j], sigma(i, j), 1e-12);
    }
  }
}

TEST(Decomposition4, UniformMatrix) {
  const Decomposition4 d = decomposition_4(SurfaceTensionMatrix::uniform(4, 1.0));
  EXPECT_EQ(d.alpha_tilde, (std::array<double, 7>{1.5, 1.5, 1.5, 1.5, 1, 1, 1}));
  EXPECT_EQ(d.alpha_star, 1.0);
  EXPECT_EQ(d.reconstruct(), SurfaceTensionMatrix::uniform(4, 1.0));
}

TEST(Decomposition4, OppositePairsHeavier) {
  const SurfaceTensionMatrix sigma{{0, 2, 1, 1}, {2, 0, 1, 1}, {1, 1, 0, 2}, {1, 1, 2, 0}};
  ASSERT_TRUE(check_triangle(sigma));
  const Decomposition4 d = decomposition_4(sigma);
  EXPECT_EQ(d.alpha_tilde[4], 2.0);
  EXPECT_EQ(d.alpha_tilde[5], 1.0);
  EXPECT_EQ(d.alpha_tilde[6], 1.0);
  EXPECT_EQ(d.alpha_star, 2.0);
  EXPECT_EQ(d.reconstruct(), sigma);
}

TEST(Decomposition4, RandomMetricsReconstruct) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const SurfaceTensionMatrix sigma = fracperim::testing::random_metric(4, rng);
    const Decomposition4 d = decomposition_4(sigma);
    EXPECT_LE(max_entry_difference(d.reconstruct(), sigma), 1e-12);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_GE(d.alpha_tilde[k] - d.alpha_star, -1e-12);
  }
}

TEST(Decomposition4, RejectsBadInput) {
  EXPECT_THROW(decomposition_4(SurfaceTensionMatrix::uniform(3, 1.0)), std::invalid_argument);
  EXPECT_THROW(decomposition_4({{0, 3, 1, 1}, {3, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 0}}), std::invalid_argument);
}

TEST(CutCone, AdditiveMatrixUsesSingletons) {
  // With m = 3 every cut isolates one chamber, so the weights are unique.
  const std::vector<double> alpha{0.5, 1.0, 2.0};
  SurfaceTensionMatrix sigma(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) sigma.set_pair(i, j, alpha[i] + alpha[j]);
  const auto d = cut_cone_decomposition(sigma);
  ASSERT_TRUE(d.has_value());
  EXPECT_LT(d->residual, 1e-9);
  std::vector<double> found(3, 0.0);
  for (const CutTerm& t : d->terms) {
    const std::uint32_t single = __builtin_popcount(t.mask) == 1 ? t.mask : (~t.mask & 0x7u);
    found[static_cast<std::size_t>(__builtin_ctz(single))] += t.lambda;
  }
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(found[k], alpha[k], 1e-9);
}

TEST(CutCone, AdditiveFourChamberMatrixReconstructs) {
  const std::vector<double> alpha{0.5, 1.0, 2.0, 0.25};
  SurfaceTensionMatrix sigma(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) sigma.set_pair(i, j, alpha[i] + alpha[j]);
  const auto d = cut_cone_decomposition(sigma);
  ASSERT_TRUE(d.has_value());
  EXPECT_LT(max_entry_difference(d->reconstruct(), sigma), 1e-9);
}

TEST(CutCone, ThreeChamberFixture) {
  const SurfaceTensionMatrix sigma{{0, 3, 4}, {3, 0, 5}, {4, 5, 0}};
  const auto d = cut_cone_decomposition(sigma);
  ASSERT_TRUE(d.has_value());
  EXPECT_LT(max_entry_difference(d->reconstruct(), sigma), 1e-9);
  for (const CutTerm& t : d->terms) EXPECT_GE(t.lambda, 0.0);
}

TEST(CutCone, PentagonalViolationIsNotEmbeddable) {
  const SurfaceTensionMatrix sigma = fracperim::testing::k23_metric();
  ASSERT_TRUE(check_triangle(sigma));
  // Certificate: b = (-1, -1, 1, 1, 1) gives sum_{i<j} b_i b_j delta^J_ij <= 0
  // for every cut J, while sum_{i<j} b_i b_j sigma_ij = 2 > 0.
  const std::array<double, 5> b{-1, -1, 1, 1, 1};
  double value = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) value += b[i] * b[j] * sigma(i, j);
  ASSERT_EQ(value, 2.0);
  for (std::uint32_t mask = 1; mask < 16; ++mask) {
    const SurfaceTensionMatrix cut = cut_matrix(5, mask);
    double c = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j) c += b[i] * b[j] * cut(i, j);
    ASSERT_LE(c, 0.0);
  }
  EXPECT_FALSE(cut_cone_decomposition(sigma).has_value());
}

TEST(CutCone, SmallChamberCountsAlwaysEmbed) {
  std::mt19937_64 rng(53);
  for (std::size_t m : {3u, 4u})
    for (int trial = 0; trial < 100; ++trial) {
      const SurfaceTensionMatrix sigma = fracperim::testing::random_metric(m, rng);
      const auto d = cut_cone_decomposition(sigma);
      ASSERT_TRUE(d.has_value());
      EXPECT_LT(d->residual, 1e-9);
      EXPECT_LT(max_entry_difference(d->reconstruct(), sigma), 1e-9);
      for (const CutTerm& t : d->terms) {
        EXPECT_GE(t.lambda, 0.0);
        EXPECT_NE(t.mask, 0u);
        EXPECT_NE(t.mask, (1u << m) - 1);
      }
    }
}

TEST(CutCone, RejectsLargeChamberCounts) {
  EXPECT_THROW(cut_cone_decomposition(SurfaceTensionMatrix::uniform(7, 1.0)), std::invalid_argument);
}

TEST(MatrixFormat, RoundTrips) {
  std::mt19937_64 rng(3);
  const SurfaceTensionMatrix sigma = fracperim::testing::random_matrix(5, rng);
  std::stringstream buffer;
  write_matrix(buffer, sigma);
  EXPECT_EQ(read_matrix(buffer), sigma);
}

TEST(MatrixFormat, RejectsTruncatedInput) {
  std::istringstream in("3\n0 1 1\n1 0 2\n");
  EXPECT_THROW(read_matrix(in), std::runtime_error);
}

TEST(CutFormat, RoundTrips) {
  const auto d = cut_cone_decomposition({{0, 3, 4}, {3, 0, 5}, {4, 5, 0}});
  ASSERT_TRUE(d.has_value());
  std::stringstream buffer;
  write_cut_decomposition(buffer, *d);
  const CutDecomposition back = read_cut_decomposition(buffer, 3);
  ASSERT_EQ(back.terms.size(), d->terms.size());
  for (std::size_t k = 0; k < back.terms.size(); ++k) {
    EXPECT_EQ(back.terms[k].mask, d->terms[k].mask);
    EXPECT_EQ(back.terms[k].lambda, d->terms[k].lambda);
  }
}
