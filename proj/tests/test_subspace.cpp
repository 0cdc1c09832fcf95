#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "placemap/oracle.hpp"
#include "placemap/subspace.hpp"
#include "support.hpp"

namespace placemap {
namespace {

using testing::error_kind_of;
using testing::Gen;
using testing::place_of;

const std::vector<double> e1{1, 0, 0}, e2{0, 1, 0}, e3{0, 0, 1};

double max_gram_deviation(const PlaceSubspace& s) {
  double worst = 0.0;
  for (std::size_t a = 0; a < s.rank; ++a) {
    for (std::size_t b = 0; b < s.rank; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < s.n; ++i) dot += s.basis_column(a)[i] * s.basis_column(b)[i];
      worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}

double residual(const PlaceSubspace& s, std::span<const double> q) { return project(s, q).residual; }

double total_residual(const PlaceSubspace& s, const PlaceMatrix& pm) {
  double t = 0.0;
  for (std::size_t j = 0; j < pm.m(); ++j) t += residual(s, pm.column(j));
  return t;
}

TEST(PlaceMatrix, Validation) {
  EXPECT_EQ(error_kind_of([] { PlaceMatrix("p", 2, 3, std::vector<double>(6, 0.0)); }), ErrorKind::Shape);
  EXPECT_EQ(error_kind_of([] { PlaceMatrix("p", 3, 0, {}); }), ErrorKind::Degenerate);
  EXPECT_EQ(error_kind_of([] { PlaceMatrix("p", 3, 1, {1, 1, 0}); }), ErrorKind::Data);
  EXPECT_EQ(error_kind_of([] { PlaceMatrix("p", 3, 1, {NAN, 0, 0}); }), ErrorKind::Data);
  const auto pm = PlaceMatrix::normalized("p", 3, 1, {3, 0, 4});
  EXPECT_EQ(pm.column(0)[0], 0.6);
  EXPECT_EQ(pm.column_ids(), (std::vector<std::string>{"p#0"}));
}

TEST(FactorQr, OrthonormalInputIsItsOwnBasis) {
  const auto s = factor_qr(place_of("p", {e1, e2}));
  EXPECT_EQ(s.rank, 2u);
  for (std::size_t j = 0; j < 2; ++j) {
    const auto& d = j == 0 ? e1 : e2;
    const double sign = s.basis_column(j)[j] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(sign * s.basis_column(j)[i], d[i]);
  }
  EXPECT_EQ(residual(s, e3), 1.0);
}

TEST(FactorQr, DuplicateColumnDropsToRankOne) {
  const auto s = factor_qr(place_of("p", {e1, e1}));
  ASSERT_EQ(s.rank, 1u);
  EXPECT_EQ(std::abs(s.basis_column(0)[0]), 1.0);
  EXPECT_EQ(s.basis_column(0)[1], 0.0);
  EXPECT_EQ(s.basis_column(0)[2], 0.0);
  EXPECT_EQ(s.retained, (std::vector<std::uint32_t>{0}));
}

TEST(FactorQr, RandomTallMatrixReconstructs) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Gen g(seed);
    const auto pm = g.place("p", 64, 4);
    const auto s = factor_qr(pm);
    ASSERT_EQ(s.rank, 4u);
    EXPECT_LE(max_gram_deviation(s), 1e-10) << "seed " << seed;
    // R is stored in original column order, so Q R reproduces D directly.
    double err2 = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      for (std::size_t i = 0; i < 64; ++i) {
        double v = 0.0;
        for (std::size_t r = 0; r < 4; ++r) v += s.basis_column(r)[i] * s.r(r, j);
        err2 += (v - pm.column(j)[i]) * (v - pm.column(j)[i]);
      }
    }
    EXPECT_LE(std::sqrt(err2), 1e-9) << "seed " << seed;
    // The retained block of R is upper triangular with a positive diagonal.
    for (std::size_t r = 0; r < 4; ++r) {
      EXPECT_GT(s.r(r, s.retained[r]), 0.0);
      for (std::size_t c = 0; c < r; ++c) EXPECT_EQ(s.r(r, s.retained[c]), 0.0);
    }
  }
}

TEST(FactorQr, SpansColumnSpace) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Gen g(seed);
    const std::size_t m = g.index(1, 6);
    const auto pm = g.place("p", g.index(m, 40), m);
    const auto s = factor_qr(pm);
    double off2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) off2 += std::max(0.0, residual(s, pm.column(j)));
    EXPECT_LE(std::sqrt(off2), 1e-7) << "seed " << seed;
  }
}

TEST(FactorQr, PivotTiesGoToLowestIndex) {
  const auto s = factor_qr(place_of("p", {e2, e1, e3}));
  EXPECT_EQ(s.retained, (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(FactorSvd, FullRankMatchesQrExample) {
  const auto pm = place_of("p", {e1, e2});
  const auto svd = factor_svd(pm, 2);
  const auto qr = factor_qr(pm);
  Gen g(3);
  for (int t = 0; t < 100; ++t) {
    const auto q = g.unit(3);
    EXPECT_NEAR(project(svd, q).magnitude, project(qr, q).magnitude, 1e-10);
  }
}

TEST(FactorSvd, RankOneDuplicate) {
  const auto s = factor_svd(place_of("p", {e1, e1}), 1);
  ASSERT_EQ(s.rank, 1u);
  EXPECT_NEAR(std::abs(s.basis_column(0)[0]), 1.0, 1e-15);
  ASSERT_TRUE(s.singular_values);
  EXPECT_NEAR((*s.singular_values)[0], std::sqrt(2.0), 1e-15);
  EXPECT_NEAR((*s.singular_values)[1], 0.0, 1e-15);
}

TEST(FactorSvd, RankOutOfRangeIsParameterError) {
  const auto pm = place_of("p", {e1, e2});
  EXPECT_EQ(error_kind_of([&] { factor_svd(pm, 3); }), ErrorKind::Parameter);
  EXPECT_EQ(error_kind_of([&] { factor_svd(pm, 0); }), ErrorKind::Parameter);
}

TEST(FactorSvd, SingularValuesDescendAndBasisIsOrthonormal) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Gen g(seed);
    const std::size_t m = g.index(1, 6);
    const auto s = factor_svd(g.place("p", g.index(m, 50), m), m);
    EXPECT_LE(max_gram_deviation(s), 1e-10);
    const auto& sv = *s.singular_values;
    EXPECT_TRUE(std::is_sorted(sv.rbegin(), sv.rend()));
    double fro2 = 0.0;
    for (double x : sv) fro2 += x * x;
    EXPECT_NEAR(fro2, double(m), 1e-10);  // unit columns: ||D||_F^2 = m
  }
}

// Truncated SVD minimizes the total squared residual of the columns over all
// rank-k bases; spot-check against the bases spanned by each column triple.
TEST(FactorSvd, TruncationBeatsEveryColumnTripleBasis) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Gen g(seed);
    const auto pm = g.place("p", 32, 4);
    const double svd_total = total_residual(factor_svd(pm, 3), pm);
    for (std::size_t skip = 0; skip < 4; ++skip) {
      std::vector<std::vector<double>> cols;
      for (std::size_t j = 0; j < 4; ++j) {
        if (j != skip) cols.emplace_back(pm.column(j).begin(), pm.column(j).end());
      }
      const double triple_total = total_residual(factor_qr(place_of("t", cols)), pm);
      EXPECT_LE(svd_total, triple_total + 1e-12) << "seed " << seed << " skip " << skip;
    }
    // Optimal total equals the tail singular value energy.
    const auto sv = *factor_svd(pm, 3).singular_values;
    EXPECT_NEAR(svd_total, sv[3] * sv[3], 1e-10);
  }
}

TEST(Project, Examples) {
  const auto s = factor_qr(place_of("p", {e1, e2}));
  auto p = project(s, e1);
  EXPECT_EQ(p.magnitude, 1.0);
  EXPECT_EQ(p.residual, 0.0);
  p = project(s, e3);
  EXPECT_EQ(p.magnitude, 0.0);
  EXPECT_EQ(p.residual, 1.0);
  const double c = 1.0 / std::sqrt(3.0);
  p = project(s, std::vector<double>{c, c, c});
  EXPECT_NEAR(p.magnitude * p.magnitude, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.residual, 1.0 / 3.0, 1e-15);
  // Non-unit queries are normalized first.
  p = project(s, std::vector<double>{5, 0, 0});
  EXPECT_EQ(p.residual, 0.0);
  EXPECT_EQ(error_kind_of([&] { project(s, std::vector<double>{1, 0}); }), ErrorKind::Shape);
}

TEST(Project, PythagoreanIdentityProperty) {
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    Gen g(seed);
    const std::size_t m = g.index(1, 6);
    const auto pm = g.place("p", g.index(std::max<std::size_t>(m, 2), 64), m);
    const auto s = seed % 2 ? factor_qr(pm) : factor_svd(pm, g.index(1, m));
    const auto p = project(s, g.unit(pm.n()));
    ASSERT_LE(std::abs(p.magnitude * p.magnitude + p.residual - 1.0), 1e-9) << "seed " << seed;
    ASSERT_GE(p.magnitude, 0.0);
    ASSERT_LE(p.magnitude, 1.0 + 1e-9);
  }
}

TEST(Project, WholeSpaceBasisIsExact) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Gen g(seed);
    const std::size_t n = g.index(2, 6);
    const auto s = factor_qr(g.place("p", n, n));
    ASSERT_EQ(s.rank, n);
    const auto p = project(s, g.unit(n));
    ASSERT_EQ(p.magnitude, 1.0) << "seed " << seed;
    ASSERT_EQ(p.residual, 0.0) << "seed " << seed;
  }
}

TEST(ResidualBruteForce, Examples) {
  const auto pm = place_of("p", {e1});
  EXPECT_EQ(residual_brute_force(pm, e1), 0.0);
  EXPECT_EQ(residual_brute_force(pm, e2), 1.0);
  EXPECT_EQ(error_kind_of([&] { residual_brute_force(pm, std::vector<double>{1, 0}); }), ErrorKind::Shape);
}

TEST(ResidualBruteForce, AgreesWithQrOverManySeeds) {
  for (std::uint64_t seed = 0; seed < 1500; ++seed) {
    Gen g(seed);
    const auto pm = g.place("p", 16, 3);
    const auto q = g.unit(16);
    ASSERT_LE(std::abs(residual_brute_force(pm, q) - residual(factor_qr(pm), q)), 1e-7) << "seed " << seed;
  }
}

TEST(SpanInvariance, PermutationAndSignFlips) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Gen g(seed);
    const std::size_t m = g.index(1, 6), n = g.index(m, 48);
    const auto pm = g.place("p", n, m);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g.engine());
    std::vector<double> flipped;
    for (std::size_t j : perm) {
      const double sign = g.index(0, 1) ? -1.0 : 1.0;
      for (double x : pm.column(j)) flipped.push_back(sign * x);
    }
    const auto a = factor_qr(pm);
    const auto b = factor_qr(PlaceMatrix("p", n, m, flipped));
    for (int t = 0; t < 5; ++t) {
      const auto q = g.unit(n);
      ASSERT_LE(std::abs(residual(a, q) - residual(b, q)), 1e-10) << "seed " << seed;
    }
  }
}

TEST(SpanInvariance, InvertibleRecombination) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Gen g(seed);
    const std::size_t m = g.index(1, 6), n = g.index(m + 2, 48);
    const auto pm = g.place("p", n, m);
    // M = I + 0.3 G stays well conditioned for these sizes.
    std::vector<double> mix(m * m);
    for (std::size_t i = 0; i < m * m; ++i) mix[i] = 0.3 * g.normal() + (i % (m + 1) == 0 ? 1.0 : 0.0);
    std::vector<double> dm(n * m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t l = 0; l < m; ++l) {
        for (std::size_t i = 0; i < n; ++i) dm[j * n + i] += pm.column(l)[i] * mix[l * m + j];
      }
    }
    const auto a = factor_qr(pm);
    const auto b = factor_qr(PlaceMatrix::normalized("p", n, m, dm));
    if (b.rank != a.rank) continue;  // recombination lost rank
    for (int t = 0; t < 5; ++t) {
      const auto q = g.unit(n);
      ASSERT_LE(std::abs(residual(a, q) - residual(b, q)), 1e-8) << "seed " << seed;
    }
  }
}

TEST(SvdQrEquivalence, FullRankMagnitudes) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Gen g(seed);
    const std::size_t m = g.index(1, 6);
    const auto pm = g.place("p", g.index(m, 64), m);
    const auto qr = factor_qr(pm);
    const auto svd = factor_svd(pm, qr.rank);
    ASSERT_EQ(svd.rank, qr.rank);
    for (int t = 0; t < 5; ++t) {
      const auto q = g.unit(pm.n());
      ASSERT_LE(std::abs(project(qr, q).magnitude - project(svd, q).magnitude), 1e-9) << "seed " << seed;
    }
  }
}

TEST(SvdQrEquivalence, RankDeficientPlace) {
  Gen g(11);
  const auto a = g.unit(20), b = g.unit(20);
  const auto pm = place_of("p", {a, b, a, b});
  const auto qr = factor_qr(pm);
  ASSERT_EQ(qr.rank, 2u);
  const auto svd = factor_svd(pm, 4);
  ASSERT_EQ(svd.rank, 2u);  // clamped to the numerical rank
  for (int t = 0; t < 20; ++t) {
    const auto q = g.unit(20);
    EXPECT_LE(std::abs(project(qr, q).magnitude - project(svd, q).magnitude), 1e-9);
  }
}

TEST(DuplicateColumn, ResidualsUnchanged) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Gen g(seed);
    const std::size_t m = g.index(1, 5), n = g.index(m + 1, 48);
    const auto pm = g.place("p", n, m);
    auto data = pm.data();
    const std::size_t dup = g.index(0, m - 1);
    data.insert(data.end(), pm.column(dup).begin(), pm.column(dup).end());
    const auto a = factor_qr(pm);
    const auto b = factor_qr(PlaceMatrix("p", n, m + 1, data));
    ASSERT_EQ(a.rank, b.rank);
    for (int t = 0; t < 5; ++t) {
      const auto q = g.unit(n);
      ASSERT_LE(std::abs(residual(a, q) - residual(b, q)), 1e-12) << "seed " << seed;
    }
  }
}

TEST(MonotoneTruncation, ResidualNonIncreasingInRank) {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Gen g(seed);
    const std::size_t m = g.index(2, 6);
    const auto pm = g.place("p", g.index(m, 40), m);
    const auto q = g.unit(pm.n());
    double previous = 2.0;
    for (std::size_t k = 1; k <= m; ++k) {
      const double r = residual(factor_svd(pm, k), q);
      ASSERT_LE(r, previous) << "seed " << seed << " k " << k;
      previous = r;
    }
  }
}

TEST(Degenerate, IllConditionedPlaceStaysOrthonormal) {
  Gen g(5);
  const auto a = g.unit(30);
  auto b = a;
  for (std::size_t i = 0; i < 30; ++i) b[i] += 1e-6 * g.normal();
  const auto pm = PlaceMatrix::normalized("p", 30, 2, testing::column_major({a, b}));
  const auto qr = factor_qr(pm);
  ASSERT_EQ(qr.rank, 2u);
  EXPECT_LE(max_gram_deviation(qr), 1e-12);
  EXPECT_LE(max_gram_deviation(factor_svd(pm, 2)), 1e-10);
  for (int t = 0; t < 20; ++t) {
    const auto q = g.unit(30);
    EXPECT_GE(residual(qr, q), -1e-12);
  }
}

}  // namespace
}  // namespace placemap
