#include "test_util.hpp"

using namespace btd;
using namespace btd::testing;

namespace {

DenseTensor3 core_from(std::initializer_list<std::array<int, 3>> ones) {
  DenseTensor3 g(2, 2, 2);
  for (const auto& e : ones)
    g(e[0], e[1], e[2]) += 1.0;
  return g;
}

KruskalModel random_rank2(Rng& rng) {
  KruskalModel m{Vector(2), {gaussian_matrix(2, 2, rng), gaussian_matrix(2, 2, rng),
                             gaussian_matrix(2, 2, rng)}};
  std::uniform_real_distribution<double> w(0.5, 2.0);
  m.weights << w(rng), w(rng);
  m.normalize();
  return m;
}

/// Smallest SAE in dB over both components and modes after matching.
double worst_sae_db(const KruskalModel& est, const KruskalModel& truth) {
  std::vector<std::array<Vector, 3>> e;
  for (Index r = 0; r < est.rank(); ++r)
    e.push_back({est.factors[0].col(r), est.factors[1].col(r), est.factors[2].col(r)});
  const auto s = matched_sae_db(e, truth, nullptr);
  return *std::min_element(s.begin(), s.end());
}

} // namespace

TEST(Cpd222, DiagonalCore) {
  DenseTensor3 g(2, 2, 2);
  g(0, 0, 0) = 3.0;
  g(1, 1, 1) = 2.0;
  const KruskalModel m = cpd222(g);
  EXPECT_NEAR(m.weights[0], 3.0, 1e-12);
  EXPECT_NEAR(m.weights[1], 2.0, 1e-12);
  for (int n = 0; n < 3; ++n) {
    EXPECT_NEAR(std::abs(m.factors[n](0, 0)), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(m.factors[n](1, 1)), 1.0, 1e-12);
  }
  EXPECT_LE(relative_error(g, reconstruct_kruskal(m)), 1e-20);
}

TEST(Cpd222, RandomRankTwoCoresAreRecovered) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const KruskalModel truth = random_rank2(rng);
    const DenseTensor3 g = reconstruct_kruskal(truth);
    const KruskalModel m = cpd222(g, static_cast<std::uint64_t>(trial));
    EXPECT_LE(std::sqrt(relative_error(g, reconstruct_kruskal(m))), 1e-10);
    EXPECT_GE(worst_sae_db(m, truth), 120.0) << "trial " << trial;
  }
}

TEST(Cpd222, SingularFirstSliceUsesRotation) {
  Rng rng(2);
  KruskalModel truth = random_rank2(rng);
  // C(0, :) = 0 makes the first frontal slice vanish.
  truth.factors[2].row(0).setZero();
  truth.factors[2](1, 0) = 1.0;
  truth.factors[2](1, 1) = 1.0;
  truth.factors[2].col(1) = Vector::Unit(2, 1) + 0.5 * Vector::Unit(2, 0);
  const DenseTensor3 g = reconstruct_kruskal(truth);
  const KruskalModel m = cpd222(g, 7);
  EXPECT_LE(std::sqrt(relative_error(g, reconstruct_kruskal(m))), 1e-10);
}

TEST(Cpd222, RotationPencilHasNoRealRankTwo) {
  // Slices I and [[0, -1], [1, 0]]: the pencil eigenvalues are +-i.
  DenseTensor3 g(2, 2, 2);
  g(0, 0, 0) = 1;
  g(1, 1, 0) = 1;
  g(0, 1, 1) = -1;
  g(1, 0, 1) = 1;
  EXPECT_THROW(cpd222(g), DegenerateCoreError);
}

TEST(Cpd222, ThreeTermPatternWithCommonFactorIsRankTwo) {
  // e1 o e1 o e2 + e2 o e2 o e1 + e1 o e2 o e1 = e1 o e1 o e2 + (e1 + e2) o e2 o e1.
  const DenseTensor3 g = core_from({{0, 0, 1}, {1, 1, 0}, {0, 1, 0}});
  const KruskalModel m = cpd222(g, 3);
  EXPECT_LE(std::sqrt(relative_error(g, reconstruct_kruskal(m))), 1e-10);
}

TEST(Cpd222, TangentialCoreIsNotSplit) {
  // e1 o e1 o e2 + e1 o e2 o e1 + e2 o e1 o e1 has rank 3 (border rank 2).
  const DenseTensor3 g = core_from({{0, 0, 1}, {0, 1, 0}, {1, 0, 0}});
  EXPECT_THROW(cpd222(g, 5), NumericalError);
}

TEST(Cpd222, RejectsBadInput) {
  EXPECT_THROW(cpd222(DenseTensor3(2, 2, 2)), DegenerateCoreError);
  EXPECT_THROW(cpd222(DenseTensor3(2, 2, 3)), std::invalid_argument);
}

TEST(SplitBlock, ExactSyntheticModelMatchesTruth) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorConfig g;
    g.rank = 6;
    g.c = 0.3;
    g.seed = seed;
    const SyntheticProblem prob = generate(g);
    const BlockPairModel p = orthogonal_normalize(block_pair_from_kruskal(prob.truth, {0, 1})).model;
    const SplitResult s = split_block(p, seed);
    ASSERT_EQ(s.terms.size(), 2u);
    std::vector<std::array<Vector, 3>> est{s.terms[0].vectors, s.terms[1].vectors};
    std::vector<Index> matched;
    const auto sae = matched_sae_db(est, prob.truth, &matched);
    EXPECT_GE(*std::min_element(sae.begin(), sae.end()), 100.0);
    EXPECT_EQ(std::min(matched[0], matched[1]), 0);
    EXPECT_EQ(std::max(matched[0], matched[1]), 1);

    DenseTensor3 sum = reconstruct_term(s.terms[0]) + reconstruct_term(s.terms[1]);
    EXPECT_LE(rel_diff(sum, reconstruct_tucker(p.blockG)), 1e-9);
    for (const auto& t : s.terms) {
      EXPECT_GT(t.weight, 0);
      for (const auto& v : t.vectors)
        EXPECT_NEAR(v.norm(), 1.0, 1e-13);
    }
    EXPECT_EQ(s.remainder.core, p.blockH.core);
  }
}

TEST(SplitBlock, ZeroCoreIsAnError) {
  Rng rng(3);
  BlockPairModel p = random_pair(6, 2, rng);
  p.blockG.core = DenseTensor3(2, 2, 2);
  EXPECT_THROW(split_block(p), DegenerateCoreError);
}

TEST(SplitBlock, RankOneBlockPassesThrough) {
  Rng rng(4);
  const BlockPairModel p = random_pair(5, 1, rng);
  const SplitResult s = split_block(p);
  ASSERT_EQ(s.terms.size(), 1u);
  EXPECT_LE(rel_diff(reconstruct_term(s.terms[0]), reconstruct_tucker(p.blockG)), 1e-13);
}
