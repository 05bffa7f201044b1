#include "test_util.hpp"

using namespace btd;
using namespace btd::testing;

namespace {

/// Gradient of ||Y - Yhat||^2 / 2 with respect to one block's mode-n factor.
Matrix factor_gradient(const DenseTensor3& res, const TuckerBlock& b, int n) {
  const auto [n1, n2] = detail::other_modes(n);
  const DenseTensor3 t =
      mode_product(mode_product(res, b.factors[n1].transpose(), n1), b.factors[n2].transpose(), n2);
  return -matricize(t, n) * matricize(b.core, n).transpose();
}

} // namespace

TEST(Als, ExactTensorFromTruthConvergesFast) {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const BlockPairModel truth = random_pair(7, 2, rng);
    const DenseTensor3 y = reconstruct_pair(truth);
    AsuConfig cfg;
    cfg.max_iters = 10;
    const AlsResult res = btd_als_run(y, truth, cfg);
    EXPECT_LE(res.final_rel_error, 1e-10);
    EXPECT_LE(res.iterations, 10);
  }
}

TEST(Als, TraceIsMonotone) {
  Rng rng(2);
  const DenseTensor3 y = random_tensor({7, 7, 7}, rng);
  AsuConfig cfg;
  cfg.max_iters = 40;
  const AlsResult res = btd_als_run(y, random_pair(7, 2, rng), cfg);
  for (size_t i = 1; i < res.trace.size(); ++i)
    EXPECT_LE(res.trace[i].cost, res.trace[i - 1].cost * (1 + 1e-12));
}

TEST(Als, EveryBlockUpdateIsExactLeastSquares) {
  Rng rng(3);
  const DenseTensor3 y = random_tensor({6, 6, 6}, rng);
  BlockPairModel p = random_pair(6, 2, rng);
  int reg = 0;
  als_update_cores(y, p, reg);
  double prev = squared_error(y, reconstruct_pair(p));
  for (int sweep = 0; sweep < 3; ++sweep) {
    for (int n = 0; n < 3; ++n) {
      als_update_factor(y, p, n, reg);
      const DenseTensor3 res = y - reconstruct_pair(p);
      EXPECT_LE(max_abs(factor_gradient(res, p.blockG, n)), 1e-9 * y.squared_norm());
      EXPECT_LE(max_abs(factor_gradient(res, p.blockH, n)), 1e-9 * y.squared_norm());
      const double e = squared_error(y, reconstruct_pair(p));
      EXPECT_LE(e, prev * (1 + 1e-12));
      prev = e;
    }
    als_update_cores(y, p, reg);
    const DenseTensor3 res = y - reconstruct_pair(p);
    EXPECT_LE(multi_mode_product_transposed(res, p.blockG.factors).norm(), 1e-9 * y.norm());
    EXPECT_LE(multi_mode_product_transposed(res, p.blockH.factors).norm(), 1e-9 * y.norm());
    const double e = squared_error(y, reconstruct_pair(p));
    EXPECT_LE(e, prev * (1 + 1e-12));
    prev = e;
  }
  EXPECT_EQ(reg, 0);
}

TEST(Als, ZeroIterationsKeepsInit) {
  Rng rng(4);
  const BlockPairModel init = random_pair(6, 2, rng);
  AsuConfig cfg;
  cfg.max_iters = 0;
  const AlsResult res = btd_als_run(random_tensor({6, 6, 6}, rng), init, cfg);
  EXPECT_TRUE(res.trace.empty());
  EXPECT_EQ(res.model.blockH.core, init.blockH.core);
}
