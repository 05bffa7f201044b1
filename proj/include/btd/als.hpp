#pragma once

// Alternating least squares for the unconstrained two-block decomposition
//   Y ~ G x {U} + H x {V}.
// One sweep updates [U_n, V_n] jointly for n = 1, 2, 3 and then both cores
// jointly; every subproblem is an exact linear least-squares solve.

#include "btd/asu.hpp"

namespace btd {

struct AlsResult {
  BlockPairModel model;
  std::vector<IterationRecord> trace;
  double initial_rel_error = 0;
  double final_rel_error = 0;
  int iterations = 0;
  bool converged = false;
  int regularized_solves = 0; ///< normal equations that needed the ridge term
};

namespace detail {

/// Ridge applied to normal equations whose reciprocal condition drops below this.
inline constexpr double kAlsRcondFloor = 1e-12;

/// Solves X M = B for X given the SPD-ish Gram M (right-hand division).
/// Adds 1e-10 * trace(M) / n to the diagonal when M is ill-conditioned.
inline Matrix solve_right_gram(const Matrix& b, const Matrix& m, int& regularized) {
  Eigen::LDLT<Matrix> ldlt(m);
  const auto d = ldlt.vectorD().cwiseAbs();
  const bool ill = ldlt.info() != Eigen::Success || d.maxCoeff() == 0 ||
                   d.minCoeff() < kAlsRcondFloor * d.maxCoeff();
  if (!ill)
    return ldlt.solve(b.transpose()).transpose();
  ++regularized;
  const double ridge = 1e-10 * m.trace() / static_cast<double>(m.rows());
  const Matrix mr = m + ridge * Matrix::Identity(m.rows(), m.cols());
  return mr.ldlt().solve(b.transpose()).transpose();
}

inline Matrix solve_left_gram(const Matrix& m, const Matrix& b, int& regularized) {
  return solve_right_gram(b.transpose(), m, regularized).transpose();
}

inline Matrix kron3(const std::array<Matrix, 3>& m) {
  return kronecker(kronecker(m[2], m[1]), m[0]);
}

} // namespace detail

/// Joint least-squares update of [U_n, V_n] with everything else fixed.
inline void als_update_factor(const DenseTensor3& y, BlockPairModel& p, int mode, int& regularized) {
  const auto [n1, n2] = detail::other_modes(mode);
  const Index k = p.blockG.core.dim(mode);
  const Index l = p.blockH.core.dim(mode);
  const Matrix pg = matricize(
      mode_product(mode_product(p.blockG.core, p.blockG.factors[n1], n1), p.blockG.factors[n2], n2),
      mode);
  const Matrix ph = matricize(
      mode_product(mode_product(p.blockH.core, p.blockH.factors[n1], n1), p.blockH.factors[n2], n2),
      mode);
  Matrix m(k + l, pg.cols());
  m << pg, ph;
  const Matrix uv = detail::solve_right_gram(matricize(y, mode) * m.transpose(),
                                             m * m.transpose(), regularized);
  p.blockG.factors[mode] = uv.leftCols(k);
  p.blockH.factors[mode] = uv.rightCols(l);
}

/// Joint least-squares update of both cores with all factors fixed. H is
/// eliminated through its normal equations, leaving a K^3 x K^3 system for G.
inline void als_update_cores(const DenseTensor3& y, BlockPairModel& p, int& regularized) {
  FactorSet muu, n_schur, mvv_inv_mvu, muv_mvv_inv, mvv_inv;
  for (int n = 0; n < 3; ++n) {
    const Matrix& u = p.blockG.factors[n];
    const Matrix& v = p.blockH.factors[n];
    muu[n] = u.transpose() * u;
    const Matrix mvv = v.transpose() * v;
    const Matrix muv = u.transpose() * v;
    mvv_inv[n] = detail::solve_left_gram(mvv, Matrix::Identity(mvv.rows(), mvv.cols()), regularized);
    muv_mvv_inv[n] = muv * mvv_inv[n];
    n_schur[n] = muv_mvv_inv[n] * muv.transpose();
    mvv_inv_mvu[n] = mvv_inv[n] * muv.transpose();
  }
  FactorSet ut, vt;
  for (int n = 0; n < 3; ++n) {
    ut[n] = p.blockG.factors[n].transpose();
    vt[n] = p.blockH.factors[n].transpose();
  }
  const DenseTensor3 yu = multi_mode_product(y, ut);
  const DenseTensor3 yv = multi_mode_product(y, vt);
  const Matrix schur = detail::kron3(muu) - detail::kron3(n_schur);
  const Vector rhs = yu.values() - multi_mode_product(yv, muv_mvv_inv).values();
  const Vector g = detail::solve_left_gram(schur, rhs, regularized);
  p.blockG.core = DenseTensor3(p.blockG.core.dims(), g);
  // H = Y x {V^T} x {Mvv^{-1}} - G x {Mvv^{-1} Mvu}
  p.blockH.core = multi_mode_product(yv, mvv_inv) - multi_mode_product(p.blockG.core, mvv_inv_mvu);
}

inline AlsResult btd_als_run(const DenseTensor3& y, const BlockPairModel& init,
                             const AsuConfig& cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  detail::check_asu_input(y, init);
  AlsResult res;
  res.model = init;
  const double ny2 = y.squared_norm();
  res.initial_rel_error = relative_error(y, reconstruct_pair(init));
  if (cfg.max_iters == 0) {
    res.final_rel_error = res.initial_rel_error;
    return res;
  }
  // Cores first, so the first factor step sees a least-squares-consistent model.
  als_update_cores(y, res.model, res.regularized_solves);
  double eps_prev = squared_error(y, reconstruct_pair(res.model));
  for (int it = 0; it < cfg.max_iters; ++it) {
    const auto t0 = clock::now();
    for (int n = 0; n < 3; ++n)
      als_update_factor(y, res.model, n, res.regularized_solves);
    als_update_cores(y, res.model, res.regularized_solves);
    const double eps = squared_error(y, reconstruct_pair(res.model));
    res.trace.push_back(
        {0.5 * eps, eps / ny2, std::chrono::duration<double>(clock::now() - t0).count()});
    res.iterations = it + 1;
    if (std::abs(eps_prev - eps) <= cfg.tol * eps_prev) {
      res.converged = true;
      break;
    }
    eps_prev = eps;
  }
  res.final_rel_error = res.trace.empty() ? res.initial_rel_error : res.trace.back().rel_error;
  return res;
}

} // namespace btd
