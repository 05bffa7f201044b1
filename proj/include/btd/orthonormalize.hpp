#pragma once

// Orthogonal normalization of a two-block decomposition and the
// (U, Vbar) <-> (W, Vbar, sigma) reparameterization used by the ASU solver.
//
// After normalization every mode satisfies
//   U^T U = I_K,  V^T V = I_{R-K},  U^T V = [diag(sigma), 0],  0 <= sigma < 1,
// so u_r = xi_r w_r + sigma_r v_r with [W, V] orthonormal and xi_r = sqrt(1 - sigma_r^2).

#include "btd/errors.hpp"
#include "btd/model.hpp"

namespace btd {

/// Column rank threshold: a QR diagonal below this fraction of ||A||_F is rank loss.
inline constexpr double kRankTolerance = 1e-10;
/// Normalization refuses blocks whose principal-angle cosine exceeds 1 - this.
inline constexpr double kSeparabilityTolerance = 1e-10;
/// Reparameterization refuses xi below this value.
inline constexpr double kMinXi = 1e-8;

namespace detail {

/// Thin orthonormal basis of the column space of `a`; throws on rank loss.
inline Matrix orthonormal_basis(const Matrix& a, const char* what) {
  Eigen::HouseholderQR<Matrix> qr(a);
  const double scale = a.norm();
  const auto diag = qr.matrixQR().diagonal().cwiseAbs();
  if (scale == 0 || diag.minCoeff() <= kRankTolerance * scale)
    throw RankDeficientError(std::string(what) + " does not have full column rank");
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

} // namespace detail

struct NormalizedPair {
  BlockPairModel model;
  std::array<Vector, 3> sigma;
};

/// Brings an arbitrary two-block model into the canonical orthogonal form
/// without changing either block's reconstruction. Works for any K <= R - K.
inline NormalizedPair orthogonal_normalize(const BlockPairModel& p) {
  p.validate();
  const Index k = p.blockG.core.dim(0);
  for (int n = 0; n < 3; ++n) {
    const Index l = p.blockH.factors[n].cols();
    if (p.blockG.factors[n].cols() != k)
      throw std::invalid_argument("orthogonal_normalize: blockG must be (K, K, K)");
    if (k > l)
      throw std::invalid_argument("orthogonal_normalize: requires K <= R - K");
  }
  NormalizedPair out;
  FactorSet g_change, h_change;
  for (int n = 0; n < 3; ++n) {
    const Matrix& u = p.blockG.factors[n];
    const Matrix& v = p.blockH.factors[n];
    const Matrix qu = detail::orthonormal_basis(u, "blockG factor");
    const Matrix qv = detail::orthonormal_basis(v, "blockH factor");
    Eigen::JacobiSVD<Matrix> svd(qu.transpose() * qv, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vector sigma = svd.singularValues();
    if (sigma.size() > 0 && sigma.maxCoeff() >= 1.0 - kSeparabilityTolerance)
      throw DegenerateOverlapError("orthogonal_normalize: blocks share a direction in mode " +
                                   std::to_string(n + 1));
    Matrix u_new = qu * svd.matrixU();
    Matrix v_new = qv * svd.matrixV();
    g_change[n] = u_new.transpose() * u;
    h_change[n] = v_new.transpose() * v;
    out.model.blockG.factors[n] = std::move(u_new);
    out.model.blockH.factors[n] = std::move(v_new);
    out.sigma[n] = std::move(sigma);
  }
  out.model.blockG.core = multi_mode_product(p.blockG.core, g_change);
  out.model.blockH.core = multi_mode_product(p.blockH.core, h_change);
  return out;
}

/// Per-mode unknowns of the ASU solver: orthonormal [W, Vbar] plus the
/// cosines sigma. xi is kept in sync with sigma via sync_xi().
struct DeflationState {
  FactorSet w;
  FactorSet vbar;
  std::array<Vector, 3> sigma;
  std::array<Vector, 3> xi;

  Index rank() const { return w[0].rows(); }
  Index block_size() const { return w[0].cols(); }

  /// X_n = [W, Vbar], R x 2K.
  Matrix x(int n) const {
    Matrix out(w[n].rows(), 2 * w[n].cols());
    out << w[n], vbar[n];
    return out;
  }

  void set_x(int n, const Matrix& x) {
    const Index k = block_size();
    w[n] = x.leftCols(k);
    vbar[n] = x.rightCols(k);
  }

  Matrix u(int n) const { return w[n] * xi[n].asDiagonal() + vbar[n] * sigma[n].asDiagonal(); }

  void sync_xi(int n) { xi[n] = (1.0 - sigma[n].array().square()).sqrt().matrix(); }
};

/// Reparameterizes canonical-form factors: w_r = (u_r - sigma_r v_r) / xi_r.
inline DeflationState to_state(const FactorSet& u, const FactorSet& vbar,
                               const std::array<Vector, 3>& sigma) {
  DeflationState s;
  for (int n = 0; n < 3; ++n) {
    const Index k = u[n].cols();
    if (vbar[n].cols() != k || sigma[n].size() != k || vbar[n].rows() != u[n].rows())
      throw std::invalid_argument("to_state: inconsistent shapes");
    if ((sigma[n].array() < 0).any() || (sigma[n].array() >= 1).any())
      throw std::invalid_argument("to_state: sigma must lie in [0, 1)");
    s.sigma[n] = sigma[n];
    s.sync_xi(n);
    if (k > 0 && s.xi[n].minCoeff() < kMinXi)
      throw DegenerateOverlapError("to_state: xi below threshold in mode " + std::to_string(n + 1));
    s.w[n] = (u[n] - vbar[n] * sigma[n].asDiagonal()) * s.xi[n].cwiseInverse().asDiagonal();
    // The cancellation at small xi costs about eps / xi^2 of orthonormality;
    // a projection pass against [W, Vbar] restores it.
    Matrix x(u[n].rows(), 2 * k);
    x << s.w[n], vbar[n];
    if ((x.transpose() * x - Matrix::Identity(2 * k, 2 * k)).cwiseAbs().maxCoeff() > 1e-13) {
      for (Index r = 0; r < k; ++r) {
        Vector w = s.w[n].col(r);
        for (int pass = 0; pass < 2; ++pass) {
          w -= vbar[n] * (vbar[n].transpose() * w);
          for (Index j = 0; j < r; ++j)
            w -= s.w[n].col(j) * s.w[n].col(j).dot(w);
        }
        s.w[n].col(r) = w / w.norm();
      }
    }
    s.vbar[n] = vbar[n];
  }
  return s;
}

inline FactorSet from_state(const DeflationState& s) {
  return {s.u(0), s.u(1), s.u(2)};
}

/// State of a normalized pair: U from blockG, Vbar = first K columns of blockH.
inline DeflationState make_state(const NormalizedPair& np) {
  const Index k = np.model.block_size();
  FactorSet vbar;
  for (int n = 0; n < 3; ++n)
    vbar[n] = np.model.blockH.factors[n].leftCols(k);
  return to_state(np.model.blockG.factors, vbar, np.sigma);
}

} // namespace btd
