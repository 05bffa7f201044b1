#pragma once

// Alternating Subspace Update (ASU): extracts a multilinear rank-(K,K,K)
// block from an R x R x R tensor. Per mode n the solver alternates
//   1. closed-form updates of the cosines sigma_{n,r} (1-D rational maximization),
//   2. one Cayley-type feasible step on X_n = [W_n, Vbar_n] (X_n^T X_n = I_2K),
// and the cores G, H are only formed once, in closed form, after the loop.
//
// With Phi_n = Y(n) ((I - W W^T)_{n2} kron (I - W W^T)_{n1}) Y(n)^T the cost is
//   D = 1/2 (||Y||^2 - tr Phi_n) + f_n(W_n, Vbar_n),
//   f_n = 1/2 sum_r ( w_r^T Q_r w_r - v_r^T F_r v_r - 2 w_r^T K_r v_r ),
// which is what every step below evaluates. All per-iteration work is
// O(K R^3); only the one-off Gram matrices Y(n) Y(n)^T and the final cores are O(R^4).

#include "btd/errors.hpp"
#include "btd/model.hpp"
#include "btd/orthonormalize.hpp"
#include "btd/sigma_update.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>

namespace btd {

enum class PhiMethod { fast, naive };

struct AsuConfig {
  double tol = 1e-6;      ///< stop when |eps_k - eps_{k+1}| <= tol * eps_k
  int max_iters = 1000;
  double tau0 = 0;        ///< initial Stiefel step; <= 0 selects 1 / (||G_f||_F + 1)
  double backtrack_factor = 0.5;
  int backtrack_max = 30;
  double sigma_max = 1.0 - 1e-6;
  PhiMethod phi = PhiMethod::fast;
  /// Feasible steps on X_n per mode visit (Q, F, K fixed); the loop ends
  /// early once a step lowers the cost D by less than inner_tol * D.
  int stiefel_steps = 20;
  double inner_tol = 1e-9;
  /// Alternations of the sigma_n and X_n updates per mode visit; stops early
  /// under the same inner_tol rule.
  int mode_passes = 3;
  /// Echoed into reports. The solver has no randomized choices.
  std::uint64_t seed = 0;

  void validate() const {
    if (!(tol > 0))
      throw std::invalid_argument("AsuConfig: tol must be positive");
    if (max_iters < 0)
      throw std::invalid_argument("AsuConfig: max_iters must be non-negative");
    if (!(backtrack_factor > 0 && backtrack_factor < 1))
      throw std::invalid_argument("AsuConfig: backtrack_factor must lie in (0, 1)");
    if (backtrack_max < 0)
      throw std::invalid_argument("AsuConfig: backtrack_max must be non-negative");
    if (!(sigma_max > 0 && sigma_max < 1))
      throw std::invalid_argument("AsuConfig: sigma_max must lie in (0, 1)");
    if (stiefel_steps < 1)
      throw std::invalid_argument("AsuConfig: stiefel_steps must be at least 1");
    if (mode_passes < 1)
      throw std::invalid_argument("AsuConfig: mode_passes must be at least 1");
  }
};

/// t, z, d for one mode. Column k + K*l holds the vector for the pair (k, l)
/// of column indices in the two other modes (lower mode first).
struct ModeProjections {
  Matrix t, z, d;
};

/// Q_{n,r}, F_{n,r}, K_{n,r} for r = 0..K-1.
struct QfkMatrices {
  std::vector<Matrix> q, f, k;
};

/// Barzilai-Borwein memory of one mode: previous iterate and projected gradient.
struct StiefelMemory {
  Matrix x_prev;
  Matrix dir_prev;
  bool valid = false;
};

struct IterationWorkspace {
  double norm_y2 = 0;
  std::array<Matrix, 3> yyt;   ///< cached Y(n) Y(n)^T
  std::array<Matrix, 3> phi;
  std::array<ModeProjections, 3> tzd;
  std::array<QfkMatrices, 3> qfk;
  std::array<StiefelMemory, 3> memory;
  std::array<double, 3> tau{0, 0, 0};
};

inline IterationWorkspace make_workspace(const DenseTensor3& y) {
  IterationWorkspace ws;
  ws.norm_y2 = y.squared_norm();
  for (int n = 0; n < 3; ++n)
    ws.yyt[n] = mode_gram(y, n);
  return ws;
}

// ---------------------------------------------------------------------------
// t, z, d

inline ModeProjections compute_tzd(const DenseTensor3& y, const DeflationState& s, int mode) {
  const auto [n1, n2] = detail::other_modes(mode);
  const Index k = s.block_size();
  if (y.dim(n1) != s.rank() || y.dim(n2) != s.rank() || y.dim(mode) != s.rank())
    throw std::invalid_argument("compute_tzd: tensor and state sizes differ");
  // One pass with [U; Vbar]^T per mode, then split the (2K x 2K) index block.
  auto stacked = [&](int n) {
    Matrix m(2 * k, s.rank());
    m << s.u(n).transpose(), s.vbar[n].transpose();
    return m;
  };
  const DenseTensor3 p = mode_product(mode_product(y, stacked(n1), n1), stacked(n2), n2);
  const Matrix pm = matricize(p, mode); // R x (2K * 2K), column a + 2K * b
  ModeProjections out{Matrix(s.rank(), k * k), Matrix(s.rank(), k * k), Matrix()};
  for (Index l = 0; l < k; ++l)
    for (Index kk = 0; kk < k; ++kk) {
      out.t.col(kk + k * l) = pm.col(kk + 2 * k * l);
      out.z.col(kk + k * l) = pm.col((k + kk) + 2 * k * (k + l));
    }
  Vector scale(k * k);
  for (Index l = 0; l < k; ++l)
    for (Index kk = 0; kk < k; ++kk)
      scale[kk + k * l] = s.sigma[n1][kk] * s.sigma[n2][l];
  out.d = out.t - out.z * scale.asDiagonal();
  return out;
}

// ---------------------------------------------------------------------------
// Phi_n

/// O(R^3) evaluation through the four-term expansion; `yyt` is Y(n) Y(n)^T.
inline Matrix compute_phi_fast(const DenseTensor3& y, const DeflationState& s, int mode,
                               const Matrix& yyt) {
  const auto [n1, n2] = detail::other_modes(mode);
  const DenseTensor3 z1 = mode_product(y, s.w[n1].transpose(), n1);
  const DenseTensor3 z2 = mode_product(y, s.w[n2].transpose(), n2);
  const DenseTensor3 z12 = mode_product(z1, s.w[n2].transpose(), n2);
  Matrix phi = yyt - mode_gram(z1, mode) - mode_gram(z2, mode) + mode_gram(z12, mode);
  return 0.5 * (phi + phi.transpose());
}

/// O(R^4) reference: applies both projectors with full R x R mode products.
inline Matrix compute_phi_naive(const DenseTensor3& y, const DeflationState& s, int mode) {
  const auto [n1, n2] = detail::other_modes(mode);
  const Index r = s.rank();
  const Matrix p1 = Matrix::Identity(r, r) - s.w[n1] * s.w[n1].transpose();
  const Matrix p2 = Matrix::Identity(r, r) - s.w[n2] * s.w[n2].transpose();
  return mode_gram(mode_product(mode_product(y, p1, n1), p2, n2), mode);
}

// ---------------------------------------------------------------------------
// sigma

struct SigmaUpdate {
  double sigma = 0;
  bool flip_w = false;       ///< maximizer had x < 0: w_r changes sign, xi stays >= 0
  double objective_before = 0;
  double objective_after = 0;
  bool used_fallback = false;
};

/// The rational objective of sigma_{n,r} with every other unknown fixed.
inline RatioSum sigma_objective(const DeflationState& s, const ModeProjections& p, int mode,
                                Index r) {
  const auto [n1, n2] = detail::other_modes(mode);
  const Index k = s.block_size();
  const Vector alpha = p.t.transpose() * s.w[mode].col(r);
  const Vector beta = p.d.transpose() * s.vbar[mode].col(r);
  RatioSum f;
  for (Index l = 0; l < k; ++l)
    for (Index kk = 0; kk < k; ++kk) {
      const Index i = kk + k * l;
      const double g = s.sigma[n1][kk] * s.sigma[n1][kk] * s.sigma[n2][l] * s.sigma[n2][l];
      f.a.push_back(alpha[i]);
      f.b.push_back(beta[i]);
      f.c.push_back(1.0 - g);
    }
  return f;
}

/// New sigma_{n,r}; never lowers the objective relative to the incoming value.
inline SigmaUpdate update_sigma(const DeflationState& s, const ModeProjections& p, int mode,
                                Index r, double sigma_max) {
  const RatioSum f = sigma_objective(s, p, mode, r);
  const double x_now = x_from_sigma(s.sigma[mode][r]);
  SigmaUpdate out;
  out.objective_before = f.value(x_now);
  if (f.is_flat()) {
    out.sigma = s.sigma[mode][r];
    out.objective_after = out.objective_before;
    return out;
  }
  const double x_min = std::sqrt(1.0 / (sigma_max * sigma_max) - 1.0);
  std::vector<double> extra;
  if (std::isinf(x_now) || x_now >= x_min)
    extra.push_back(x_now);
  const RatioSumMaximum m = maximize_ratio_sum(f, x_min, extra);
  out.sigma = std::min(sigma_from_x(m.x), sigma_max);
  out.flip_w = m.x < 0;
  out.objective_after = m.value;
  out.used_fallback = m.used_fallback;
  return out;
}

// ---------------------------------------------------------------------------
// Q, F, K and the Stiefel step

inline QfkMatrices build_qfk(const Matrix& phi, const ModeProjections& p, const DeflationState& s,
                             int mode) {
  const auto [n1, n2] = detail::other_modes(mode);
  const Index k = s.block_size();
  QfkMatrices out;
  for (Index r = 0; r < k; ++r) {
    const double sig = s.sigma[mode][r];
    const double xi = s.xi[mode][r];
    Vector omega(k * k);
    for (Index l = 0; l < k; ++l)
      for (Index kk = 0; kk < k; ++kk) {
        const double g = sig * s.sigma[n1][kk] * s.sigma[n2][l];
        omega[kk + k * l] = 1.0 / (1.0 - g * g);
      }
    const Matrix tw = p.t * omega.asDiagonal();
    out.q.push_back(phi - xi * xi * (tw * p.t.transpose()));
    out.f.push_back(sig * sig * (p.d * omega.asDiagonal() * p.d.transpose()));
    out.k.push_back(xi * sig * (tw * p.d.transpose()));
  }
  return out;
}

/// f and its Euclidean gradient at one point.
struct StiefelEval {
  double f = 0;
  Matrix g; ///< [Q_r w_r - K_r v_r | -F_r v_r - K_r^T w_r]
};

inline StiefelEval stiefel_eval(const QfkMatrices& m, const Matrix& x) {
  const Index k = x.cols() / 2;
  StiefelEval e;
  e.g.resize(x.rows(), x.cols());
  double f = 0;
  for (Index r = 0; r < k; ++r) {
    const auto w = x.col(r);
    const auto v = x.col(k + r);
    const Vector qw = m.q[r] * w;
    const Vector kv = m.k[r] * v;
    const Vector fv = m.f[r] * v;
    const Vector ktw = m.k[r].transpose() * w;
    f += w.dot(qw) - v.dot(fv) - 2 * w.dot(kv);
    e.g.col(r) = qw - kv;
    e.g.col(k + r) = -fv - ktw;
  }
  e.f = 0.5 * f;
  return e;
}

/// f(W, Vbar) for X = [W, Vbar].
inline double stiefel_objective(const QfkMatrices& m, const Matrix& x) {
  const Index k = x.cols() / 2;
  double f = 0;
  for (Index r = 0; r < k; ++r) {
    const auto w = x.col(r);
    const auto v = x.col(k + r);
    f += w.dot(m.q[r] * w) - v.dot(m.f[r] * v) - 2 * w.dot(m.k[r] * v);
  }
  return 0.5 * f;
}

inline Matrix stiefel_gradient(const QfkMatrices& m, const Matrix& x) { return stiefel_eval(m, x).g; }

/// Curvilinear update  X - 2 tau [G, X] (I + tau [[X^T G, I], [-G^T G, -G^T X]])^{-1} [I; -G^T X].
/// The result stays on the Stiefel manifold for every tau.
inline Matrix cayley_step(const Matrix& x, const Matrix& g, double tau) {
  const Index p = x.cols();
  const Matrix gamma = x.transpose() * g;
  Matrix lhs = Matrix::Identity(2 * p, 2 * p);
  lhs.topLeftCorner(p, p) += tau * gamma;
  lhs.topRightCorner(p, p) += tau * Matrix::Identity(p, p);
  lhs.bottomLeftCorner(p, p) -= tau * (g.transpose() * g);
  lhs.bottomRightCorner(p, p) -= tau * gamma.transpose();
  Matrix rhs(2 * p, p);
  rhs << Matrix::Identity(p, p), -gamma.transpose();
  Matrix gx(x.rows(), 2 * p);
  gx << g, x;
  return x - 2 * tau * gx * lhs.partialPivLu().solve(rhs);
}

/// Largest absolute entry of X^T X - I.
inline double orthonormality_defect(const Matrix& x) {
  return (x.transpose() * x - Matrix::Identity(x.cols(), x.cols())).cwiseAbs().maxCoeff();
}

/// QR re-orthonormalization with the sign of R's diagonal fixed positive.
inline Matrix polish_orthonormal(const Matrix& x) {
  Eigen::HouseholderQR<Matrix> qr(x);
  Matrix q = qr.householderQ() * Matrix::Identity(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c)
    if (qr.matrixQR()(c, c) < 0)
      q.col(c) *= -1;
  return q;
}

struct StiefelStep {
  Matrix x;
  Matrix gradient;  ///< Euclidean gradient at the input point
  StiefelEval after; ///< f and gradient at the returned point
  double f_before = 0;
  double f_after = 0;
  double tau = 0;
  int trials = 0;
  bool accepted = false;
};

/// One descent step on f over {X : X^T X = I}. tau comes from the BB rule on
/// the previous visit (or tau0), then is halved until f does not increase.
/// `at_x` may carry stiefel_eval(m, x) from the previous step.
inline StiefelStep update_stiefel(const Matrix& x, const QfkMatrices& m, const AsuConfig& cfg,
                                  StiefelMemory& mem, const StiefelEval* at_x = nullptr) {
  StiefelStep out;
  out.x = x;
  out.after = at_x ? *at_x : stiefel_eval(m, x);
  out.gradient = out.after.g;
  out.f_before = out.after.f;
  out.f_after = out.f_before;
  const Matrix& g = out.gradient;
  const double gnorm = g.norm();
  const Matrix dir = g - x * (g.transpose() * x); // A X with A = G X^T - X G^T
  if (gnorm == 0 || dir.norm() == 0) {
    out.accepted = true;
    mem = {x, dir, true};
    return out;
  }

  double tau = cfg.tau0 > 0 ? cfg.tau0 : 1.0 / (gnorm + 1.0);
  if (mem.valid) {
    const Matrix sx = x - mem.x_prev;
    const Matrix sy = dir - mem.dir_prev;
    const double ss = sx.squaredNorm();
    const double sdy = std::abs((sx.array() * sy.array()).sum());
    if (sdy > 0 && ss > 0) {
      // BB1 step for X - t * dir; the update above moves 2 * tau along dir.
      const double bb = 0.5 * ss / sdy;
      if (std::isfinite(bb) && bb > 0)
        tau = bb;
    }
  }
  mem = {x, dir, true};

  for (int trial = 0; trial <= cfg.backtrack_max; ++trial) {
    Matrix cand = cayley_step(x, g, tau);
    if (orthonormality_defect(cand) > 1e-12)
      cand = polish_orthonormal(cand);
    StiefelEval ec = stiefel_eval(m, cand);
    out.trials = trial + 1;
    if (ec.f <= out.f_before) {
      out.x = std::move(cand);
      out.f_after = ec.f;
      out.after = std::move(ec);
      out.tau = tau;
      out.accepted = true;
      return out;
    }
    tau *= cfg.backtrack_factor;
  }
  out.tau = tau;
  return out;
}

// ---------------------------------------------------------------------------
// cost, complement and cores

/// D through Phi_n and f_n (no cores needed).
inline double cost(const DenseTensor3& y, const DeflationState& s, int mode = 0) {
  const Matrix phi = compute_phi_fast(y, s, mode, mode_gram(y, mode));
  const ModeProjections p = compute_tzd(y, s, mode);
  const QfkMatrices m = build_qfk(phi, p, s, mode);
  return 0.5 * (y.squared_norm() - phi.trace()) + stiefel_objective(m, s.x(mode));
}

/// Full V_n = [Vbar_n, basis of the complement of span[W_n, Vbar_n]].
/// The complement comes from a Householder QR of [W_n, Vbar_n], so it is a
/// deterministic function of the state.
inline Matrix complete_v(const DeflationState& s, int mode) {
  const Matrix x = s.x(mode);
  const Index r = x.rows();
  const Index k = s.block_size();
  Eigen::HouseholderQR<Matrix> qr(x);
  const Matrix q = qr.householderQ();
  Matrix v(r, r - k);
  v << s.vbar[mode], q.rightCols(r - 2 * k);
  return v;
}

/// Minimum of 1 - S*S admitted by the closed-form core formula.
inline constexpr double kMinCoreDenominator = 1e-10;

/// Cores G and H that minimize D for the factors encoded in `s`.
inline BlockPairModel closed_form_cores(const DenseTensor3& y, const DeflationState& s) {
  const Index k = s.block_size();
  const Index r = s.rank();
  BlockPairModel out;
  FactorSet ut, vbart, vt, embed;
  for (int n = 0; n < 3; ++n) {
    out.blockG.factors[n] = s.u(n);
    out.blockH.factors[n] = complete_v(s, n);
    ut[n] = out.blockG.factors[n].transpose();
    vbart[n] = s.vbar[n].transpose();
    vt[n] = out.blockH.factors[n].transpose();
    embed[n] = Matrix::Zero(r - k, k);
    embed[n].topRows(k) = s.sigma[n].asDiagonal();
  }
  const DenseTensor3 sig = outer3(s.sigma[0], s.sigma[1], s.sigma[2]);
  const Vector den = (1.0 - sig.values().array().square()).matrix();
  if (den.minCoeff() < kMinCoreDenominator)
    throw DegenerateOverlapError("closed_form_cores: sigma products too close to 1");
  const DenseTensor3 yu = multi_mode_product(y, ut);
  const DenseTensor3 yvbar = multi_mode_product(y, vbart);
  out.blockG.core = DenseTensor3(
      {k, k, k}, (yu.values() - yvbar.values().cwiseProduct(sig.values())).cwiseQuotient(den));
  out.blockH.core = multi_mode_product(y, vt) - multi_mode_product(out.blockG.core, embed);
  return out;
}

/// 1/2 ||Y - G x {U} - H x {V}||^2 evaluated directly.
inline double cost_direct(const DenseTensor3& y, const BlockPairModel& p) {
  return 0.5 * squared_error(y, reconstruct_pair(p));
}

// ---------------------------------------------------------------------------
// driver

struct IterationRecord {
  double cost = 0;       ///< D at the end of the sweep
  double rel_error = 0;  ///< 2 D / ||Y||^2
  double seconds = 0;    ///< wall time of the sweep
};

struct AsuResult {
  BlockPairModel model;
  std::array<Vector, 3> sigma;
  std::vector<IterationRecord> trace;
  /// D after every sigma step and every accepted Stiefel step, starting with D0.
  std::vector<double> step_costs;
  double initial_cost = 0;
  double final_rel_error = 0; ///< ||Y - Yhat||^2 / ||Y||^2 of the returned model
  int iterations = 0;
  bool converged = false;     ///< relative-change rule met
  bool stalled = false;       ///< a full sweep made no accepted Stiefel move
  int stiefel_stalls = 0;
  int sigma_fallbacks = 0;
};

namespace detail {

inline void check_asu_input(const DenseTensor3& y, const BlockPairModel& init) {
  if (y.empty() || !y.is_cubic())
    throw std::invalid_argument(
        "asu_run: input must be R x R x R; compress non-cubic tensors first");
  init.validate();
  const Index r = y.dim(0);
  const Index k = init.block_size();
  if (k < 1 || 2 * k > r)
    throw std::invalid_argument("asu_run: need 1 <= K and 2K <= R");
  for (int n = 0; n < 3; ++n)
    if (init.blockG.factors[n].rows() != r || init.blockH.factors[n].cols() != r - k)
      throw std::invalid_argument("asu_run: init blocks must be (K,K,K) and (R-K,R-K,R-K)");
}

} // namespace detail

/// Called after every mode visit with the updated state.
using AsuObserver = std::function<void(int iteration, int mode, const DeflationState&)>;

/// Runs ASU from `init` (any two-block model with full-rank factors; its cores
/// are not used). The returned model carries the closed-form cores.
inline AsuResult asu_run(const DenseTensor3& y, const BlockPairModel& init, const AsuConfig& cfg,
                         const AsuObserver& observer = {}) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  detail::check_asu_input(y, init);
  AsuResult res;
  if (cfg.max_iters == 0) {
    res.model = init;
    res.final_rel_error = relative_error(y, reconstruct_pair(init));
    return res;
  }

  DeflationState s = make_state(orthogonal_normalize(init));
  for (int n = 0; n < 3; ++n) {
    s.sigma[n] = s.sigma[n].cwiseMin(cfg.sigma_max);
    s.sync_xi(n);
  }
  const Index k = s.block_size();
  IterationWorkspace ws = make_workspace(y);
  auto phi_for = [&](int n) {
    return cfg.phi == PhiMethod::fast ? compute_phi_fast(y, s, n, ws.yyt[n])
                                      : compute_phi_naive(y, s, n);
  };

  {
    ws.phi[0] = phi_for(0);
    ws.tzd[0] = compute_tzd(y, s, 0);
    ws.qfk[0] = build_qfk(ws.phi[0], ws.tzd[0], s, 0);
    res.initial_cost = 0.5 * (ws.norm_y2 - ws.phi[0].trace()) + stiefel_objective(ws.qfk[0], s.x(0));
    res.step_costs.push_back(res.initial_cost);
  }
  double eps_prev = 2 * res.initial_cost;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const auto t0 = clock::now();
    int moved = 0;
    double d_now = 0;
    for (int n = 0; n < 3; ++n) {
      ws.phi[n] = phi_for(n);
      ws.tzd[n] = compute_tzd(y, s, n);
      const double base = 0.5 * (ws.norm_y2 - ws.phi[n].trace());

      // Phi_n and t, z, d do not depend on sigma_n or X_n, so both can be
      // refined several times against them.
      double f_now = 0;
      bool moved_n = false;
      for (int pass = 0; pass < cfg.mode_passes; ++pass) {
        for (Index r = 0; r < k; ++r) {
          const SigmaUpdate su = update_sigma(s, ws.tzd[n], n, r, cfg.sigma_max);
          s.sigma[n][r] = su.sigma;
          if (su.flip_w) {
            s.w[n].col(r) *= -1;
            ws.memory[n].valid = false;
          }
          res.sigma_fallbacks += su.used_fallback ? 1 : 0;
        }
        s.sync_xi(n);

        ws.qfk[n] = build_qfk(ws.phi[n], ws.tzd[n], s, n);
        Matrix xc = s.x(n);
        StiefelEval ev = stiefel_eval(ws.qfk[n], xc);
        res.step_costs.push_back(base + ev.f);
        const double f_pass = ev.f;
        f_now = ev.f;
        for (int inner = 0; inner < cfg.stiefel_steps; ++inner) {
          StiefelStep step = update_stiefel(xc, ws.qfk[n], cfg, ws.memory[n], &ev);
          ws.tau[n] = step.tau;
          if (!step.accepted) {
            ++res.stiefel_stalls;
            break;
          }
          const double drop = step.f_before - step.f_after;
          xc = std::move(step.x);
          ev = std::move(step.after);
          f_now = step.f_after;
          res.step_costs.push_back(base + f_now);
          if (drop > 0)
            moved_n = true;
          if (drop <= cfg.inner_tol * std::abs(base + f_now))
            break;
        }
        s.set_x(n, xc);
        if (f_pass - f_now <= cfg.inner_tol * std::abs(base + f_now))
          break;
      }
      if (observer)
        observer(it, n, s);
      moved += moved_n ? 1 : 0;
      d_now = base + f_now;
    }
    const double eps = 2 * d_now;
    res.trace.push_back(
        {d_now, eps / ws.norm_y2, std::chrono::duration<double>(clock::now() - t0).count()});
    res.iterations = it + 1;
    if (std::abs(eps_prev - eps) <= cfg.tol * eps_prev) {
      res.converged = true;
      break;
    }
    if (moved == 0) {
      res.stalled = true;
      break;
    }
    eps_prev = eps;
  }

  res.model = closed_form_cores(y, s);
  res.sigma = s.sigma;
  res.final_rel_error = relative_error(y, reconstruct_pair(res.model));
  return res;
}

} // namespace btd
