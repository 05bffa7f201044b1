#pragma once

// Synthetic rank-R tensors with controlled collinearity, noise at a target
// SNR, and squared-angular-error metrics.
//
// Randomness comes from std::mt19937_64 seeded explicitly; every draw goes
// through std::normal_distribution, so a (config, seed) pair reproduces a
// trial exactly on a given standard library.

#include "btd/model.hpp"

#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

namespace btd {

using Rng = std::mt19937_64;

inline Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = nd(rng);
  return m;
}

/// Haar-distributed orthonormal n x n matrix (QR of a Gaussian with sign fix).
inline Matrix random_orthonormal(Index rows, Index cols, Rng& rng) {
  const Matrix g = gaussian_matrix(rows, cols, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  for (Index c = 0; c < cols; ++c)
    if (qr.matrixQR()(c, c) < 0)
      q.col(c) *= -1;
  return q;
}

/// R x R matrix with unit columns and a_r^T a_s = c for r != s.
inline Matrix gen_factor(Index r, double c, Rng& rng) {
  if (r < 1)
    throw std::invalid_argument("gen_factor: R must be positive");
  if (!(c >= 0 && c < 1))
    throw std::invalid_argument("gen_factor: collinearity must lie in [0, 1)");
  const Matrix gram =
      (1 - c) * Matrix::Identity(r, r) + c * Matrix::Ones(r, r);
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw std::logic_error("gen_factor: uniform-correlation Gram is not positive definite");
  const Matrix l = llt.matrixL();
  return random_orthonormal(r, r, rng) * l.transpose();
}

inline Matrix gen_factor(Index r, double c, std::uint64_t seed) {
  Rng rng(seed);
  return gen_factor(r, c, rng);
}

/// Raises the cosine between a2 and a1 from c to rho:
/// a2' = (rho - c alpha) a1 + alpha a2,  alpha = sqrt((1 - rho^2) / (1 - c^2)).
inline Vector adjust_collinearity(const Vector& a1, const Vector& a2, double c, double rho) {
  if (!(c >= 0 && c < 1) || !(rho < 1))
    throw std::invalid_argument("adjust_collinearity: need 0 <= c < 1 and rho < 1");
  if (rho < c)
    throw std::invalid_argument("adjust_collinearity: rho must be at least c");
  const double alpha = std::sqrt((1 - rho * rho) / (1 - c * c));
  Vector out = (rho - c * alpha) * a1 + alpha * a2;
  return out / out.norm();
}

/// Adds Gaussian noise E scaled so that 10 log10(||Y||^2 / ||E||^2) = snr_db.
/// snr_db = +inf returns y unchanged.
inline DenseTensor3 add_noise(const DenseTensor3& y, double snr_db, Rng& rng) {
  if (std::isinf(snr_db) && snr_db > 0)
    return y;
  if (!std::isfinite(snr_db))
    throw std::invalid_argument("add_noise: SNR must be finite or +inf");
  const double ny2 = y.squared_norm();
  if (ny2 == 0)
    throw std::invalid_argument("add_noise: zero-norm tensor");
  const Matrix e = gaussian_matrix(y.size(), 1, rng);
  const double target = ny2 * std::pow(10.0, -snr_db / 10.0);
  return DenseTensor3(y.dims(), y.values() + e.col(0) * std::sqrt(target / e.squaredNorm()));
}

inline DenseTensor3 add_noise(const DenseTensor3& y, double snr_db, std::uint64_t seed) {
  Rng rng(seed);
  return add_noise(y, snr_db, rng);
}

/// arccos(|a^T b| / (||a|| ||b||))^2 in radians^2.
inline double sae(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("sae: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0)
    throw std::invalid_argument("sae: zero vector");
  const double cosine = std::min(1.0, std::abs(a.dot(b)) / (na * nb));
  const double ang = std::acos(cosine);
  return ang * ang;
}

/// Reporting cap for error-free estimates.
inline constexpr double kSaeDbCap = 160.0;

inline double sae_to_db(double s) {
  if (s <= 0)
    return kSaeDbCap;
  return std::min(kSaeDbCap, -10.0 * std::log10(s));
}

inline double sae_db(const Vector& a, const Vector& b) { return sae_to_db(sae(a, b)); }

/// SAE of a component whose estimate is missing (failed split): a right angle.
inline constexpr double kFailedSae = std::numbers::pi * std::numbers::pi / 4;

/// Best injective assignment of rows to columns maximizing the summed score,
/// by exhaustive search. score is (estimates x truths) with rows <= cols.
inline std::vector<Index> best_assignment(const Matrix& score) {
  const Index n = score.rows(), m = score.cols();
  if (n > m)
    throw std::invalid_argument("best_assignment: more estimates than truths");
  std::vector<Index> cur(static_cast<size_t>(n)), best;
  std::vector<bool> used(static_cast<size_t>(m), false);
  double best_val = -std::numeric_limits<double>::infinity();
  auto rec = [&](auto&& self, Index row, double acc) -> void {
    if (row == n) {
      if (acc > best_val) {
        best_val = acc;
        best = cur;
      }
      return;
    }
    for (Index c = 0; c < m; ++c) {
      if (used[c])
        continue;
      used[c] = true;
      cur[row] = c;
      self(self, row + 1, acc + score(row, c));
      used[c] = false;
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

/// Matches estimated rank-1 terms (given as per-mode vectors) to truth
/// columns on the mean |cosine| across modes.
inline std::vector<Index> match_components(const std::vector<std::array<Vector, 3>>& est,
                                           const KruskalModel& truth) {
  Matrix score(static_cast<Index>(est.size()), truth.rank());
  for (size_t e = 0; e < est.size(); ++e)
    for (Index t = 0; t < truth.rank(); ++t) {
      double s = 0;
      for (int n = 0; n < 3; ++n)
        s += std::abs(est[e][n].dot(truth.factors[n].col(t))) /
             (est[e][n].norm() * truth.factors[n].col(t).norm());
      score(static_cast<Index>(e), t) = s / 3;
    }
  return best_assignment(score);
}

inline double median(std::vector<double> v) {
  if (v.empty())
    throw std::invalid_argument("median: empty input");
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1)
    return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

struct GeneratorConfig {
  Index rank = 10;
  double c = 0.0;
  std::optional<double> rho;       ///< cosine forced between components 1 and 2
  std::vector<int> modes_with_rho; ///< 0-based modes that receive rho
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  void validate() const {
    if (rank < 2)
      throw std::invalid_argument("GeneratorConfig: rank must be at least 2");
    if (!(c >= 0 && c < 1))
      throw std::invalid_argument("GeneratorConfig: c must lie in [0, 1)");
    if (rho && !(*rho >= c && *rho < 1))
      throw std::invalid_argument("GeneratorConfig: rho must lie in [c, 1)");
    for (int m : modes_with_rho)
      if (m < 0 || m > 2)
        throw std::invalid_argument("GeneratorConfig: rho modes must be 0, 1 or 2");
    if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0))
      throw std::invalid_argument("GeneratorConfig: SNR must be a number or +inf");
  }
};

struct SyntheticProblem {
  KruskalModel truth;
  DenseTensor3 clean;
  DenseTensor3 tensor; ///< clean plus noise
};

/// Unit weights, uniform collinearity c, optional rho between components 1, 2.
inline SyntheticProblem generate(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SyntheticProblem out;
  out.truth.weights = Vector::Ones(cfg.rank);
  for (int n = 0; n < 3; ++n) {
    out.truth.factors[n] = gen_factor(cfg.rank, cfg.c, rng);
    if (cfg.rho && std::find(cfg.modes_with_rho.begin(), cfg.modes_with_rho.end(), n) !=
                       cfg.modes_with_rho.end())
      out.truth.factors[n].col(1) = adjust_collinearity(
          out.truth.factors[n].col(0), out.truth.factors[n].col(1), cfg.c, *cfg.rho);
  }
  out.clean = reconstruct_kruskal(out.truth);
  out.tensor = add_noise(out.clean, cfg.snr_db, rng);
  return out;
}

struct TrialResult {
  std::vector<double> sae_db; ///< one entry per (matched component, mode)
  std::vector<Index> matched; ///< truth index of every estimated component
  int iterations = 0;
  double wall_time = 0;
  double final_rel_error = 0;
  bool converged = false;
  bool split_ok = true;
};

/// Per (estimate, mode) SAE in dB after optimal matching. A failed split
/// (`est` empty) scores kFailedSae for `expected` components.
inline std::vector<double> matched_sae_db(const std::vector<std::array<Vector, 3>>& est,
                                          const KruskalModel& truth, std::vector<Index>* matched,
                                          size_t expected = 2) {
  std::vector<double> out;
  if (est.empty()) {
    out.assign(3 * expected, sae_to_db(kFailedSae));
    return out;
  }
  const std::vector<Index> m = match_components(est, truth);
  for (size_t e = 0; e < est.size(); ++e)
    for (int n = 0; n < 3; ++n)
      out.push_back(sae_db(truth.factors[n].col(m[e]), est[e][n]));
  if (matched)
    *matched = m;
  return out;
}

} // namespace btd
