#pragma once

// Initial two-block models. Every strategy first produces R candidate
// components (a Kruskal model), then picks the components that seed blockG,
// fits both cores by least squares and applies orthogonal_normalize.
//
// The GEVD strategy works on the two dominant mode-3 slabs S1, S2 of Y:
// S_k = A D_k B^T, so the eigenvectors of S1 S2^{-1} estimate A. B and C then
// come from the rank-1 rows of A^{-1} Y(1). Complex conjugate eigenpairs are
// kept as their real and imaginary parts, which span the same 2-D subspace.

#include "btd/als.hpp"
#include "btd/orthonormalize.hpp"
#include "btd/synthetic.hpp"

#include <complex>
#include <optional>

namespace btd::harness {

enum class InitStrategy { gevd, random, truth };

struct InitCandidates {
  KruskalModel components;
  std::array<Index, 2> pair{0, 1};  ///< auto-selected target pair
  std::vector<std::array<Index, 2>> conjugate_pairs;
  bool used_fallback = false;       ///< GEVD failed, random candidates used
  std::string note;
};

namespace detail {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// |Im lambda| above this fraction of |lambda| marks a conjugate pair.
inline constexpr double kComplexEigenTolerance = 1e-9;

/// Rotates a complex vector so that its largest-magnitude entry is real positive.
inline CVector fix_phase(const CVector& v) {
  Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const std::complex<double> z = v[imax];
  if (std::abs(z) == 0)
    return v;
  return v * (std::abs(z) / z);
}

inline double abs_cos(const Vector& a, const Vector& b) {
  const double d = a.norm() * b.norm();
  return d == 0 ? 0 : std::abs(a.dot(b)) / d;
}

} // namespace detail

inline InitCandidates random_candidates(Index r, std::uint64_t seed) {
  Rng rng(seed);
  InitCandidates out;
  out.components.weights = Vector::Ones(r);
  for (auto& f : out.components.factors) {
    f = gaussian_matrix(r, r, rng);
    f.colwise().normalize();
  }
  return out;
}

/// GEVD candidates; nullopt when the pencil cannot be formed or inverted.
inline std::optional<InitCandidates> gevd_candidates(const DenseTensor3& y, std::string* why = nullptr) {
  using detail::CMatrix;
  using detail::CVector;
  const Index r = y.dim(0);
  auto fail = [&](const char* msg) -> std::optional<InitCandidates> {
    if (why)
      *why = msg;
    return std::nullopt;
  };
  Eigen::SelfAdjointEigenSolver<Matrix> es3(mode_gram(y, 2));
  if (es3.info() != Eigen::Success)
    return fail("mode-3 eigen decomposition failed");
  const Matrix u3 = es3.eigenvectors().rightCols(2).rowwise().reverse();
  const DenseTensor3 slabs = mode_product(y, u3.transpose(), 2);
  Matrix s1(r, r), s2(r, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < r; ++i) {
      s1(i, j) = slabs(i, j, 0);
      s2(i, j) = slabs(i, j, 1);
    }
  Eigen::FullPivLU<Matrix> lu2(s2);
  if (!lu2.isInvertible() || lu2.rcond() < 1e-13)
    return fail("second slab is singular");
  const Matrix pencil = s1 * lu2.inverse();
  Eigen::EigenSolver<Matrix> es(pencil);
  if (es.info() != Eigen::Success)
    return fail("pencil eigen decomposition failed");
  const CMatrix a = es.eigenvectors();
  Eigen::FullPivLU<CMatrix> alu(a);
  if (!alu.isInvertible() || alu.rcond() < 1e-13)
    return fail("pencil eigenvectors are linearly dependent");
  const CMatrix m = alu.solve(matricize(y, 0).cast<std::complex<double>>());

  std::array<CMatrix, 3> cf{CMatrix(r, r), CMatrix(r, r), CMatrix(r, r)};
  for (Index c = 0; c < r; ++c) {
    CMatrix bc(r, r);
    for (Index k = 0; k < r; ++k)
      for (Index j = 0; j < r; ++j)
        bc(j, k) = m(c, j + r * k);
    Eigen::JacobiSVD<CMatrix> svd(bc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    cf[0].col(c) = detail::fix_phase(a.col(c));
    cf[1].col(c) = detail::fix_phase(svd.matrixU().col(0));
    cf[2].col(c) = detail::fix_phase(svd.matrixV().col(0).conjugate());
  }

  InitCandidates out;
  out.components.weights = Vector::Ones(r);
  for (auto& f : out.components.factors)
    f.resize(r, r);
  const auto ev = es.eigenvalues();
  for (Index c = 0; c < r; ++c) {
    const bool complex =
        std::abs(ev[c].imag()) > detail::kComplexEigenTolerance * std::abs(ev[c]) && c + 1 < r;
    for (int n = 0; n < 3; ++n) {
      out.components.factors[n].col(c) = cf[n].col(c).real();
      if (complex)
        out.components.factors[n].col(c + 1) = cf[n].col(c).imag();
    }
    if (complex) {
      out.conjugate_pairs.push_back({c, c + 1});
      ++c;
    }
  }
  for (auto& f : out.components.factors)
    for (Index c = 0; c < r; ++c) {
      const double nc = f.col(c).norm();
      if (nc == 0)
        return fail("candidate component vanished");
      f.col(c) /= nc;
    }

  if (!out.conjugate_pairs.empty()) {
    out.pair = out.conjugate_pairs.front();
  } else {
    double best = -1;
    for (Index i = 0; i < r; ++i)
      for (Index j = i + 1; j < r; ++j) {
        const double v = detail::abs_cos(out.components.factors[0].col(i),
                                         out.components.factors[0].col(j));
        if (v > best) {
          best = v;
          out.pair = {i, j};
        }
      }
  }
  return out;
}

/// Builds the two-block model seeded by `selected`, fits both cores by least
/// squares and normalizes.
inline BlockPairModel init_from_candidates(const DenseTensor3& y, const KruskalModel& cand,
                                           const std::vector<Index>& selected) {
  BlockPairModel p = block_pair_from_kruskal(cand, selected);
  int regularized = 0;
  als_update_cores(y, p, regularized);
  return orthogonal_normalize(p).model;
}

struct Initialization {
  BlockPairModel model;
  InitCandidates candidates;
  std::vector<Index> selected;
};

/// pair: nullopt selects automatically. k = 1 seeds blockG with the first
/// component of the pair only.
inline Initialization initialize(const DenseTensor3& y, InitStrategy strategy,
                                 std::optional<std::array<Index, 2>> pair, std::uint64_t seed,
                                 Index k = 2, const KruskalModel* truth = nullptr) {
  if (y.empty() || !y.is_cubic())
    throw std::invalid_argument("initialize: input must be R x R x R");
  if (k != 1 && k != 2)
    throw std::invalid_argument("initialize: block size must be 1 or 2");
  const Index r = y.dim(0);
  Initialization out;
  switch (strategy) {
  case InitStrategy::truth:
    if (!truth || truth->rank() != r)
      throw std::invalid_argument("initialize: truth strategy needs a rank-R model");
    out.candidates.components = *truth;
    break;
  case InitStrategy::random:
    out.candidates = random_candidates(r, seed);
    break;
  case InitStrategy::gevd: {
    std::string why;
    if (auto c = gevd_candidates(y, &why)) {
      out.candidates = std::move(*c);
    } else {
      out.candidates = random_candidates(r, seed);
      out.candidates.used_fallback = true;
      out.candidates.note = why;
    }
    break;
  }
  }
  std::array<Index, 2> chosen = pair.value_or(out.candidates.pair);
  if (chosen[0] < 0 || chosen[1] < 0 || chosen[0] >= r || chosen[1] >= r || chosen[0] == chosen[1])
    throw std::invalid_argument("initialize: pair indices must be distinct and below R");
  out.selected = k == 2 ? std::vector<Index>{chosen[0], chosen[1]} : std::vector<Index>{chosen[0]};
  try {
    out.model = init_from_candidates(y, out.candidates.components, out.selected);
  } catch (const NumericalError& e) {
    if (strategy != InitStrategy::gevd)
      throw;
    out.candidates = random_candidates(r, seed);
    out.candidates.used_fallback = true;
    out.candidates.note = e.what();
    out.selected = k == 2 ? std::vector<Index>{0, 1} : std::vector<Index>{0};
    out.model = init_from_candidates(y, out.candidates.components, out.selected);
  }
  return out;
}

} // namespace btd::harness
