#pragma once

// Closed-form CPD of a 2 x 2 x 2 core and the split of an extracted block
// into rank-1 terms of the full tensor.

#include "btd/errors.hpp"
#include "btd/model.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <numbers>
#include <random>

namespace btd {

struct Rank1Term {
  double weight = 0;
  std::array<Vector, 3> vectors;
};

inline DenseTensor3 reconstruct_term(const Rank1Term& t) {
  return outer3(t.vectors[0], t.vectors[1], t.vectors[2]) * t.weight;
}

namespace detail {

/// |Im| up to this fraction of |lambda| counts as real.
inline constexpr double kRealEigenTolerance = 1e-9;
/// Relative gap below which two pencil eigenvalues count as repeated.
inline constexpr double kDistinctEigenTolerance = 1e-9;
/// |det G1| below this fraction of ||G1||_F^2 triggers the mode-3 rotation.
inline constexpr double kSingularSliceTolerance = 1e-12;

inline Matrix frontal_slice(const DenseTensor3& g, Index k) {
  Matrix s(g.dim(0), g.dim(1));
  for (Index j = 0; j < g.dim(1); ++j)
    for (Index i = 0; i < g.dim(0); ++i)
      s(i, j) = g(i, j, k);
  return s;
}

/// Assumes G1 invertible. Returns the rank-2 model or throws.
inline KruskalModel cpd222_invertible(const DenseTensor3& g) {
  const Matrix g1 = frontal_slice(g, 0);
  const Matrix g2 = frontal_slice(g, 1);
  // G_k = A diag(lambda .* C(k, :)) B^T, so G2 G1^{-1} = A diag(C(1,:) ./ C(0,:)) A^{-1}.
  Eigen::EigenSolver<Matrix> es(g2 * g1.inverse());
  if (es.info() != Eigen::Success)
    throw NonIdentifiableError("cpd222: eigen decomposition failed");
  const auto ev = es.eigenvalues();
  const double mag = std::max(std::abs(ev[0]), std::abs(ev[1]));
  for (Index i = 0; i < 2; ++i)
    if (std::abs(ev[i].imag()) > kRealEigenTolerance * std::max(std::abs(ev[i]), 1e-300))
      throw DegenerateCoreError("cpd222: complex pencil eigenvalues, core has real rank 3");
  if (std::abs(ev[0].real() - ev[1].real()) <= kDistinctEigenTolerance * mag)
    throw NonIdentifiableError("cpd222: repeated pencil eigenvalues");
  const Matrix a = es.eigenvectors().real();
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible())
    throw NonIdentifiableError("cpd222: defective pencil");
  // Rows of A^{-1} G(1) are lambda_r (c_r kron b_r)^T.
  const Matrix m = lu.solve(matricize(g, 0));
  KruskalModel out{Vector(2), {a, Matrix(2, 2), Matrix(2, 2)}};
  for (Index r = 0; r < 2; ++r) {
    Matrix bc(2, 2); // (j, k) = lambda b_j c_k
    for (Index k = 0; k < 2; ++k)
      for (Index j = 0; j < 2; ++j)
        bc(j, k) = m(r, j + 2 * k);
    Eigen::JacobiSVD<Matrix> svd(bc, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.factors[1].col(r) = svd.matrixU().col(0);
    out.factors[2].col(r) = svd.matrixV().col(0);
    out.weights[r] = svd.singularValues()[0];
  }
  out.normalize();
  return out;
}

inline bool slice_is_singular(const DenseTensor3& g) {
  const Matrix g1 = frontal_slice(g, 0);
  const double n2 = g1.squaredNorm();
  return n2 == 0 || std::abs(g1.determinant()) < kSingularSliceTolerance * n2;
}

} // namespace detail

/// Closed-form rank-2 CPD of a 2 x 2 x 2 tensor via the eigenvectors of G2 G1^{-1}.
/// Throws DegenerateCoreError when the core has no real rank-2 decomposition
/// and NonIdentifiableError when the pencil is singular or has a repeated eigenvalue.
inline KruskalModel cpd222(const DenseTensor3& g, std::uint64_t seed = 0) {
  if (g.dims() != Dims{2, 2, 2})
    throw std::invalid_argument("cpd222: core must be 2 x 2 x 2");
  if (g.squared_norm() == 0)
    throw DegenerateCoreError("cpd222: zero core");
  if (!detail::slice_is_singular(g))
    return detail::cpd222_invertible(g);

  // Rotate the mode-3 basis so the first slice becomes invertible, then undo.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.1, std::numbers::pi / 2 - 0.1);
  const double th = angle(rng);
  Matrix rot(2, 2);
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const DenseTensor3 gr = mode_product(g, rot, 2);
  if (detail::slice_is_singular(gr))
    throw NonIdentifiableError("cpd222: singular pencil");
  KruskalModel m = detail::cpd222_invertible(gr);
  m.factors[2] = rot.transpose() * m.factors[2];
  m.normalize();
  return m;
}

struct SplitResult {
  std::vector<Rank1Term> terms;
  TuckerBlock remainder;
};

/// Maps the CPD of blockG's core through its factors to rank-1 terms of the
/// full tensor. K = 1 blocks pass through as a single term.
inline SplitResult split_block(const BlockPairModel& p, std::uint64_t seed = 0) {
  p.validate();
  const Index k = p.block_size();
  KruskalModel core_cpd;
  if (k == 1) {
    if (p.blockG.core(0, 0, 0) == 0)
      throw DegenerateCoreError("split_block: zero core");
    core_cpd.weights = Vector::Constant(1, p.blockG.core(0, 0, 0));
    for (auto& f : core_cpd.factors)
      f = Matrix::Ones(1, 1);
  } else if (k == 2) {
    core_cpd = cpd222(p.blockG.core, seed);
  } else {
    throw std::invalid_argument("split_block: blockG must be 1 x 1 x 1 or 2 x 2 x 2");
  }
  SplitResult out;
  out.remainder = p.blockH;
  for (Index r = 0; r < core_cpd.rank(); ++r) {
    Rank1Term t;
    t.weight = core_cpd.weights[r];
    for (int n = 0; n < 3; ++n) {
      Vector v = p.blockG.factors[n] * core_cpd.factors[n].col(r);
      const double nv = v.norm();
      if (nv == 0)
        throw DegenerateCoreError("split_block: factor maps a core direction to zero");
      t.vectors[n] = v / nv;
      t.weight *= nv;
    }
    if (t.weight < 0) {
      t.weight = -t.weight;
      t.vectors[2] = -t.vectors[2];
    }
    out.terms.push_back(std::move(t));
  }
  return out;
}

} // namespace btd
