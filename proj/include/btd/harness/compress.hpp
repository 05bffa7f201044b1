#pragma once

// Truncated HOSVD: brings an I1 x I2 x I3 tensor to an R x R x R core.

#include "btd/model.hpp"

#include <Eigen/Eigenvalues>

namespace btd::harness {

struct Compressed {
  DenseTensor3 core;
  FactorSet basis; ///< I_n x R, orthonormal columns
};

namespace detail {

/// Leading eigenpairs of Y(n) Y(n)^T, descending.
inline std::pair<Vector, Matrix> mode_spectrum(const DenseTensor3& y, int mode) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(mode_gram(y, mode));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("mode_spectrum: eigen decomposition failed");
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

} // namespace detail

/// Largest multilinear rank whose singular values exceed rel_tol times the
/// leading one, maximized over modes. Singular values come from the mode Gram
/// spectrum, so anything below about sqrt(eps) of the top is noise.
inline Index estimate_cube_rank(const DenseTensor3& y, double rel_tol = 1e-6) {
  Index r = 0;
  for (int n = 0; n < 3; ++n) {
    const Vector ev = detail::mode_spectrum(y, n).first;
    const double top = std::sqrt(std::max(0.0, ev[0]));
    Index rn = 0;
    for (Index i = 0; i < ev.size(); ++i)
      if (std::sqrt(std::max(0.0, ev[i])) > rel_tol * top)
        ++rn;
    r = std::max(r, rn);
  }
  return r;
}

inline Compressed compress_to_cube(const DenseTensor3& y, Index r) {
  for (int n = 0; n < 3; ++n)
    if (r < 1 || r > y.dim(n))
      throw std::invalid_argument("compress_to_cube: R = " + std::to_string(r) +
                                  " exceeds mode " + std::to_string(n + 1) + " size " +
                                  std::to_string(y.dim(n)));
  Compressed out;
  FactorSet bt;
  for (int n = 0; n < 3; ++n) {
    out.basis[n] = detail::mode_spectrum(y, n).second.leftCols(r);
    // Sign convention: largest-magnitude entry of each basis column positive.
    for (Index c = 0; c < r; ++c) {
      Index imax = 0;
      out.basis[n].col(c).cwiseAbs().maxCoeff(&imax);
      if (out.basis[n](imax, c) < 0)
        out.basis[n].col(c) *= -1;
    }
    bt[n] = out.basis[n].transpose();
  }
  out.core = multi_mode_product(y, bt);
  return out;
}

/// Maps factors of the compressed problem back to the original space.
inline FactorSet decompress_factors(const Compressed& c, const FactorSet& f) {
  return {c.basis[0] * f[0], c.basis[1] * f[1], c.basis[2] * f[2]};
}

inline DenseTensor3 decompress(const Compressed& c) { return multi_mode_product(c.core, c.basis); }

} // namespace btd::harness
