#pragma once

// Reference constructions shared by the unit tests and the acceptance binary.

#include "btd/btd.hpp"

#include <cmath>
#include <numbers>

namespace btd::testing {

inline DenseTensor3 random_tensor(const Dims& d, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(d[0] * d[1] * d[2]);
  for (Index i = 0; i < v.size(); ++i)
    v[i] = n(rng);
  return DenseTensor3(d, std::move(v));
}

inline Vector random_vector(Index n, Rng& rng) { return gaussian_matrix(n, 1, rng).col(0); }

/// Random two-block model with Gaussian factors and cores.
inline BlockPairModel random_pair(Index r, Index k, Rng& rng) {
  BlockPairModel p;
  p.blockG.core = random_tensor({k, k, k}, rng);
  p.blockH.core = random_tensor({r - k, r - k, r - k}, rng);
  for (int n = 0; n < 3; ++n) {
    p.blockG.factors[n] = gaussian_matrix(r, k, rng);
    p.blockH.factors[n] = gaussian_matrix(r, r - k, rng);
  }
  return p;
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double rel_diff(const DenseTensor3& a, const DenseTensor3& b) {
  return (a.values() - b.values()).norm() / b.norm();
}

/// Largest deviation from the three canonical-form conditions.
inline double canonical_defect(const BlockPairModel& p, const std::array<Vector, 3>& sigma) {
  double worst = 0;
  for (int n = 0; n < 3; ++n) {
    const Matrix& u = p.blockG.factors[n];
    const Matrix& v = p.blockH.factors[n];
    const Index k = u.cols();
    worst = std::max(worst, max_abs(u.transpose() * u - Matrix::Identity(k, k)));
    worst = std::max(worst, max_abs(v.transpose() * v - Matrix::Identity(v.cols(), v.cols())));
    Matrix target = Matrix::Zero(k, v.cols());
    target.leftCols(k) = sigma[n].asDiagonal();
    worst = std::max(worst, max_abs(u.transpose() * v - target));
  }
  return worst;
}

/// Brute-force maximum of phi over n points x = tan(theta).
inline double grid_max(const RatioSum& f, int n = 100000) {
  double best = f.at_infinity();
  for (int i = 1; i < n; ++i) {
    const double x = std::tan(-std::numbers::pi / 2 + std::numbers::pi * i / n);
    best = std::max(best, f.value(x));
  }
  return best;
}

inline RatioSum random_ratio_sum(Rng& rng, int terms = 4) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 0.95);
  RatioSum f;
  // Denominators come from sigma products as in the solver: c = 1 - (s1 s2)^2.
  std::array<double, 2> s1{u(rng), u(rng)}, s2{u(rng), u(rng)};
  for (int i = 0; i < terms; ++i) {
    f.a.push_back(n(rng));
    f.b.push_back(n(rng));
    const double g = s1[i % 2] * s2[(i / 2) % 2];
    f.c.push_back(1.0 - g * g);
  }
  return f;
}

inline DeflationState random_state(Index r, Rng& rng, Index k = 2) {
  return make_state(orthogonal_normalize(random_pair(r, k, rng)));
}

/// Phi_n through the explicit Kronecker product of the two projectors.
inline Matrix phi_kronecker(const DenseTensor3& y, const DeflationState& s, int mode) {
  const auto [n1, n2] = detail::other_modes(mode);
  const Index r = s.rank();
  const Matrix p1 = Matrix::Identity(r, r) - s.w[n1] * s.w[n1].transpose();
  const Matrix p2 = Matrix::Identity(r, r) - s.w[n2] * s.w[n2].transpose();
  const Matrix yn = matricize(y, mode);
  return yn * kronecker(p2, p1) * yn.transpose();
}

/// Rotation close to the identity: Cayley transform of a small skew matrix.
inline Matrix small_rotation(Index r, double eps, Rng& rng) {
  const Matrix a = gaussian_matrix(r, r, rng);
  const Matrix skew = eps * (a - a.transpose());
  const Matrix i = Matrix::Identity(r, r);
  return (i - skew).partialPivLu().solve(i + skew);
}

inline BlockPairModel perturb(const BlockPairModel& p, double eps, Rng& rng) {
  BlockPairModel out = p;
  for (int n = 0; n < 3; ++n) {
    const Index r = p.blockG.factors[n].rows();
    out.blockG.factors[n] = small_rotation(r, eps, rng) * p.blockG.factors[n];
    out.blockH.factors[n] = small_rotation(r, eps, rng) * p.blockH.factors[n];
  }
  return out;
}

} // namespace btd::testing
