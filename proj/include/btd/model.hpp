#pragma once

// Model containers: Kruskal (CP) models, Tucker blocks and the two-block
// decomposition  Y ~ [[G; U1, U2, U3]] + [[H; V1, V2, V3]].

#include "btd/tensor.hpp"

#include <algorithm>
#include <numeric>

namespace btd {

using FactorSet = std::array<Matrix, 3>;

struct KruskalModel {
  Vector weights;
  FactorSet factors;

  Index rank() const { return weights.size(); }

  void validate() const {
    for (const auto& f : factors) {
      if (f.cols() != weights.size())
        throw std::invalid_argument("KruskalModel: factor column count differs from rank");
      if (f.rows() <= 0)
        throw std::invalid_argument("KruskalModel: empty factor");
      require_finite(f, "KruskalModel factor");
    }
    require_finite(weights, "KruskalModel weights");
  }

  /// Rescales to unit-norm columns, absorbs norms and signs into the weights
  /// and sorts components by decreasing weight (stable, so ties keep their
  /// original order). Signs: the largest-magnitude entry of every mode-1 and
  /// mode-2 column is made positive, compensating flips go to mode 3, and a
  /// negative weight is flipped into mode 3 as well.
  void normalize() {
    validate();
    const Index r = rank();
    for (Index c = 0; c < r; ++c) {
      for (auto& f : factors) {
        const double n = f.col(c).norm();
        if (n > 0) {
          f.col(c) /= n;
          weights[c] *= n;
        } else {
          weights[c] = 0;
        }
      }
      for (int m = 0; m < 2; ++m) {
        Index imax = 0;
        factors[m].col(c).cwiseAbs().maxCoeff(&imax);
        if (factors[m](imax, c) < 0) {
          factors[m].col(c) *= -1;
          factors[2].col(c) *= -1;
        }
      }
      if (weights[c] < 0) {
        weights[c] = -weights[c];
        factors[2].col(c) *= -1;
      }
    }
    std::vector<Index> order(static_cast<size_t>(r));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return weights[a] > weights[b]; });
    KruskalModel sorted{Vector(r), {}};
    for (int m = 0; m < 3; ++m)
      sorted.factors[m].resize(factors[m].rows(), r);
    for (Index c = 0; c < r; ++c) {
      sorted.weights[c] = weights[order[c]];
      for (int m = 0; m < 3; ++m)
        sorted.factors[m].col(c) = factors[m].col(order[c]);
    }
    *this = std::move(sorted);
  }
};

struct TuckerBlock {
  DenseTensor3 core;
  FactorSet factors;

  void validate() const {
    for (int m = 0; m < 3; ++m) {
      if (factors[m].cols() != core.dim(m))
        throw std::invalid_argument("TuckerBlock: factor " + std::to_string(m) + " has " +
                                    std::to_string(factors[m].cols()) +
                                    " columns but core mode has size " +
                                    std::to_string(core.dim(m)));
      require_finite(factors[m], "TuckerBlock factor");
    }
  }

  Dims output_dims() const { return {factors[0].rows(), factors[1].rows(), factors[2].rows()}; }
};

/// Two Tucker blocks sharing the output shape. blockG is the small
/// (K, K, K) block that gets split, blockH the (R-K, R-K, R-K) remainder.
struct BlockPairModel {
  TuckerBlock blockG;
  TuckerBlock blockH;

  Index block_size() const { return blockG.core.dim(0); }

  void validate() const {
    blockG.validate();
    blockH.validate();
    if (blockG.output_dims() != blockH.output_dims())
      throw std::invalid_argument("BlockPairModel: blocks have different row counts");
  }
};

inline DenseTensor3 reconstruct_kruskal(const KruskalModel& m) {
  m.validate();
  const Index i1 = m.factors[0].rows(), i2 = m.factors[1].rows(), i3 = m.factors[2].rows();
  // Y(3)^T = (B kr A) diag(lambda) C^T, written straight into the layout.
  Matrix kr = khatri_rao(m.factors[1], m.factors[0]);
  Vector vals(i1 * i2 * i3);
  Eigen::Map<Matrix>(vals.data(), i1 * i2, i3).noalias() =
      kr * m.weights.asDiagonal() * m.factors[2].transpose();
  return DenseTensor3({i1, i2, i3}, std::move(vals));
}

inline DenseTensor3 reconstruct_tucker(const TuckerBlock& b) {
  b.validate();
  return multi_mode_product(b.core, b.factors);
}

inline DenseTensor3 reconstruct_pair(const BlockPairModel& p) {
  p.validate();
  return reconstruct_tucker(p.blockG) + reconstruct_tucker(p.blockH);
}

/// ||y - approx||_F^2.
inline double squared_error(const DenseTensor3& y, const DenseTensor3& approx) {
  y.check_same_shape(approx);
  return (y.values() - approx.values()).squaredNorm();
}

/// ||y - approx||_F^2 / ||y||_F^2.
inline double relative_error(const DenseTensor3& y, const DenseTensor3& approx) {
  const double ny = y.squared_norm();
  if (ny == 0)
    throw std::invalid_argument("relative_error: reference tensor has zero norm");
  return squared_error(y, approx) / ny;
}

/// Superdiagonal core holding `weights`, used to view a Kruskal model as a Tucker block.
inline DenseTensor3 superdiagonal(const Vector& weights) {
  const Index r = weights.size();
  DenseTensor3 core(r, r, r);
  for (Index i = 0; i < r; ++i)
    core(i, i, i) = weights[i];
  return core;
}

inline TuckerBlock to_tucker(const KruskalModel& m) {
  return {superdiagonal(m.weights), m.factors};
}

/// Splits a CP model into the two-block form, `selected` columns going to blockG.
inline BlockPairModel block_pair_from_kruskal(const KruskalModel& m,
                                              const std::vector<Index>& selected) {
  m.validate();
  const Index r = m.rank();
  const Index k = static_cast<Index>(selected.size());
  if (k < 1 || k > r - k)
    throw std::invalid_argument("block_pair_from_kruskal: need 1 <= K <= R-K");
  std::vector<bool> in_g(static_cast<size_t>(r), false);
  for (Index s : selected) {
    if (s < 0 || s >= r || in_g[s])
      throw std::invalid_argument("block_pair_from_kruskal: bad component index");
    in_g[s] = true;
  }
  std::vector<Index> rest;
  for (Index c = 0; c < r; ++c)
    if (!in_g[c])
      rest.push_back(c);
  auto gather = [&](const std::vector<Index>& cols) {
    KruskalModel sub{Vector(static_cast<Index>(cols.size())), {}};
    for (int mode = 0; mode < 3; ++mode) {
      sub.factors[mode].resize(m.factors[mode].rows(), static_cast<Index>(cols.size()));
      for (size_t c = 0; c < cols.size(); ++c)
        sub.factors[mode].col(static_cast<Index>(c)) = m.factors[mode].col(cols[c]);
    }
    for (size_t c = 0; c < cols.size(); ++c)
      sub.weights[static_cast<Index>(c)] = m.weights[cols[c]];
    return to_tucker(sub);
  };
  return {gather(selected), gather(rest)};
}

} // namespace btd
