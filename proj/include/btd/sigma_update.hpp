#pragma once

// One-dimensional maximization behind the sigma update:
//
//   maximize  phi(x) = sum_i (a_i x + b_i)^2 / (x^2 + c_i),   c_i > 0,
//
// over x in R plus the limits x -> +-inf (where phi -> sum a_i^2). The
// stationarity condition phi'(x) = 0 is turned into a single polynomial by
// clearing the denominators. Its real roots are isolated between the real
// roots of its derivatives and every candidate is scored on phi itself.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace btd {

namespace poly {

/// Coefficients in increasing degree.
using Poly = std::vector<double>;

inline Poly multiply(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty())
    return {};
  Poly out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j)
      out[i + j] += a[i] * b[j];
  return out;
}

inline void add_to(Poly& acc, const Poly& p) {
  if (acc.size() < p.size())
    acc.resize(p.size(), 0.0);
  for (size_t i = 0; i < p.size(); ++i)
    acc[i] += p[i];
}

/// Drops leading coefficients that are negligible relative to the largest one.
inline void trim(Poly& p, double rel = 1e-14) {
  double scale = 0;
  for (double c : p)
    scale = std::max(scale, std::abs(c));
  while (!p.empty() && std::abs(p.back()) <= rel * scale)
    p.pop_back();
}

/// All complex roots via eigenvalues of the companion matrix. Returns false
/// when the eigen solver does not converge.
inline bool roots(Poly p, std::vector<std::complex<double>>& out) {
  out.clear();
  trim(p);
  if (p.size() <= 1)
    return true;
  const Eigen::Index n = static_cast<Eigen::Index>(p.size()) - 1;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i)
    companion(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    companion(i, n - 1) = -p[static_cast<size_t>(i)] / p.back();
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  if (es.info() != Eigen::Success)
    return false;
  for (Eigen::Index i = 0; i < n; ++i)
    out.push_back(es.eigenvalues()[i]);
  return true;
}

inline double evaluate(const Poly& p, double x) {
  double v = 0;
  for (size_t i = p.size(); i-- > 0;)
    v = v * x + p[i];
  return v;
}

inline Poly derivative(const Poly& p) {
  if (p.size() <= 1)
    return {};
  Poly d(p.size() - 1);
  for (size_t i = 1; i < p.size(); ++i)
    d[i - 1] = static_cast<double>(i) * p[i];
  return d;
}

namespace detail {

/// Root of p in [lo, hi] given a sign change; safeguarded Newton.
inline double bracketed_root(const Poly& p, const Poly& dp, double lo, double hi, double flo) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = evaluate(p, x);
    if (fx == 0)
      return x;
    if ((fx < 0) == (flo < 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
      break;
    const double dfx = evaluate(dp, x);
    double next = dfx != 0 ? x - fx / dfx : lo - 1;
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

} // namespace detail

/// Real roots of odd multiplicity (the sign changes of p), ascending. The
/// critical points of p, found recursively from p', split the line into
/// monotone pieces, each holding at most one such root.
inline void real_roots(Poly p, std::vector<double>& out) {
  out.clear();
  trim(p);
  if (p.size() <= 1)
    return;
  if (p.size() == 2) {
    out.push_back(-p[0] / p[1]);
    return;
  }
  double bound = 0;
  for (size_t i = 0; i + 1 < p.size(); ++i)
    bound = std::max(bound, std::abs(p[i] / p.back()));
  bound += 1;
  std::vector<double> cuts;
  real_roots(derivative(p), cuts);
  std::vector<double> pts{-bound};
  for (double c : cuts)
    if (c > -bound && c < bound)
      pts.push_back(c);
  pts.push_back(bound);
  const Poly dp = derivative(p);
  double fl = evaluate(p, pts[0]);
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const double fr = evaluate(p, pts[i + 1]);
    if (fl == 0) {
      if (out.empty() || out.back() != pts[i])
        out.push_back(pts[i]);
    } else if (fr != 0 && (fl < 0) != (fr < 0)) {
      out.push_back(detail::bracketed_root(p, dp, pts[i], pts[i + 1], fl));
    }
    fl = fr;
  }
  if (fl == 0 && (out.empty() || out.back() != pts.back()))
    out.push_back(pts.back());
}

} // namespace poly

/// phi(x) = sum_i (a_i x + b_i)^2 / (x^2 + c_i).
struct RatioSum {
  std::vector<double> a, b, c;

  double value(double x) const {
    if (std::isinf(x))
      return at_infinity();
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      const double num = a[i] * x + b[i];
      s += num * num / (x * x + c[i]);
    }
    return s;
  }

  double at_infinity() const {
    double s = 0;
    for (double ai : a)
      s += ai * ai;
    return s;
  }

  bool is_flat() const {
    for (size_t i = 0; i < a.size(); ++i)
      if (a[i] != 0 || b[i] != 0)
        return false;
    return true;
  }
};

struct RatioSumMaximum {
  double x = 0;            ///< maximizer; +-infinity for the limit candidates
  double value = 0;
  bool used_fallback = false; ///< polynomial route failed, grid search used
};

namespace detail {

/// Terms sharing a denominator collapse to (A x^2 + B x + C) / (x^2 + c).
struct RatioGroup {
  double c, qa, qb, qc;
};

inline std::vector<RatioGroup> group_terms(const RatioSum& f) {
  std::vector<RatioGroup> groups;
  for (size_t i = 0; i < f.a.size(); ++i) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const RatioGroup& g) { return g.c == f.c[i]; });
    if (it == groups.end()) {
      groups.push_back({f.c[i], 0, 0, 0});
      it = groups.end() - 1;
    }
    it->qa += f.a[i] * f.a[i];
    it->qb += 2 * f.a[i] * f.b[i];
    it->qc += f.b[i] * f.b[i];
  }
  return groups;
}

/// phi'(x) and phi''(x) from the grouped form.
inline std::pair<double, double> derivatives(const std::vector<RatioGroup>& groups, double x) {
  double d1 = 0, d2 = 0;
  for (const auto& g : groups) {
    const double den = x * x + g.c;
    // numerator of the group's derivative: -B x^2 + 2 (A c - C) x + B c
    const double n = -g.qb * x * x + 2 * (g.qa * g.c - g.qc) * x + g.qb * g.c;
    const double dn = -2 * g.qb * x + 2 * (g.qa * g.c - g.qc);
    d1 += n / (den * den);
    d2 += (dn * den - 4 * x * n) / (den * den * den);
  }
  return {d1, d2};
}

/// Numerator of phi'(x) over the common denominator prod_g (x^2 + c_g)^2.
inline poly::Poly stationarity_polynomial(const std::vector<RatioGroup>& groups) {
  poly::Poly total;
  for (size_t g = 0; g < groups.size(); ++g) {
    const auto& gr = groups[g];
    poly::Poly term{gr.qb * gr.c, 2 * (gr.qa * gr.c - gr.qc), -gr.qb};
    for (size_t h = 0; h < groups.size(); ++h) {
      if (h == g)
        continue;
      const poly::Poly sq{groups[h].c, 0.0, 1.0};
      term = poly::multiply(term, poly::multiply(sq, sq));
    }
    poly::add_to(total, term);
  }
  return total;
}

} // namespace detail

/// Maximizes phi over |x| >= x_min (x_min = 0 means the whole real line),
/// always including the limits x -> +-inf. Extra candidates (for example the
/// current iterate) can be supplied so the result never scores below them.
inline RatioSumMaximum maximize_ratio_sum(const RatioSum& f, double x_min = 0.0,
                                          const std::vector<double>& extra_candidates = {}) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  RatioSumMaximum best{inf, f.at_infinity(), false};
  auto consider = [&](double x) {
    if (!std::isfinite(x) && !std::isinf(x))
      return;
    if (std::isfinite(x) && std::abs(x) < x_min)
      return;
    const double v = f.value(x);
    if (v > best.value) {
      best.value = v;
      best.x = x;
    }
  };
  for (double x : extra_candidates)
    consider(x);
  if (x_min > 0) {
    consider(x_min);
    consider(-x_min);
  }
  if (f.is_flat())
    return best;

  // Scaling a and b by a common factor scales phi but not its maximizer.
  double scale = 0;
  for (size_t i = 0; i < f.a.size(); ++i)
    scale = std::max({scale, std::abs(f.a[i]), std::abs(f.b[i])});
  RatioSum scaled = f;
  for (size_t i = 0; i < f.a.size(); ++i) {
    scaled.a[i] /= scale;
    scaled.b[i] /= scale;
  }
  const auto groups = detail::group_terms(scaled);

  auto polish_and_consider = [&](double x) {
    consider(x);
    for (int it = 0; it < 4; ++it) {
      const auto [d1, d2] = detail::derivatives(groups, x);
      if (d2 == 0 || !std::isfinite(d1 / d2))
        break;
      const double next = x - d1 / d2;
      if (!std::isfinite(next))
        break;
      x = next;
      consider(x);
    }
  };

  std::vector<double> rts;
  poly::real_roots(detail::stationarity_polynomial(groups), rts);
  bool finite = true;
  for (double x : rts)
    finite = finite && std::isfinite(x);
  if (finite) {
    for (double x : rts)
      polish_and_consider(x);
  } else {
    best.used_fallback = true;
    constexpr int kGrid = 20000;
    double grid_best_x = 0, grid_best_v = -inf;
    for (int i = 1; i < kGrid; ++i) {
      const double x = std::tan(-std::numbers::pi / 2 + std::numbers::pi * i / kGrid);
      const double v = scaled.value(x);
      if (v > grid_best_v) {
        grid_best_v = v;
        grid_best_x = x;
      }
    }
    polish_and_consider(grid_best_x);
  }
  return best;
}

/// sigma = 1 / sqrt(1 + x^2), with sigma = 0 in the limit.
inline double sigma_from_x(double x) { return std::isinf(x) ? 0.0 : 1.0 / std::sqrt(1.0 + x * x); }

/// Inverse of sigma_from_x on x >= 0.
inline double x_from_sigma(double sigma) {
  if (sigma <= 0)
    return std::numeric_limits<double>::infinity();
  return std::sqrt(std::max(0.0, 1.0 - sigma * sigma)) / sigma;
}

} // namespace btd
