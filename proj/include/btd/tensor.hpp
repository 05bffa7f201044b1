#pragma once

// Dense order-3 tensors and the multilinear primitives used by the solvers.
//
// Storage is column-major in the tensor sense: mode 1 varies fastest,
//
//   value(i, j, k) == values[i + I1 * (j + I2 * k)]
//
// and every unfolding is derived from that formula. Modes are 0-based in code
// (0, 1, 2 stand for modes 1, 2, 3). The mode-n unfolding orders its columns
// with the lower remaining mode varying fastest, which gives the usual
// identity  Y(1) = A diag(lambda) (C kr B)^T  for a Kruskal tensor.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace btd {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::array<Index, 3>;

namespace detail {

inline void check_mode(int mode) {
  if (mode < 0 || mode > 2)
    throw std::invalid_argument("tensor mode must be 0, 1 or 2, got " + std::to_string(mode));
}

/// The two modes other than `mode`, in increasing order.
inline std::pair<int, int> other_modes(int mode) {
  check_mode(mode);
  switch (mode) {
  case 0: return {1, 2};
  case 1: return {0, 2};
  default: return {0, 1};
  }
}

inline std::string dims_string(const Dims& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

} // namespace detail

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (!m.allFinite())
    throw std::invalid_argument(std::string(what) + " contains non-finite entries");
}

class DenseTensor3 {
public:
  DenseTensor3() : dims_{0, 0, 0} {}

  /// Zero tensor of the given shape.
  explicit DenseTensor3(const Dims& dims) : dims_(dims) {
    for (Index d : dims_)
      if (d <= 0)
        throw std::invalid_argument("tensor dimensions must be positive, got " +
                                    detail::dims_string(dims_));
    values_ = Vector::Zero(dims_[0] * dims_[1] * dims_[2]);
  }

  DenseTensor3(Index i1, Index i2, Index i3) : DenseTensor3(Dims{i1, i2, i3}) {}

  /// Takes ownership of `values` laid out mode-1 fastest.
  DenseTensor3(const Dims& dims, Vector values) : DenseTensor3(dims) {
    if (values.size() != values_.size())
      throw std::invalid_argument("tensor payload has " + std::to_string(values.size()) +
                                  " values, shape " + detail::dims_string(dims_) + " needs " +
                                  std::to_string(values_.size()));
    require_finite(values, "tensor");
    values_ = std::move(values);
  }

  const Dims& dims() const { return dims_; }
  Index dim(int mode) const {
    detail::check_mode(mode);
    return dims_[mode];
  }
  Index size() const { return values_.size(); }
  bool empty() const { return values_.size() == 0; }
  bool is_cubic() const { return dims_[0] == dims_[1] && dims_[1] == dims_[2]; }

  double operator()(Index i, Index j, Index k) const {
    return values_[i + dims_[0] * (j + dims_[1] * k)];
  }
  double& operator()(Index i, Index j, Index k) {
    return values_[i + dims_[0] * (j + dims_[1] * k)];
  }

  const Vector& values() const { return values_; }
  const double* data() const { return values_.data(); }

  double squared_norm() const { return values_.squaredNorm(); }
  double norm() const { return values_.norm(); }

  DenseTensor3& operator+=(const DenseTensor3& o) {
    check_same_shape(o);
    values_ += o.values_;
    return *this;
  }
  DenseTensor3& operator-=(const DenseTensor3& o) {
    check_same_shape(o);
    values_ -= o.values_;
    return *this;
  }
  DenseTensor3& operator*=(double s) {
    values_ *= s;
    return *this;
  }

  friend DenseTensor3 operator+(DenseTensor3 a, const DenseTensor3& b) { return a += b; }
  friend DenseTensor3 operator-(DenseTensor3 a, const DenseTensor3& b) { return a -= b; }
  friend DenseTensor3 operator*(DenseTensor3 a, double s) { return a *= s; }
  friend DenseTensor3 operator*(double s, DenseTensor3 a) { return a *= s; }

  friend bool operator==(const DenseTensor3& a, const DenseTensor3& b) {
    return a.dims_ == b.dims_ && a.values_ == b.values_;
  }

  void check_same_shape(const DenseTensor3& o) const {
    if (o.dims_ != dims_)
      throw std::invalid_argument("tensor shape mismatch: " + detail::dims_string(dims_) +
                                  " vs " + detail::dims_string(o.dims_));
  }

private:
  Dims dims_;
  Vector values_;
};

inline double frobenius_norm(const DenseTensor3& t) { return t.norm(); }

/// vec(a)^T vec(b).
inline double inner(const DenseTensor3& a, const DenseTensor3& b) {
  a.check_same_shape(b);
  return a.values().dot(b.values());
}

/// Mode-n unfolding Y(n), shape I_n x (product of the other two dims).
inline Matrix matricize(const DenseTensor3& t, int mode) {
  detail::check_mode(mode);
  const auto [i1, i2, i3] = t.dims();
  switch (mode) {
  case 0:
    return Eigen::Map<const Matrix>(t.data(), i1, i2 * i3);
  case 2:
    return Eigen::Map<const Matrix>(t.data(), i1 * i2, i3).transpose();
  default: {
    Matrix out(i2, i1 * i3);
    for (Index k = 0; k < i3; ++k)
      out.middleCols(k * i1, i1) =
          Eigen::Map<const Matrix>(t.data() + k * i1 * i2, i1, i2).transpose();
    return out;
  }
  }
}

/// Inverse of matricize for a tensor of shape `dims`.
inline DenseTensor3 fold(const Matrix& m, int mode, const Dims& dims) {
  detail::check_mode(mode);
  const auto [i1, i2, i3] = dims;
  const auto [a, b] = detail::other_modes(mode);
  if (m.rows() != dims[mode] || m.cols() != dims[a] * dims[b])
    throw std::invalid_argument("fold: matrix shape does not match tensor dims");
  Vector v(i1 * i2 * i3);
  switch (mode) {
  case 0:
    v = Eigen::Map<const Vector>(m.data(), m.size());
    break;
  case 2:
    Eigen::Map<Matrix>(v.data(), i1 * i2, i3) = m.transpose();
    break;
  default:
    for (Index k = 0; k < i3; ++k)
      Eigen::Map<Matrix>(v.data() + k * i1 * i2, i1, i2) = m.middleCols(k * i1, i1).transpose();
  }
  return DenseTensor3(dims, std::move(v));
}

/// t x_n m: replaces dimension I_n by m.rows().
inline DenseTensor3 mode_product(const DenseTensor3& t, const Matrix& m, int mode) {
  detail::check_mode(mode);
  if (m.cols() != t.dim(mode))
    throw std::invalid_argument("mode_product: matrix has " + std::to_string(m.cols()) +
                                " columns, tensor mode " + std::to_string(mode) + " has size " +
                                std::to_string(t.dim(mode)));
  const auto [i1, i2, i3] = t.dims();
  Dims out_dims = t.dims();
  out_dims[mode] = m.rows();
  Vector out(out_dims[0] * out_dims[1] * out_dims[2]);
  switch (mode) {
  case 0:
    Eigen::Map<Matrix>(out.data(), m.rows(), i2 * i3).noalias() =
        m * Eigen::Map<const Matrix>(t.data(), i1, i2 * i3);
    break;
  case 2:
    Eigen::Map<Matrix>(out.data(), i1 * i2, m.rows()).noalias() =
        Eigen::Map<const Matrix>(t.data(), i1 * i2, i3) * m.transpose();
    break;
  default:
    for (Index k = 0; k < i3; ++k)
      Eigen::Map<Matrix>(out.data() + k * i1 * m.rows(), i1, m.rows()).noalias() =
          Eigen::Map<const Matrix>(t.data() + k * i1 * i2, i1, i2) * m.transpose();
  }
  return DenseTensor3(out_dims, std::move(out));
}

/// t x_1 m0 x_2 m1 x_3 m2.
inline DenseTensor3 multi_mode_product(const DenseTensor3& t, const std::array<Matrix, 3>& m) {
  return mode_product(mode_product(mode_product(t, m[0], 0), m[1], 1), m[2], 2);
}

/// t x_1 m0^T x_2 m1^T x_3 m2^T.
inline DenseTensor3 multi_mode_product_transposed(const DenseTensor3& t,
                                                  const std::array<Matrix, 3>& m) {
  return multi_mode_product(t, {Matrix(m[0].transpose()), Matrix(m[1].transpose()),
                                Matrix(m[2].transpose())});
}

/// Y(n) Y(n)^T computed without materializing the unfolding.
inline Matrix mode_gram(const DenseTensor3& t, int mode) {
  detail::check_mode(mode);
  const auto [i1, i2, i3] = t.dims();
  switch (mode) {
  case 0: {
    Eigen::Map<const Matrix> y(t.data(), i1, i2 * i3);
    Matrix g = Matrix::Zero(i1, i1);
    g.selfadjointView<Eigen::Lower>().rankUpdate(y);
    return g.selfadjointView<Eigen::Lower>();
  }
  case 2: {
    Eigen::Map<const Matrix> y(t.data(), i1 * i2, i3);
    Matrix g = Matrix::Zero(i3, i3);
    g.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose());
    return g.selfadjointView<Eigen::Lower>();
  }
  default: {
    Matrix g = Matrix::Zero(i2, i2);
    for (Index k = 0; k < i3; ++k)
      g.selfadjointView<Eigen::Lower>().rankUpdate(
          Eigen::Map<const Matrix>(t.data() + k * i1 * i2, i1, i2).transpose());
    return g.selfadjointView<Eigen::Lower>();
  }
  }
}

/// Contraction <a, b>_m over the listed (0-based) modes.
///
/// Contracting two modes leaves one free mode per tensor and returns the
/// I_f(a) x I_f(b) matrix a(f) b(f)^T. Contracting all three modes returns the
/// 1x1 matrix holding the inner product. A single-mode contraction would
/// produce an order-4 tensor and is rejected.
inline Matrix contract(const DenseTensor3& a, const DenseTensor3& b, std::vector<int> modes) {
  if (modes.empty())
    throw std::invalid_argument("contract: empty mode set");
  std::array<bool, 3> used{false, false, false};
  for (int m : modes) {
    detail::check_mode(m);
    if (used[m])
      throw std::invalid_argument("contract: repeated mode");
    used[m] = true;
    if (a.dim(m) != b.dim(m))
      throw std::invalid_argument("contract: contracted dimensions differ");
  }
  if (modes.size() == 3) {
    Matrix out(1, 1);
    out(0, 0) = a.values().dot(b.values());
    return out;
  }
  if (modes.size() != 2)
    throw std::invalid_argument("contract: single-mode contraction is not supported");
  const int free = !used[0] ? 0 : (!used[1] ? 1 : 2);
  if (free == 0)
    return Eigen::Map<const Matrix>(a.data(), a.dim(0), a.dim(1) * a.dim(2)) *
           Eigen::Map<const Matrix>(b.data(), b.dim(0), b.dim(1) * b.dim(2)).transpose();
  if (free == 2)
    return Eigen::Map<const Matrix>(a.data(), a.dim(0) * a.dim(1), a.dim(2)).transpose() *
           Eigen::Map<const Matrix>(b.data(), b.dim(0) * b.dim(1), b.dim(2));
  return matricize(a, 1) * matricize(b, 1).transpose();
}

/// Column-wise Kronecker product; column r is kron(a.col(r), b.col(r)).
inline Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("khatri_rao: column counts differ");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Index r = 0; r < a.cols(); ++r)
    for (Index i = 0; i < a.rows(); ++i)
      out.col(r).segment(i * b.rows(), b.rows()) = a(i, r) * b.col(r);
  return out;
}

inline Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline DenseTensor3 hadamard(const DenseTensor3& a, const DenseTensor3& b) {
  a.check_same_shape(b);
  return DenseTensor3(a.dims(), a.values().cwiseProduct(b.values()));
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("hadamard: shape mismatch");
  return a.cwiseProduct(b);
}

/// u o v o w.
inline DenseTensor3 outer3(const Vector& u, const Vector& v, const Vector& w) {
  Vector vals(u.size() * v.size() * w.size());
  Eigen::Map<Matrix> slab(vals.data(), u.size() * v.size(), w.size());
  Matrix uv = u * v.transpose();
  slab = Eigen::Map<const Vector>(uv.data(), uv.size()) * w.transpose();
  return DenseTensor3({u.size(), v.size(), w.size()}, std::move(vals));
}

} // namespace btd
