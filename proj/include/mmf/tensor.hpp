#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmf/errors.hpp"

namespace mmf {

/// Extents of an N-way tensor, one entry per mode.
///
/// Zero extents are representable (an empty vector is a legal pad_one input);
/// the algebraic operations below require positive extents and say so.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { check(); }
  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) { check(); }

  std::size_t order() const { return dims_.size(); }
  std::size_t dim(std::size_t k) const {
    if (k >= dims_.size())
      throw std::invalid_argument("mode index " + std::to_string(k) +
                                  " out of range for shape " + str());
    return dims_[k];
  }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t numel() const { return numel_; }

  bool operator==(const Shape& other) const { return dims_ == other.dims_; }
  bool operator!=(const Shape& other) const { return !(*this == other); }

  std::string str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) os << 'x';
      os << dims_[i];
    }
    os << ')';
    return os.str();
  }

 private:
  void check() {
    numel_ = dims_.empty() ? 0 : 1;
    for (std::size_t d : dims_) {
      if (d != 0 && numel_ > std::numeric_limits<std::size_t>::max() / (d ? d : 1))
        throw std::invalid_argument("shape " + str() + " overflows element count");
      numel_ *= d;
    }
  }

  std::vector<std::size_t> dims_;
  std::size_t numel_ = 0;
};

/// Dense row-major N-way array of doubles; the one value type used for
/// activations, weights and gradients. Last mode varies fastest.
class Tensor {
 public:
  Tensor() : shape_({0}) {}
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_.numel(), 0.0) {}
  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel())
      throw ShapeError("data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
  }

  static Tensor vector(std::vector<double> v) {
    Shape s({v.size()});
    return Tensor(std::move(s), std::move(v));
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    return Tensor(Shape({rows, cols}), std::move(v));
  }
  static Tensor full(Shape shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.order(); }
  std::size_t dim(std::size_t k) const { return shape_.dim(k); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  double at(std::initializer_list<std::size_t> idx) const { return data_[offset(idx)]; }
  double& at(std::initializer_list<std::size_t> idx) { return data_[offset(idx)]; }

  /// 2-mode accessors; throw on other orders.
  std::size_t rows() const { return dim2(0); }
  std::size_t cols() const { return dim2(1); }
  double m(std::size_t r, std::size_t c) const { return data_[r * dim2(1) + c]; }
  double& m(std::size_t r, std::size_t c) { return data_[r * dim2(1) + c]; }

  /// Same data reinterpreted under a shape with equal element count.
  Tensor reshaped(Shape shape) const {
    if (shape.numel() != data_.size())
      throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
    return Tensor(std::move(shape), data_);
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

 private:
  std::size_t dim2(std::size_t k) const {
    if (shape_.order() != 2)
      throw ShapeError("2-mode access on tensor of shape " + shape_.str());
    return shape_.dim(k);
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != shape_.order())
      throw std::invalid_argument("index arity " + std::to_string(idx.size()) +
                                  " does not match shape " + shape_.str());
    std::size_t off = 0;
    std::size_t k = 0;
    for (std::size_t i : idx) {
      if (i >= shape_.dim(k))
        throw std::invalid_argument("index out of range for shape " + shape_.str());
      off = off * shape_.dim(k) + i;
      ++k;
    }
    return off;
  }

  Shape shape_;
  std::vector<double> data_;
};

namespace detail {

inline void require_vector(const Tensor& t, const char* what) {
  if (t.order() != 1)
    throw std::invalid_argument(std::string(what) + ": expected a 1-mode tensor, got " +
                                t.shape().str());
}

inline void require_matrix(const Tensor& t, const char* what) {
  if (t.order() != 2)
    throw ShapeError(std::string(what) + ": expected a 2-mode tensor, got " +
                     t.shape().str());
}

/// Splits numel as before(k) * dims[k] * after(k) for row-major stride math.
inline void mode_split(const Shape& s, std::size_t k, std::size_t& before,
                       std::size_t& after) {
  before = 1;
  after = 1;
  for (std::size_t j = 0; j < k; ++j) before *= s.dim(j);
  for (std::size_t j = k + 1; j < s.order(); ++j) after *= s.dim(j);
}

}  // namespace detail

/// v_1 ⊗ ... ⊗ v_M: entry (i_1..i_M) = ∏_m v_m[i_m].
inline Tensor outer_product(std::span<const Tensor> vectors) {
  if (vectors.empty())
    throw std::invalid_argument("outer_product: empty vector list");
  std::vector<std::size_t> dims;
  dims.reserve(vectors.size());
  for (const Tensor& v : vectors) {
    detail::require_vector(v, "outer_product");
    if (v.size() == 0) throw std::invalid_argument("outer_product: empty vector");
    dims.push_back(v.size());
  }
  Tensor out((Shape(dims)));
  const std::size_t n = out.size();
  std::vector<std::size_t> idx(dims.size(), 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    double p = 1.0;
    for (std::size_t m = 0; m < dims.size(); ++m) p *= vectors[m][idx[m]];
    out[flat] = p;
    for (std::size_t m = dims.size(); m-- > 0;) {  // row-major increment
      if (++idx[m] < dims[m]) break;
      idx[m] = 0;
    }
  }
  return out;
}

inline Tensor outer_product(std::initializer_list<Tensor> vectors) {
  std::vector<Tensor> vs(vectors);
  return outer_product(std::span<const Tensor>(vs));
}

/// t ×_k m: contracts mode k of t (extent = m.cols) against the columns of m;
/// out[.., a, ..] = Σ_b m(a,b) · t[.., b, ..].
inline Tensor kmode_product(const Tensor& t, const Tensor& m, std::size_t k) {
  detail::require_matrix(m, "kmode_product");
  if (k >= t.order())
    throw std::invalid_argument("kmode_product: mode " + std::to_string(k) +
                                " out of range for shape " + t.shape().str());
  if (m.cols() != t.dim(k))
    throw ShapeError("kmode_product: matrix " + m.shape().str() +
                     " cannot contract mode " + std::to_string(k) + " of tensor " +
                     t.shape().str());
  std::size_t before = 0, after = 0;
  detail::mode_split(t.shape(), k, before, after);
  const std::size_t dk = t.dim(k);
  const std::size_t rk = m.rows();
  std::vector<std::size_t> out_dims = t.shape().dims();
  out_dims[k] = rk;
  Tensor out((Shape(out_dims)));
  for (std::size_t a = 0; a < before; ++a) {
    for (std::size_t r = 0; r < rk; ++r) {
      double* dst = out.data() + (a * rk + r) * after;
      for (std::size_t b = 0; b < dk; ++b) {
        const double w = m.m(r, b);
        if (w == 0.0) continue;
        const double* src = t.data() + (a * dk + b) * after;
        for (std::size_t c = 0; c < after; ++c) dst[c] += w * src[c];
      }
    }
  }
  return out;
}

/// Mode-k matricization: rows = dims[k], columns enumerate the remaining
/// modes in row-major order (relative order preserved, last fastest).
inline Tensor unfold(const Tensor& t, std::size_t k) {
  if (k >= t.order())
    throw std::invalid_argument("unfold: mode " + std::to_string(k) +
                                " out of range for shape " + t.shape().str());
  if (t.size() == 0)
    throw std::invalid_argument("unfold: empty tensor " + t.shape().str());
  std::size_t before = 0, after = 0;
  detail::mode_split(t.shape(), k, before, after);
  const std::size_t dk = t.dim(k);
  Tensor out(Shape({dk, before * after}));
  for (std::size_t a = 0; a < before; ++a)
    for (std::size_t r = 0; r < dk; ++r) {
      const double* src = t.data() + (a * dk + r) * after;
      double* dst = out.data() + r * (before * after) + a * after;
      std::copy(src, src + after, dst);
    }
  return out;
}

/// Inverse of unfold for the same mode and target shape.
inline Tensor fold(const Tensor& m, std::size_t k, const Shape& target) {
  detail::require_matrix(m, "fold");
  if (k >= target.order())
    throw std::invalid_argument("fold: mode " + std::to_string(k) +
                                " out of range for shape " + target.str());
  std::size_t before = 0, after = 0;
  detail::mode_split(target, k, before, after);
  if (m.rows() != target.dim(k) || m.cols() != before * after)
    throw ShapeError("fold: matrix " + m.shape().str() + " does not matricize mode " +
                     std::to_string(k) + " of " + target.str());
  Tensor out(target);
  const std::size_t dk = target.dim(k);
  for (std::size_t a = 0; a < before; ++a)
    for (std::size_t r = 0; r < dk; ++r) {
      const double* src = m.data() + r * (before * after) + a * after;
      double* dst = out.data() + (a * dk + r) * after;
      std::copy(src, src + after, dst);
    }
  return out;
}

/// Row-major linearization.
inline Tensor flatten(const Tensor& t) { return t.reshaped(Shape({t.size()})); }

/// Prepends the constant 1.0 (the bias/interaction slot of padded fusion).
inline Tensor pad_one(const Tensor& v) {
  detail::require_vector(v, "pad_one");
  std::vector<double> out(v.size() + 1);
  out[0] = 1.0;
  std::copy(v.data(), v.data() + v.size(), out.begin() + 1);
  return Tensor::vector(std::move(out));
}

// ---- dense linear-algebra plumbing shared by layers and adjoints ----

inline Tensor matvec(const Tensor& m, const Tensor& x) {
  detail::require_matrix(m, "matvec");
  detail::require_vector(x, "matvec");
  if (m.cols() != x.size())
    throw ShapeError("matvec: " + m.shape().str() + " times " + x.shape().str());
  Tensor out(Shape({m.rows()}));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    const double* row = m.data() + r * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) sum += row[c] * x[c];
    out[r] = sum;
  }
  return out;
}

/// mᵀ · x for m stored (rows × cols): result has length cols.
inline Tensor matvec_t(const Tensor& m, const Tensor& x) {
  detail::require_matrix(m, "matvec_t");
  detail::require_vector(x, "matvec_t");
  if (m.rows() != x.size())
    throw ShapeError("matvec_t: " + m.shape().str() + " transposed times " +
                     x.shape().str());
  Tensor out(Shape({m.cols()}));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double xr = x[r];
    const double* row = m.data() + r * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += xr * row[c];
  }
  return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + a.shape().str() + " times " + b.shape().str());
  Tensor out(Shape({a.rows(), b.cols()}));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a.m(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out.m(i, j) += aik * b.m(k, j);
    }
  return out;
}

inline Tensor transpose(const Tensor& m) {
  detail::require_matrix(m, "transpose");
  Tensor out(Shape({m.cols(), m.rows()}));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out.m(c, r) = m.m(r, c);
  return out;
}

inline Tensor identity_matrix(std::size_t n) {
  Tensor out(Shape({n, n}));
  for (std::size_t i = 0; i < n; ++i) out.m(i, i) = 1.0;
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("add: " + a.shape().str() + " vs " + b.shape().str());
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("hadamard: " + a.shape().str() + " vs " + b.shape().str());
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

inline Tensor concat(std::span<const Tensor> vectors) {
  if (vectors.empty()) throw std::invalid_argument("concat: empty vector list");
  std::size_t total = 0;
  for (const Tensor& v : vectors) {
    detail::require_vector(v, "concat");
    total += v.size();
  }
  Tensor out(Shape({total}));
  std::size_t off = 0;
  for (const Tensor& v : vectors) {
    std::copy(v.data(), v.data() + v.size(), out.data() + off);
    off += v.size();
  }
  return out;
}

inline Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return out;
}

inline double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size())
    throw ShapeError("dot: " + a.shape().str() + " vs " + b.shape().str());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

inline void axpy_into(Tensor& dst, const Tensor& src) {
  if (dst.size() != src.size())
    throw ShapeError("accumulate: " + dst.shape().str() + " vs " + src.shape().str());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace mmf
