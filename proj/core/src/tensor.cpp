// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <utility>

#include "pclft/error.hpp"

namespace pclft {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

void require_rank2(const Tensor& t, const char* op) {
  require_defined(t, op);
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got " +
                     shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

// Returns the tape to record on, or nullptr when no node is needed.
Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = g_active_tape;
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return tape;
  }
  return nullptr;
}

// Registers `node` as the backward of `out`. The node runs only when the
// output actually received a gradient.
template <class Fn>
void attach(Tape* tape, Tensor& out, Fn&& node) {
  if (tape == nullptr) return;
  out.set_requires_grad(true);
  tape->record([out, node = std::forward<Fn>(node)]() mutable {
    if (!out.has_grad()) return;
    node(out.grad());
  });
}

// Rows and trailing width of a tensor viewed as a matrix over its last axis.
std::pair<std::size_t, std::size_t> as_rows(const Tensor& t) {
  const std::size_t d = t.last_dim();
  return {t.numel() / d, d};
}

void check_finite(std::span<const double> v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError(std::string(op) + ": non-finite input");
  }
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (shape.empty() || product(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  Tensor t;
  t.storage_ = std::make_shared<Storage>();
  t.storage_->shape = std::move(shape);
  t.storage_->values = std::move(values);
  t.storage_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape.empty() ? 0 : product(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::randn(Shape shape, double stddev, std::mt19937_64& rng, bool requires_grad) {
  std::normal_distribution<double> dist(0.0, stddev);
  const std::size_t n = shape.empty() ? 0 : product(shape);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return from(std::move(shape), std::move(v), requires_grad);
}

Tensor::Storage& Tensor::checked() const {
  if (!storage_) throw ContractError("access to an undefined tensor");
  return *storage_;
}

const Shape& Tensor::shape() const { return checked().shape; }
std::size_t Tensor::numel() const { return checked().values.size(); }
std::size_t Tensor::last_dim() const { return checked().shape.back(); }
std::span<const double> Tensor::values() const { return checked().values; }
std::span<double> Tensor::mutable_values() const { return checked().values; }

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on a tensor of shape " + shape_string(shape()));
  }
  return checked().values[0];
}

bool Tensor::requires_grad() const { return storage_ && storage_->requires_grad; }
void Tensor::set_requires_grad(bool on) const { checked().requires_grad = on; }
bool Tensor::has_grad() const { return storage_ && !storage_->grad.empty(); }
std::span<const double> Tensor::grad() const { return checked().grad; }

std::span<double> Tensor::grad_buffer() const {
  Storage& s = checked();
  if (s.grad.empty()) s.grad.assign(s.values.size(), 0.0);
  return s.grad;
}

void Tensor::zero_grad() const {
  Storage& s = checked();
  std::fill(s.grad.begin(), s.grad.end(), 0.0);
}

void Tensor::clear_grad() const {
  Storage& s = checked();
  s.grad.clear();
  s.grad.shrink_to_fit();
}

Tensor Tensor::clone() const {
  const Storage& s = checked();
  return from(s.shape, s.values, s.requires_grad);
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

void Tape::record(std::function<void()> node) {
  if (consumed_) throw TapeReuseError("cannot record onto a consumed tape");
  nodes_.push_back(std::move(node));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw TapeReuseError("tape already consumed by a backward pass");
  require_defined(loss, "backward");
  if (loss.numel() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + shape_string(loss.shape()));
  }
  if (!loss.requires_grad() || nodes_.empty()) {
    throw ContractError("backward: loss was not produced under this tape");
  }
  consumed_ = true;
  Tensor seed = loss;
  seed.grad_buffer()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  nodes_.clear();
  nodes_.shrink_to_fit();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() noexcept { return g_active_tape; }

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros({m, n});
  {
    const double* A = a.values().data();
    const double* B = b.values().data();
    double* C = out.mutable_values().data();
    for (std::size_t i = 0; i < m; ++i) {
      double* c = C + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = A[i * k + p];
        const double* br = B + p * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += av * br[j];
      }
    }
  }
  attach(recording_tape({&a, &b}), out, [a, b, m, k, n](std::span<const double> g) mutable {
    const double* G = g.data();
    if (a.requires_grad()) {
      // dA = G * B^T, computed against an explicit transpose of B.
      const auto bv = b.values();
      std::vector<double> bt(n * k);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = bv[p * n + j];
      double* dA = a.grad_buffer().data();
      for (std::size_t i = 0; i < m; ++i) {
        double* da = dA + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = G[i * n + j];
          const double* btr = bt.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) da[p] += gv * btr[p];
        }
      }
    }
    if (b.requires_grad()) {
      const double* A = a.values().data();
      double* dB = b.grad_buffer().data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* gr = G + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          double* db = dB + p * n;
          for (std::size_t j = 0; j < n; ++j) db[j] += av * gr[j];
        }
      }
    }
  });
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k) {
    throw ShapeError("matmul_nt: inner dimensions disagree for " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()) + "^T");
  }
  Tensor out = Tensor::zeros({m, n});
  {
    const double* A = a.values().data();
    const double* B = b.values().data();
    double* C = out.mutable_values().data();
    for (std::size_t i = 0; i < m; ++i) {
      const double* ar = A + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double* br = B + j * k;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += ar[p] * br[p];
        C[i * n + j] = acc;
      }
    }
  }
  attach(recording_tape({&a, &b}), out, [a, b, m, k, n](std::span<const double> g) mutable {
    const double* G = g.data();
    if (a.requires_grad()) {
      const double* B = b.values().data();
      double* dA = a.grad_buffer().data();
      for (std::size_t i = 0; i < m; ++i) {
        double* da = dA + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = G[i * n + j];
          const double* br = B + j * k;
          for (std::size_t p = 0; p < k; ++p) da[p] += gv * br[p];
        }
      }
    }
    if (b.requires_grad()) {
      const double* A = a.values().data();
      double* dB = b.grad_buffer().data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* ar = A + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = G[i * n + j];
          double* db = dB + j * k;
          for (std::size_t p = 0; p < k; ++p) db[p] += gv * ar[p];
        }
      }
    }
  });
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_defined(x, "linear");
  if (x.rank() == 1) {
    Tensor y = linear(reshape(x, {1, x.numel()}), weight, bias);
    return reshape(y, {y.numel()});
  }
  return add_bias(matmul(x, weight), bias);
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> v(a.numel());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] + bv[i];
  Tensor out = Tensor::from(a.shape(), std::move(v));
  attach(recording_tape({&a, &b}), out, [a, b](std::span<const double> g) mutable {
    for (const Tensor* t : {&a, &b}) {
      if (!t->requires_grad()) continue;
      auto d = t->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_defined(x, "add_bias");
  require_defined(bias, "add_bias");
  const auto [rows, d] = as_rows(x);
  if (bias.rank() != 1 || bias.numel() != d) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) +
                     " does not match trailing axis of " + shape_string(x.shape()));
  }
  std::vector<double> v(x.values().begin(), x.values().end());
  const auto bv = bias.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < d; ++j) v[r * d + j] += bv[j];
  Tensor out = Tensor::from(x.shape(), std::move(v));
  attach(recording_tape({&x, &bias}), out,
         [x, bias, rows, d](std::span<const double> g) mutable {
           if (x.requires_grad()) {
             auto dx = x.grad_buffer();
             for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
           }
           if (bias.requires_grad()) {
             auto db = bias.grad_buffer();
             for (std::size_t r = 0; r < rows; ++r)
               for (std::size_t j = 0; j < d; ++j) db[j] += g[r * d + j];
           }
         });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> v(a.numel());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] * bv[i];
  Tensor out = Tensor::from(a.shape(), std::move(v));
  attach(recording_tape({&a, &b}), out, [a, b](std::span<const double> g) mutable {
    if (a.requires_grad()) {
      auto d = a.grad_buffer();
      const auto bv = b.values();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto d = b.grad_buffer();
      const auto av = a.values();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * av[i];
    }
  });
  return out;
}

Tensor scale(const Tensor& x, double factor) {
  require_defined(x, "scale");
  std::vector<double> v(x.values().begin(), x.values().end());
  for (double& e : v) e *= factor;
  Tensor out = Tensor::from(x.shape(), std::move(v));
  attach(recording_tape({&x}), out, [x, factor](std::span<const double> g) mutable {
    auto d = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * factor;
  });
  return out;
}

Tensor softmax(const Tensor& x, std::span<const std::uint8_t> valid) {
  require_defined(x, "softmax");
  const auto [rows, d] = as_rows(x);
  if (!valid.empty() && valid.size() != d) {
    throw ShapeError("softmax: mask of length " + std::to_string(valid.size()) +
                     " for trailing axis " + std::to_string(d));
  }
  const std::vector<std::uint8_t> mask(valid.begin(), valid.end());
  auto is_valid = [&mask](std::size_t j) { return mask.empty() || mask[j] != 0; };
  if (!mask.empty() && std::none_of(mask.begin(), mask.end(), [](auto m) { return m != 0; })) {
    throw ContractError("softmax: every column is masked");
  }

  const auto xv = x.values();
  std::vector<double> y(x.numel(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * d;
    double* out = y.data() + r * d;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      if (!is_valid(j)) continue;
      if (!std::isfinite(in[j])) throw DomainError("softmax: non-finite input");
      mx = std::max(mx, in[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (!is_valid(j)) continue;
      out[j] = std::exp(in[j] - mx);
      total += out[j];
    }
    for (std::size_t j = 0; j < d; ++j) out[j] /= total;
  }
  Tensor out = Tensor::from(x.shape(), std::move(y));
  attach(recording_tape({&x}), out, [x, out, rows, d](std::span<const double> g) mutable {
    // dx_j = y_j * (g_j - sum_k g_k y_k); masked columns have y_j = 0.
    const auto yv = out.values();
    auto dx = x.grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = yv.data() + r * d;
      const double* gr = g.data() + r * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += gr[j] * yr[j];
      for (std::size_t j = 0; j < d; ++j) dx[r * d + j] += yr[j] * (gr[j] - dot);
    }
  });
  return out;
}

Tensor sigmoid(const Tensor& x) {
  require_defined(x, "sigmoid");
  std::vector<double> y(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = xv[i];
    if (v >= 0) {
      y[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      y[i] = e / (1.0 + e);
    }
  }
  Tensor out = Tensor::from(x.shape(), std::move(y));
  attach(recording_tape({&x}), out, [x, out](std::span<const double> g) mutable {
    const auto yv = out.values();
    auto dx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * yv[i] * (1.0 - yv[i]);
  });
  return out;
}

Tensor tanh(const Tensor& x) {
  require_defined(x, "tanh");
  std::vector<double> y(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(xv[i]);
  Tensor out = Tensor::from(x.shape(), std::move(y));
  attach(recording_tape({&x}), out, [x, out](std::span<const double> g) mutable {
    const auto yv = out.values();
    auto dx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (1.0 - yv[i] * yv[i]);
  });
  return out;
}

Tensor gelu(const Tensor& x) {
  require_defined(x, "gelu");
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  std::vector<double> y(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * kInvSqrt2));
  }
  Tensor out = Tensor::from(x.shape(), std::move(y));
  attach(recording_tape({&x}), out, [x](std::span<const double> g) mutable {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const auto xv = x.values();
    auto dx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xv[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      dx[i] += g[i] * (cdf + v * pdf);
    }
  });
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_defined(x, "layer_norm");
  const auto [rows, d] = as_rows(x);
  if (gamma.numel() != d || beta.numel() != d) {
    throw ShapeError("layer_norm: gamma/beta do not match trailing axis of " +
                     shape_string(x.shape()));
  }
  const auto xv = x.values(), gv = gamma.values(), bv = beta.values();
  std::vector<double> xhat(x.numel()), y(x.numel()), inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += in[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (in[j] - mu) * inv_std[r];
      y[r * d + j] = xhat[r * d + j] * gv[j] + bv[j];
    }
  }
  Tensor out = Tensor::from(x.shape(), std::move(y));
  attach(recording_tape({&x, &gamma, &beta}), out,
         [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), rows,
          d](std::span<const double> g) mutable {
           if (gamma.requires_grad()) {
             auto dg = gamma.grad_buffer();
             for (std::size_t r = 0; r < rows; ++r)
               for (std::size_t j = 0; j < d; ++j) dg[j] += g[r * d + j] * xhat[r * d + j];
           }
           if (beta.requires_grad()) {
             auto db = beta.grad_buffer();
             for (std::size_t r = 0; r < rows; ++r)
               for (std::size_t j = 0; j < d; ++j) db[j] += g[r * d + j];
           }
           if (x.requires_grad()) {
             const auto gv = gamma.values();
             auto dx = x.grad_buffer();
             const double inv_d = 1.0 / static_cast<double>(d);
             for (std::size_t r = 0; r < rows; ++r) {
               double sum_dh = 0.0, sum_dh_xhat = 0.0;
               for (std::size_t j = 0; j < d; ++j) {
                 const double dh = g[r * d + j] * gv[j];
                 sum_dh += dh;
                 sum_dh_xhat += dh * xhat[r * d + j];
               }
               for (std::size_t j = 0; j < d; ++j) {
                 const double dh = g[r * d + j] * gv[j];
                 dx[r * d + j] += inv_std[r] *
                                  (dh - inv_d * sum_dh - xhat[r * d + j] * inv_d * sum_dh_xhat);
               }
             }
           }
         });
  return out;
}

// ---------------------------------------------------------------------------
// Indexing and layout
// ---------------------------------------------------------------------------

Tensor embedding(const Tensor& table, std::span<const TokenId> ids) {
  require_rank2(table, "embedding");
  if (ids.empty()) throw ContractError("embedding: empty id sequence");
  const std::size_t vocab = table.shape()[0], d = table.shape()[1];
  std::vector<TokenId> idx(ids.begin(), ids.end());
  std::vector<double> v(idx.size() * d);
  const auto tv = table.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vocab) {
      throw IndexError("embedding: id " + std::to_string(idx[i]) + " outside table of " +
                       std::to_string(vocab) + " rows");
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(idx[i] * d), d, v.begin() + i * d);
  }
  Tensor out = Tensor::from({idx.size(), d}, std::move(v));
  attach(recording_tape({&table}), out,
         [table, idx = std::move(idx), d](std::span<const double> g) mutable {
           auto dt = table.grad_buffer();
           for (std::size_t i = 0; i < idx.size(); ++i)
             for (std::size_t j = 0; j < d; ++j)
               dt[static_cast<std::size_t>(idx[i]) * d + j] += g[i * d + j];
         });
  return out;
}

Tensor take_rows(const Tensor& x, std::size_t count) {
  require_rank2(x, "take_rows");
  const std::size_t d = x.shape()[1];
  if (count == 0 || count > x.shape()[0]) {
    throw ShapeError("take_rows: cannot take " + std::to_string(count) + " rows of " +
                     shape_string(x.shape()));
  }
  std::vector<double> v(x.values().begin(), x.values().begin() + static_cast<std::ptrdiff_t>(count * d));
  Tensor out = Tensor::from({count, d}, std::move(v));
  attach(recording_tape({&x}), out, [x](std::span<const double> g) mutable {
    auto dx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
  return out;
}

Tensor dropout(const Tensor& x, double rate, bool train, std::mt19937_64& rng) {
  require_defined(x, "dropout");
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!train || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.numel());
  for (double& m : mask) {
    // 53-bit uniform in [0, 1).
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < rate ? 0.0 : keep_scale;
  }
  std::vector<double> v(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = xv[i] * mask[i];
  Tensor out = Tensor::from(x.shape(), std::move(v));
  attach(recording_tape({&x}), out, [x, mask = std::move(mask)](std::span<const double> g) mutable {
    auto dx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * mask[i];
  });
  return out;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_cols");
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  if (begin >= end || end > d) {
    throw ShapeError("slice_cols: invalid range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") for " + shape_string(x.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> v(rows * w);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(r * d + begin), w, v.begin() + r * w);
  Tensor out = Tensor::from({rows, w}, std::move(v));
  attach(recording_tape({&x}), out, [x, rows, d, begin, w](std::span<const double> g) mutable {
    auto dx = x.grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < w; ++j) dx[r * d + begin + j] += g[r * w + j];
  });
  return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t rows = parts.front().shape().at(0);
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.shape()[0] != rows) {
      throw ShapeError("concat_cols: row count mismatch " + shape_string(parts.front().shape()) +
                       " vs " + shape_string(p.shape()));
    }
    total += p.shape()[1];
  }
  std::vector<double> v(rows * total);
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t w = p.shape()[1];
    const auto pv = p.values();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(r * w), w,
                  v.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    offset += w;
  }
  Tensor out = Tensor::from({rows, total}, std::move(v));
  Tape* tape = nullptr;
  if (active_tape() != nullptr &&
      std::any_of(parts.begin(), parts.end(), [](const Tensor& p) { return p.requires_grad(); })) {
    tape = active_tape();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  attach(tape, out, [inputs = std::move(inputs), rows, total](std::span<const double> g) mutable {
    std::size_t off = 0;
    for (Tensor& p : inputs) {
      const std::size_t w = p.shape()[1];
      if (p.requires_grad()) {
        auto dp = p.grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < w; ++j) dp[r * w + j] += g[r * total + off + j];
      }
      off += w;
    }
  });
  return out;
}

Tensor row(const Tensor& x, std::size_t r) {
  require_rank2(x, "row");
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  if (r >= rows) {
    throw ShapeError("row: index " + std::to_string(r) + " outside " + shape_string(x.shape()));
  }
  const auto xv = x.values();
  std::vector<double> v(xv.begin() + static_cast<std::ptrdiff_t>(r * d),
                        xv.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
  Tensor out = Tensor::from({d}, std::move(v));
  attach(recording_tape({&x}), out, [x, r, d](std::span<const double> g) mutable {
    auto dx = x.grad_buffer();
    for (std::size_t j = 0; j < d; ++j) dx[r * d + j] += g[j];
  });
  return out;
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ContractError("stack_rows: no inputs");
  const std::size_t d = rows.front().numel();
  std::vector<double> v;
  v.reserve(rows.size() * d);
  for (const Tensor& r : rows) {
    require_defined(r, "stack_rows");
    if (r.rank() != 1 || r.numel() != d) {
      throw ShapeError("stack_rows: expected rank-1 rows of length " + std::to_string(d) +
                       ", got " + shape_string(r.shape()));
    }
    v.insert(v.end(), r.values().begin(), r.values().end());
  }
  Tensor out = Tensor::from({rows.size(), d}, std::move(v));
  Tape* tape = nullptr;
  if (active_tape() != nullptr &&
      std::any_of(rows.begin(), rows.end(), [](const Tensor& t) { return t.requires_grad(); })) {
    tape = active_tape();
  }
  std::vector<Tensor> inputs(rows.begin(), rows.end());
  attach(tape, out, [inputs = std::move(inputs), d](std::span<const double> g) mutable {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!inputs[i].requires_grad()) continue;
      auto dr = inputs[i].grad_buffer();
      for (std::size_t j = 0; j < d; ++j) dr[j] += g[i * d + j];
    }
  });
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  require_defined(x, "reshape");
  if (shape.empty() || product(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                     shape_string(shape));
  }
  Tensor out = Tensor::from(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()));
  attach(recording_tape({&x}), out, [x](std::span<const double> g) mutable {
    auto dx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Reductions and losses
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  double total = 0.0;
  for (double v : x.values()) total += v;
  Tensor out = Tensor::scalar(total);
  attach(recording_tape({&x}), out, [x](std::span<const double> g) mutable {
    auto dx = x.grad_buffer();
    for (double& d : dx) d += g[0];
  });
  return out;
}

Tensor mean(const Tensor& x) {
  require_defined(x, "mean");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor binary_cross_entropy(const Tensor& probs, std::span<const double> targets) {
  require_rank2(probs, "binary_cross_entropy");
  const std::size_t batch = probs.shape()[0];
  if (targets.size() != probs.numel()) {
    throw ShapeError("binary_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for probabilities " + shape_string(probs.shape()));
  }
  const auto pv = probs.values();
  check_finite(pv, "binary_cross_entropy");
  std::vector<double> y(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double p = std::clamp(pv[i], kProbClamp, 1.0 - kProbClamp);
    total -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(batch));
  attach(recording_tape({&probs}), out,
         [probs, y = std::move(y), batch](std::span<const double> g) mutable {
           const auto pv = probs.values();
           auto dp = probs.grad_buffer();
           const double s = g[0] / static_cast<double>(batch);
           for (std::size_t i = 0; i < pv.size(); ++i) {
             const double p = pv[i];
             if (p < kProbClamp || p > 1.0 - kProbClamp) continue;
             dp[i] += s * (-y[i] / p + (1.0 - y[i]) / (1.0 - p));
           }
         });
  return out;
}

}  // namespace pclft
