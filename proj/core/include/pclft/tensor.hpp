// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// Dense float64 tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a shared handle: copies alias the same storage, which is what
// lets a recorded backward closure write gradients into the caller's
// parameters. Use clone() for a deep copy.
//
// Operations record a backward node only while a Tape is active on the
// current thread (see TapeScope) and at least one input requires a gradient.
// Without an active tape every op is a plain forward computation.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pclft {

using Shape = std::vector<std::size_t>;
using TokenId = std::int32_t;

std::string shape_string(const Shape& shape);

class Tensor {
 public:
  /// An undefined handle. Most operations reject it.
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Entries drawn from normal(0, stddev).
  static Tensor randn(Shape shape, double stddev, std::mt19937_64& rng, bool requires_grad = false);

  bool defined() const noexcept { return storage_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  /// Size of the trailing axis.
  std::size_t last_dim() const;

  std::span<const double> values() const;
  /// Handles share storage, so writes through a const handle are visible to
  /// every copy.
  std::span<double> mutable_values() const;
  double item() const;
  double operator[](std::size_t flat) const { return values()[flat]; }

  bool requires_grad() const;
  void set_requires_grad(bool on) const;

  bool has_grad() const;
  std::span<const double> grad() const;
  /// Gradient buffer, allocated zero-filled on first access.
  std::span<double> grad_buffer() const;
  void zero_grad() const;
  /// Drops the gradient buffer entirely (has_grad() becomes false).
  void clear_grad() const;

  /// Deep copy of the values. The copy is a leaf with the same requires_grad flag.
  Tensor clone() const;
  /// Identity of the underlying storage.
  const void* id() const noexcept { return storage_.get(); }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> storage_;

  Storage& checked() const;
};

/// Ordered record of backward closures for one forward computation.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Replays recorded nodes in reverse order, seeding d(loss)/d(loss) = 1.
  /// A tape supports exactly one backward pass.
  void backward(const Tensor& loss);

  bool consumed() const noexcept { return consumed_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  void record(std::function<void()> node);

 private:
  std::vector<std::function<void()>> nodes_;
  bool consumed_ = false;
};

/// Makes `tape` the recording target of the current thread for its lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape() noexcept;

// ---------------------------------------------------------------------------
// Primitive operations.
// ---------------------------------------------------------------------------

/// a[m x k] * b[k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// a[m x k] * b[n x k]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// x[..., in] * weight[in x out] + bias[out]. Rank-1 x is treated as one row.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
/// x[..., n] + bias[n], broadcast over leading axes.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

/// Softmax over the trailing axis. When `valid` is non-empty it has one entry
/// per trailing-axis column; columns with valid[j] == 0 get probability 0.
Tensor softmax(const Tensor& x, std::span<const std::uint8_t> valid = {});
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Exact (erf-based) GELU.
Tensor gelu(const Tensor& x);
/// Normalizes each trailing-axis row, then applies gamma and beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-12);

/// Rows of table[vocab x d] selected by ids, giving [ids.size() x d].
Tensor embedding(const Tensor& table, std::span<const TokenId> ids);
/// Rows [0, count) of a rank-2 tensor.
Tensor take_rows(const Tensor& x, std::size_t count);
/// Inverted dropout. Identity when !train or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool train, std::mt19937_64& rng);

/// Columns [begin, end) of a rank-2 tensor.
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_cols(std::span<const Tensor> parts);
/// Row r of a rank-2 tensor as a rank-1 tensor.
Tensor row(const Tensor& x, std::size_t r);
/// Stacks equal-length rank-1 tensors into [n x d].
Tensor stack_rows(std::span<const Tensor> rows);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Probabilities are clamped into [kProbClamp, 1 - kProbClamp] before taking logs.
inline constexpr double kProbClamp = 1e-12;

/// (1/B) * sum_i sum_c -[y log p + (1 - y) log(1 - p)] for probs[B x M] and
/// targets[B x M] (row-major, values in {0, 1}). Clamped entries pass no gradient.
Tensor binary_cross_entropy(const Tensor& probs, std::span<const double> targets);

}  // namespace pclft
