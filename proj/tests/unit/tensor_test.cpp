// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gradcheck.hpp"
#include "pclft/error.hpp"
#include "pclft/tensor.hpp"

namespace pclft {
namespace {

using testing::gradcheck;

Tensor random(Shape shape, std::uint64_t seed, double stddev = 1.0) {
  std::mt19937_64 rng(seed);
  return Tensor::randn(std::move(shape), stddev, rng, true);
}

std::vector<double> to_vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

TEST(Tensor, FactoriesAndShapes) {
  const Tensor z = Tensor::zeros({2, 3});
  EXPECT_EQ(z.numel(), 6u);
  EXPECT_EQ(z.last_dim(), 3u);
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor().shape(), ContractError);
  EXPECT_THROW(Tensor::zeros({2}).item(), ContractError);
  EXPECT_EQ(Tensor::scalar(4.0).item(), 4.0);
}

TEST(Tensor, HandlesShareStorageAndCloneDoesNot) {
  const Tensor a = Tensor::from({2}, {1, 2});
  const Tensor alias = a;
  const Tensor copy = a.clone();
  a.mutable_values()[0] = 9;
  EXPECT_EQ(alias[0], 9);
  EXPECT_EQ(copy[0], 1);
}

TEST(Matmul, Examples) {
  const Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  const Tensor b = Tensor::from({2, 2}, {3, 4, 5, 6});
  EXPECT_EQ(to_vec(matmul(eye, b)), to_vec(b));
  EXPECT_EQ(matmul(Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 1}, {3, 4})).item(), 11.0);
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  const Tensor a = random({3, 4}, 1), b = random({4, 2}, 2);
  const auto r = gradcheck({{"a", a}, {"b", b}}, [&] { return sum(matmul(a, b)); });
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
}

TEST(Softmax, Examples) {
  EXPECT_EQ(to_vec(softmax(Tensor::from({2}, {0, 0}))), (std::vector<double>{0.5, 0.5}));
  const Tensor big = softmax(Tensor::from({3}, {1000, 1000, 1000}));
  for (double p : big.values()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MatchesExtendedPrecisionOracle) {
  const Tensor p = softmax(Tensor::from({3}, {1, 2, 3}));
  long double z = 0;
  for (int i = 1; i <= 3; ++i) z += std::exp(static_cast<long double>(i));
  for (int i = 1; i <= 3; ++i) {
    const long double expected = std::exp(static_cast<long double>(i)) / z;
    EXPECT_LT(std::abs(static_cast<long double>(p[static_cast<std::size_t>(i - 1)]) - expected),
              1e-12L);
  }
}

TEST(Softmax, MaskedColumnsGetExactZero) {
  const std::vector<std::uint8_t> valid = {1, 1, 0};
  const Tensor p = softmax(Tensor::from({2, 3}, {1, 2, 50, -1, 0, 3}), valid);
  EXPECT_EQ(p[2], 0.0);
  EXPECT_EQ(p[5], 0.0);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
  const std::vector<std::uint8_t> none = {0, 0, 0};
  EXPECT_THROW(softmax(Tensor::zeros({3}), none), ContractError);
}

TEST(Softmax, RejectsNonFiniteInput) {
  EXPECT_THROW(softmax(Tensor::from({2}, {std::nan(""), 0})), DomainError);
  EXPECT_THROW(softmax(Tensor::from({2}, {std::numeric_limits<double>::infinity(), 0})),
               DomainError);
}

TEST(Sigmoid, StableAtTheBoundary) {
  EXPECT_EQ(sigmoid(Tensor::scalar(0)).item(), 0.5);
  const double tiny = sigmoid(Tensor::scalar(-710)).item();
  EXPECT_GT(tiny, 0.0);
  EXPECT_LE(tiny, 1e-300);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0, 20);
  for (int i = 0; i < 100; ++i) {
    const double x = d(rng);
    EXPECT_NEAR(sigmoid(Tensor::scalar(x)).item() + sigmoid(Tensor::scalar(-x)).item(), 1.0,
                1e-12);
  }
}

TEST(LayerNorm, RowsAreStandardized) {
  const Tensor x = random({4, 16}, 5, 3.0);
  const Tensor y = layer_norm(x, Tensor::full({16}, 1.0), Tensor::zeros({16}));
  for (std::size_t r = 0; r < 4; ++r) {
    double m = 0, v = 0;
    for (std::size_t c = 0; c < 16; ++c) m += y[r * 16 + c];
    m /= 16;
    for (std::size_t c = 0; c < 16; ++c) v += (y[r * 16 + c] - m) * (y[r * 16 + c] - m);
    EXPECT_LT(std::abs(m), 1e-10);
    EXPECT_NEAR(v / 16, 1.0, 1e-6);
  }
}

TEST(Dropout, EvalIsIdentityAndTrainIsInverted) {
  std::mt19937_64 rng(9);
  const Tensor x = random({1000}, 6);
  const Tensor eval = dropout(x, 0.4, false, rng);
  EXPECT_EQ(eval.id(), x.id());
  const Tensor train = dropout(x, 0.4, true, rng);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (train[i] != 0.0) {
      ++kept;
      EXPECT_DOUBLE_EQ(train[i], x[i] / 0.6);
    }
  }
  EXPECT_NEAR(static_cast<double>(kept) / 1000.0, 0.6, 0.06);
  EXPECT_THROW(dropout(x, 1.0, true, rng), ConfigError);
}

TEST(Embedding, GathersRowsAndChecksIds) {
  const Tensor table = Tensor::from({3, 2}, {0, 1, 2, 3, 4, 5});
  const std::vector<TokenId> ids = {2, 0, 2};
  EXPECT_EQ(to_vec(embedding(table, ids)), (std::vector<double>{4, 5, 0, 1, 4, 5}));
  const std::vector<TokenId> bad = {3};
  EXPECT_THROW(embedding(table, bad), IndexError);
}

TEST(Backward, AnalyticExamples) {
  const Tensor w = Tensor::from({3}, {1, -2, 3}, true);
  {
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      loss = sum(w);
    }
    tape.backward(loss);
    EXPECT_EQ(std::vector<double>(w.grad().begin(), w.grad().end()),
              (std::vector<double>{1, 1, 1}));
  }
  w.clear_grad();
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(mul(w, w));
  }
  tape.backward(loss);
  EXPECT_EQ(std::vector<double>(w.grad().begin(), w.grad().end()),
            (std::vector<double>{2, -4, 6}));
}

TEST(Backward, TapeIsSingleUse) {
  const Tensor w = Tensor::from({2}, {1, 2}, true);
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(w);
  }
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), TapeReuseError);
  EXPECT_THROW(tape.record([] {}), TapeReuseError);
}

TEST(Backward, NoTapeMeansNoRecording) {
  const Tensor w = Tensor::from({2}, {1, 2}, true);
  EXPECT_EQ(active_tape(), nullptr);
  Tape tape;
  {
    TapeScope scope(tape);
    (void)sum(Tensor::from({2}, {1, 2}));
  }
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_THROW(tape.backward(Tensor::zeros({2})), ContractError);
}

// Each primitive against central differences. Inputs are kept away from
// non-differentiable points.
class PrimitiveGradients : public ::testing::Test {
 protected:
  static void expect_ok(const testing::GradCheckResult& r, double tol = 1e-6) {
    EXPECT_LT(r.max_rel_error, tol) << "worst entry " << r.worst;
    EXPECT_GT(r.entries, 0u);
  }
  // A fixed random projection turns any tensor into a scalar with
  // non-trivial upstream gradients.
  static Tensor project(const Tensor& y) {
    std::mt19937_64 rng(77);
    const Tensor w = Tensor::randn(y.shape(), 1.0, rng);
    return sum(mul(y, w));
  }
};

TEST_F(PrimitiveGradients, MatmulNtLinearAddBias) {
  const Tensor a = random({3, 4}, 11), b = random({2, 4}, 12);
  expect_ok(gradcheck({{"a", a}, {"b", b}}, [&] { return project(matmul_nt(a, b)); }));
  const Tensor x = random({3, 4}, 13), w = random({4, 5}, 14), bias = random({5}, 15);
  expect_ok(gradcheck({{"x", x}, {"w", w}, {"b", bias}},
                      [&] { return project(linear(x, w, bias)); }));
  const Tensor v = random({4}, 16);
  expect_ok(gradcheck({{"v", v}, {"w", w}, {"b", bias}},
                      [&] { return project(linear(v, w, bias)); }));
}

TEST_F(PrimitiveGradients, ElementwiseOps) {
  const Tensor a = random({2, 3}, 21), b = random({2, 3}, 22), c = random({3}, 23);
  expect_ok(gradcheck({{"a", a}, {"b", b}}, [&] { return project(add(a, b)); }));
  expect_ok(gradcheck({{"a", a}, {"b", b}}, [&] { return project(mul(a, b)); }));
  expect_ok(gradcheck({{"a", a}, {"c", c}}, [&] { return project(add_bias(a, c)); }));
  expect_ok(gradcheck({{"a", a}}, [&] { return project(scale(a, -2.5)); }));
  expect_ok(gradcheck({{"a", a}}, [&] { return project(sigmoid(a)); }));
  expect_ok(gradcheck({{"a", a}}, [&] { return project(tanh(a)); }));
  expect_ok(gradcheck({{"a", a}}, [&] { return mean(a); }));
}

TEST_F(PrimitiveGradients, GeluOnSixteenPoints) {
  const Tensor x = random({16}, 31, 2.0);
  expect_ok(gradcheck({{"x", x}}, [&] { return project(gelu(x)); }));
}

TEST_F(PrimitiveGradients, SoftmaxPlainAndMasked) {
  const Tensor x = random({3, 5}, 41);
  expect_ok(gradcheck({{"x", x}}, [&] { return project(softmax(x)); }));
  const std::vector<std::uint8_t> valid = {1, 1, 1, 0, 0};
  expect_ok(gradcheck({{"x", x}}, [&] { return project(softmax(x, valid)); }));
}

TEST_F(PrimitiveGradients, LayerNorm) {
  const Tensor x = random({3, 6}, 51), g = random({6}, 52), b = random({6}, 53);
  expect_ok(gradcheck({{"x", x}, {"gamma", g}, {"beta", b}},
                      [&] { return project(layer_norm(x, g, b)); }));
}

TEST_F(PrimitiveGradients, EmbeddingAndLayoutOps) {
  const Tensor table = random({5, 3}, 61);
  const std::vector<TokenId> ids = {4, 1, 4, 0};
  expect_ok(gradcheck({{"table", table}}, [&] { return project(embedding(table, ids)); }));
  const Tensor x = random({4, 6}, 62);
  expect_ok(gradcheck({{"x", x}}, [&] { return project(take_rows(x, 2)); }));
  expect_ok(gradcheck({{"x", x}}, [&] { return project(slice_cols(x, 1, 4)); }));
  expect_ok(gradcheck({{"x", x}}, [&] { return project(row(x, 2)); }));
  expect_ok(gradcheck({{"x", x}}, [&] { return project(reshape(x, {6, 4})); }));
  const Tensor y = random({4, 2}, 63);
  expect_ok(gradcheck({{"x", x}, {"y", y}}, [&] {
    const Tensor parts[] = {x, y};
    return project(concat_cols(parts));
  }));
  const Tensor r0 = random({3}, 64), r1 = random({3}, 65);
  expect_ok(gradcheck({{"r0", r0}, {"r1", r1}}, [&] {
    const Tensor rows[] = {r0, r1};
    return project(stack_rows(rows));
  }));
}

TEST_F(PrimitiveGradients, DropoutWithFixedMask) {
  const Tensor x = random({20}, 71);
  expect_ok(gradcheck({{"x", x}}, [&] {
    std::mt19937_64 rng(5);
    return project(dropout(x, 0.4, true, rng));
  }));
}

TEST_F(PrimitiveGradients, BinaryCrossEntropy) {
  const Tensor p = Tensor::from({2, 2}, {0.8, 0.3, 0.6, 0.9}, true);
  const std::vector<double> y = {1, 0, 0, 1};
  expect_ok(gradcheck({{"p", p}}, [&] { return binary_cross_entropy(p, y); }));
  const double oracle =
      0.5 * ((-std::log(0.8) - std::log(0.7)) + (-std::log(0.4) - std::log(0.9)));
  EXPECT_NEAR(binary_cross_entropy(p, y).item(), oracle, 1e-15);
}

}  // namespace
}  // namespace pclft
