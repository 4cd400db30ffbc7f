// Copyright 2026 The aisam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "autodiff/grad_check.hpp"
#include "autodiff/ops.hpp"
#include "support.hpp"

namespace ad = aisam::ad;
using ad::Tensor;
using aisam::testing::random_tensor;
using aisam::testing::values_of;

namespace {

void expect_values(const Tensor& t, const std::vector<double>& want, double tol = 1e-12) {
  ASSERT_EQ(t.numel(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(t.at(i), want[i], tol) << "index " << i;
}

}  // namespace

TEST(Matmul, Identity) {
  auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  auto b = Tensor::from({2, 2}, {5, 6, 7, 8});
  expect_values(ad::matmul(eye, b), {5, 6, 7, 8});
}

TEST(Matmul, HandProduct) {
  auto a = Tensor::from({2, 2}, {1, 2, 3, 4});
  auto b = Tensor::from({2, 2}, {5, 6, 7, 8});
  auto c = ad::matmul(a, b);
  EXPECT_EQ(c.shape(), (ad::Shape{2, 2}));
  expect_values(c, {19, 22, 43, 50});
}

TEST(Matmul, ZeroRow) {
  auto a = Tensor::zeros({1, 3});
  auto b = random_tensor({3, 2}, 4);
  expect_values(ad::matmul(a, b), {0, 0});
}

TEST(Matmul, InnerMismatchThrows) {
  EXPECT_THROW(ad::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ad::ShapeError);
}

TEST(Matmul, TransposedVariantAgrees) {
  auto a = random_tensor({3, 4}, 1);
  auto b = random_tensor({5, 4}, 2);
  expect_values(ad::matmul_bt(a, b), values_of(ad::matmul(a, ad::transpose(b))), 1e-14);
}

TEST(Softmax, Symmetric) { expect_values(ad::softmax_lastdim(Tensor::from({2}, {0, 0})), {0.5, 0.5}); }

TEST(Softmax, LargeInputsDoNotOverflow) {
  expect_values(ad::softmax_lastdim(Tensor::from({3}, {1000, 1000, 1000})), {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

TEST(Softmax, LogThree) {
  expect_values(ad::softmax_lastdim(Tensor::from({2}, {0, std::log(3.0)})), {0.25, 0.75}, 1e-15);
}

TEST(Softmax, RowsSumToOneAndIgnoreShift) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto x = random_tensor({4, 7}, seed, -20, 20);
    auto y = ad::softmax_lastdim(x);
    auto shifted = values_of(x);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 7; ++c) shifted[r * 7 + c] += 3.5 * static_cast<double>(r) - 11;
    auto y2 = ad::softmax_lastdim(Tensor::from({4, 7}, shifted));
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 7; ++c) {
        EXPECT_GE(y.at(r * 7 + c), 0.0);
        s += y.at(r * 7 + c);
        EXPECT_NEAR(y.at(r * 7 + c), y2.at(r * 7 + c), 1e-12);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Conv2d, IdentityKernel) {
  auto x = random_tensor({1, 4, 5}, 3);
  std::vector<double> k(9, 0.0);
  k[4] = 1.0;
  auto y = ad::conv2d_3x3(x, Tensor::from({1, 1, 3, 3}, k), Tensor::zeros({1}));
  expect_values(y, values_of(x));
}

TEST(Conv2d, OnesKernelCountsNeighbours) {
  auto y = ad::conv2d_3x3(Tensor::filled({1, 3, 3}, 1.0), Tensor::filled({1, 1, 3, 3}, 1.0), Tensor::zeros({1}));
  EXPECT_DOUBLE_EQ(y.at(4), 9.0);
  EXPECT_DOUBLE_EQ(y.at(0), 4.0);
  EXPECT_DOUBLE_EQ(y.at(8), 4.0);
  EXPECT_DOUBLE_EQ(y.at(1), 6.0);
}

TEST(Conv2d, ZeroKernelGivesBias) {
  auto y = ad::conv2d_3x3(random_tensor({2, 3, 3}, 5), Tensor::zeros({3, 2, 3, 3}), Tensor::from({3}, {1.5, -2, 0.25}));
  EXPECT_EQ(y.shape(), (ad::Shape{3, 3, 3}));
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_DOUBLE_EQ(y.at(i), 1.5);
    EXPECT_DOUBLE_EQ(y.at(9 + i), -2.0);
    EXPECT_DOUBLE_EQ(y.at(18 + i), 0.25);
  }
}

TEST(Conv2d, ChannelMismatchThrows) {
  EXPECT_THROW(ad::conv2d_3x3(Tensor::zeros({2, 3, 3}), Tensor::zeros({1, 3, 3, 3}), Tensor::zeros({1})),
               ad::ShapeError);
}

TEST(Conv2d, MatchesDirectLoop) {
  const std::size_t C = 2, O = 3, H = 4, W = 5;
  auto x = random_tensor({C, H, W}, 11);
  auto k = random_tensor({O, C, 3, 3}, 12);
  auto b = random_tensor({O}, 13);
  auto y = ad::conv2d_3x3(x, k, b);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) {
        double s = b.at(o);
        for (std::size_t i = 0; i < C; ++i)
          for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
              const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
              if (rr < 0 || cc < 0 || rr >= static_cast<long>(H) || cc >= static_cast<long>(W)) continue;
              s += x.at((i * H + rr) * W + cc) * k.at(((o * C + i) * 3 + (dr + 1)) * 3 + (dc + 1));
            }
        EXPECT_NEAR(y.at((o * H + r) * W + c), s, 1e-12);
      }
}

TEST(Backward, SquareGradient) {
  auto x = Tensor::from({1}, {3}, true);
  ad::Graph g;
  g.backward(ad::reduce_sum(ad::mul(x, x)));
  ASSERT_EQ(x.grad().size(), 1u);
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, SoftmaxSumHasZeroGradient) {
  auto x = random_tensor({5}, 9, -3, 3);
  ad::Graph g;
  g.backward(ad::reduce_sum(ad::softmax_lastdim(x)));
  for (double v : x.grad()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Backward, TwiceDoublesExactly) {
  auto a = random_tensor({3, 4}, 21);
  auto b = random_tensor({4, 2}, 22);
  ad::Graph g;
  auto loss = ad::reduce_sum(ad::sigmoid(ad::matmul(a, b)));
  g.backward(loss);
  const auto ga = values_of(Tensor::from({12}, {a.grad().begin(), a.grad().end()}));
  const auto gb = values_of(Tensor::from({8}, {b.grad().begin(), b.grad().end()}));
  g.backward(loss);
  for (std::size_t i = 0; i < ga.size(); ++i) EXPECT_EQ(a.grad()[i], 2 * ga[i]);
  for (std::size_t i = 0; i < gb.size(); ++i) EXPECT_EQ(b.grad()[i], 2 * gb[i]);
}

TEST(Backward, NonScalarLossThrows) {
  auto x = random_tensor({3}, 1);
  ad::Graph g;
  EXPECT_THROW(g.backward(ad::mul(x, x)), ad::ShapeError);
}

TEST(Backward, NoGraphMeansNoTape) {
  auto x = random_tensor({3}, 1);
  auto y = ad::reduce_sum(ad::mul(x, x));
  EXPECT_FALSE(y.requires_grad());
  ad::Graph g;
  {
    ad::NoGradGuard off;
    EXPECT_FALSE(ad::exp(x).requires_grad());
  }
  EXPECT_TRUE(ad::exp(x).requires_grad());
}

TEST(Ops, NonFiniteIsAnError) {
  EXPECT_THROW(ad::log(Tensor::from({2}, {1.0, -1.0})), ad::NonFiniteError);
  EXPECT_THROW(ad::exp(Tensor::from({1}, {1e5})), ad::NonFiniteError);
}

TEST(Ops, Deterministic) {
  auto x = random_tensor({6, 8}, 77);
  auto g = Tensor::filled({8}, 1.0), b = Tensor::zeros({8});
  auto run = [&] { return values_of(ad::softmax_lastdim(ad::gelu(ad::layer_norm(x, g, b)))); };
  EXPECT_EQ(run(), run());
}

TEST(Ops, Elementwise) {
  auto a = Tensor::from({3}, {1, -2, 0.5});
  auto b = Tensor::from({3}, {4, 0.5, -1});
  expect_values(ad::add(a, b), {5, -1.5, -0.5});
  expect_values(ad::sub(a, b), {-3, -2.5, 1.5});
  expect_values(ad::mul(a, b), {4, -1, -0.5});
  expect_values(ad::div(a, b), {0.25, -4, -0.5});
  expect_values(ad::relu(a), {1, 0, 0.5});
  expect_values(ad::scale(a, 2), {2, -4, 1});
  expect_values(ad::add_scalar(a, 1), {2, -1, 1.5});
  expect_values(ad::sigmoid(Tensor::zeros({1})), {0.5});
  expect_values(ad::exp(Tensor::zeros({1})), {1});
  expect_values(ad::log(Tensor::from({1}, {std::exp(2.0)})), {2}, 1e-15);
  expect_values(ad::sqrt(Tensor::from({1}, {9})), {3});
}

TEST(Ops, GeluTanhForm) {
  for (double x : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    const double want = 0.5 * x * (1 + std::tanh(std::sqrt(2 / M_PI) * (x + 0.044715 * x * x * x)));
    EXPECT_NEAR(ad::gelu(Tensor::from({1}, {x})).item(), want, 1e-15);
  }
}

TEST(Ops, LayerNormUnitGain) {
  auto y = ad::layer_norm(Tensor::from({1, 4}, {1, 2, 3, 4}), Tensor::filled({4}, 1.0), Tensor::zeros({4}));
  double mean = 0, var = 0;
  for (double v : y.data()) mean += v / 4;
  for (double v : y.data()) var += (v - mean) * (v - mean) / 4;
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var, 1.25 / (1.25 + 1e-5), 1e-12);
}

TEST(Ops, Reductions) {
  auto x = Tensor::from({2, 3}, {1, 5, -2, 0, 3, 4});
  EXPECT_DOUBLE_EQ(ad::reduce_sum(x).item(), 11);
  EXPECT_DOUBLE_EQ(ad::reduce_mean(x).item(), 11.0 / 6);
  EXPECT_DOUBLE_EQ(ad::reduce_max(x).item(), 5);
  expect_values(ad::sum_lastdim(x), {4, 7});
}

TEST(Ops, ShapeOps) {
  auto x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  expect_values(ad::transpose(x), {1, 4, 2, 5, 3, 6});
  EXPECT_EQ(ad::reshape(x, {3, 2}).shape(), (ad::Shape{3, 2}));
  EXPECT_THROW(ad::reshape(x, {4, 2}), ad::ShapeError);
  expect_values(ad::slice_rows(x, 1, 2), {4, 5, 6});
  expect_values(ad::slice_cols(x, 1, 3), {2, 3, 5, 6});
  expect_values(ad::gather_rows(x, {1, 1, 0}), {4, 5, 6, 4, 5, 6, 1, 2, 3});
  expect_values(ad::concat_rows({x, ad::slice_rows(x, 0, 1)}), {1, 2, 3, 4, 5, 6, 1, 2, 3});
  expect_values(ad::concat_cols({x, ad::slice_cols(x, 2, 3)}), {1, 2, 3, 3, 4, 5, 6, 6});
  expect_values(ad::add_bias(x, Tensor::from({3}, {10, 20, 30})), {11, 22, 33, 14, 25, 36});
}

TEST(GradCheck, QuadraticIsExact) {
  auto f = [](const std::vector<Tensor>& in) { return ad::reduce_sum(ad::mul(in[0], in[0])); };
  auto r = ad::grad_check(f, {random_tensor({10}, 3)});
  EXPECT_LT(r.max_rel_error, 1e-8);
  EXPECT_EQ(r.coordinates, 10u);
}

TEST(GradCheck, WrongGradientIsCaught) {
  auto f = [](const std::vector<Tensor>& in) {
    auto y = ad::custom_unary(
        in[0], [](double x) { return x * x * x; }, [](double x, double) { return 2 * x * x; });
    return ad::reduce_sum(y);
  };
  EXPECT_GT(ad::grad_check(f, {random_tensor({6}, 8, 0.5, 1.5)}).max_rel_error, 1e-2);
}

TEST(GradCheck, NanIsAnError) {
  auto f = [](const std::vector<Tensor>& in) {
    auto y = ad::custom_unary(
        in[0], [](double x) { return x > 1.0 ? std::nan("") : x; }, [](double, double) { return 1.0; });
    return ad::reduce_sum(y);
  };
  EXPECT_THROW(ad::grad_check(f, {Tensor::from({1}, {1.0 - 1e-6}, true)}), ad::NonFiniteError);
}

TEST(GradCheck, RestoresInputs) {
  auto x = random_tensor({4}, 5);
  const auto before = values_of(x);
  auto f = [](const std::vector<Tensor>& in) { return ad::reduce_sum(ad::exp(in[0])); };
  ad::grad_check(f, {x});
  EXPECT_EQ(values_of(x), before);
}

TEST(GradCheck, DirectionsOfQuadratic) {
  auto f = [](const std::vector<Tensor>& in) { return ad::reduce_sum(ad::mul(in[0], in[0])); };
  auto x = random_tensor({3}, 3);
  auto r = ad::grad_check_directions(f, {x}, {{{1, 0, 0}}, {{0.6, 0.8, 0}}});
  EXPECT_EQ(r.coordinates, 2u);
  EXPECT_LT(r.max_rel_error, 1e-8);
}

// Every differentiable op against central differences on ten seeds.
struct OpCase {
  const char* name;
  std::vector<ad::Shape> shapes;
  std::function<Tensor(const std::vector<Tensor>&)> f;
  double lo = -1.0, hi = 1.0;
};

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const auto& c = GetParam();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<Tensor> inputs;
    for (std::size_t i = 0; i < c.shapes.size(); ++i) inputs.push_back(random_tensor(c.shapes[i], seed * 31 + i, c.lo, c.hi));
    // A random linear functional so every output coordinate matters.
    Tensor probe;
    auto f = [&](const std::vector<Tensor>& in) {
      auto y = c.f(in);
      if (!probe.defined()) probe = random_tensor(y.shape(), seed + 1000);
      return ad::reduce_sum(ad::mul(y, probe.detach()));
    };
    const auto r = ad::grad_check(f, inputs);
    EXPECT_LT(r.max_rel_error, 1e-5) << c.name << " seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllOps, OpGradient,
    ::testing::Values(
        OpCase{"add", {{3, 4}, {3, 4}}, [](auto& in) { return ad::add(in[0], in[1]); }},
        OpCase{"sub", {{3, 4}, {3, 4}}, [](auto& in) { return ad::sub(in[0], in[1]); }},
        OpCase{"mul", {{3, 4}, {3, 4}}, [](auto& in) { return ad::mul(in[0], in[1]); }},
        OpCase{"div", {{3, 4}, {3, 4}}, [](auto& in) { return ad::div(in[0], in[1]); }, 0.5, 2.0},
        OpCase{"scale", {{5}}, [](auto& in) { return ad::scale(in[0], -1.7); }},
        OpCase{"add_scalar", {{5}}, [](auto& in) { return ad::add_scalar(in[0], 0.3); }},
        OpCase{"relu", {{12}}, [](auto& in) { return ad::relu(in[0]); }, 0.05, 1.0},
        OpCase{"relu_neg", {{12}}, [](auto& in) { return ad::relu(in[0]); }, -1.0, -0.05},
        OpCase{"gelu", {{12}}, [](auto& in) { return ad::gelu(in[0]); }, -3, 3},
        OpCase{"sigmoid", {{12}}, [](auto& in) { return ad::sigmoid(in[0]); }, -4, 4},
        OpCase{"exp", {{12}}, [](auto& in) { return ad::exp(in[0]); }},
        OpCase{"log", {{12}}, [](auto& in) { return ad::log(in[0]); }, 0.2, 3},
        OpCase{"sqrt", {{12}}, [](auto& in) { return ad::sqrt(in[0]); }, 0.2, 3},
        OpCase{"add_bias", {{3, 4}, {4}}, [](auto& in) { return ad::add_bias(in[0], in[1]); }},
        OpCase{"matmul", {{3, 4}, {4, 2}}, [](auto& in) { return ad::matmul(in[0], in[1]); }},
        OpCase{"matmul_bt", {{3, 4}, {5, 4}}, [](auto& in) { return ad::matmul_bt(in[0], in[1]); }},
        OpCase{"transpose", {{3, 4}}, [](auto& in) { return ad::transpose(in[0]); }},
        OpCase{"reshape", {{3, 4}}, [](auto& in) { return ad::reshape(in[0], {2, 6}); }},
        OpCase{"slice_rows", {{5, 3}}, [](auto& in) { return ad::slice_rows(in[0], 1, 4); }},
        OpCase{"slice_cols", {{3, 5}}, [](auto& in) { return ad::slice_cols(in[0], 2, 5); }},
        OpCase{"gather_rows", {{4, 3}}, [](auto& in) { return ad::gather_rows(in[0], {3, 0, 3, 1}); }},
        OpCase{"concat_rows", {{2, 3}, {1, 3}}, [](auto& in) { return ad::concat_rows({in[0], in[1], in[0]}); }},
        OpCase{"concat_cols", {{2, 3}, {2, 1}}, [](auto& in) { return ad::concat_cols({in[1], in[0]}); }},
        OpCase{"softmax", {{3, 5}}, [](auto& in) { return ad::softmax_lastdim(in[0]); }, -3, 3},
        OpCase{"log_softmax", {{3, 5}}, [](auto& in) { return ad::log_softmax_lastdim(in[0]); }, -3, 3},
        OpCase{"layer_norm", {{3, 6}, {6}, {6}}, [](auto& in) { return ad::layer_norm(in[0], in[1], in[2]); }},
        OpCase{"normalize", {{3, 4}}, [](auto& in) { return ad::normalize_lastdim(in[0]); }, 0.1, 1.0},
        OpCase{"reduce_sum", {{7}}, [](auto& in) { return ad::reduce_sum(in[0]); }},
        OpCase{"reduce_mean", {{7}}, [](auto& in) { return ad::reduce_mean(in[0]); }},
        OpCase{"reduce_max", {{7}}, [](auto& in) { return ad::reduce_max(in[0]); }},
        OpCase{"sum_lastdim", {{3, 4}}, [](auto& in) { return ad::sum_lastdim(in[0]); }},
        OpCase{"conv2d", {{2, 4, 5}, {3, 2, 3, 3}, {3}},
               [](auto& in) { return ad::conv2d_3x3(in[0], in[1], in[2]); }},
        OpCase{"depthwise", {{3, 4, 4}, {3, 3, 3}, {3}},
               [](auto& in) { return ad::depthwise_conv3x3(in[0], in[1], in[2]); }},
        OpCase{"conv_transpose", {{2, 3, 3}, {2, 3, 2, 2}, {3}},
               [](auto& in) { return ad::conv_transpose2x2(in[0], in[1], in[2]); }},
        OpCase{"upsample", {{2, 3, 4}}, [](auto& in) { return ad::upsample_bilinear2x(in[0]); }}),
    [](const ::testing::TestParamInfo<OpCase>& info) { return std::string(info.param.name); });
