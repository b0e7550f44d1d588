#include <gtest/gtest.h>

#include <cmath>

#include "dcam/error.hpp"
#include "dcam/nn/grad_check.hpp"
#include "dcam/nn/ops.hpp"
#include "dcam/nn/optim.hpp"
#include "dcam/rng.hpp"

namespace dcam::nn {
namespace {

using TD = Tensor<double>;

TD random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0, bool rg = true) {
  Rng rng(seed);
  std::vector<double> v(s.numel());
  for (double& x : v) x = rng.uniform(lo, hi);
  return TD(s, std::move(v), rg);
}

// Weighted sum so every output coordinate gets a distinct upstream gradient.
TD probe(const TD& y, std::uint64_t seed = 99) {
  return sum(mul(y, random_tensor(y.shape(), seed, -1, 1, false)));
}

void expect_grad_ok(const std::function<TD(const std::vector<TD>&)>& f, std::vector<TD> inputs) {
  const auto r = grad_check(f, std::move(inputs));
  EXPECT_TRUE(r.passed) << "max rel error " << r.max_rel_error << " at input " << r.worst_input << "["
                        << r.worst_index << "] analytic " << r.analytic << " numeric " << r.numeric;
  EXPECT_GT(r.coordinates, 0u);
}

TEST(Conv2d, IdentityKernelReproducesInput) {
  const TD x = random_tensor({1, 1, 5, 6}, 1, 0, 1, false);
  TD w({1, 1, 3, 3});
  w.data()[4] = 1.0;
  const TD y = conv2d(x, w, TD({1, 1, 1, 1}));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(y.data()[i], x.data()[i]);
}

TEST(Conv2d, OnesKernelCountsZeroPaddedSupport) {
  TD x({1, 1, 4, 4}, std::vector<double>(16, 2.0));
  TD w({1, 1, 3, 3}, std::vector<double>(9, 1.0));
  TD b({1, 1, 1, 1}, std::vector<double>{0.5});
  const TD y = conv2d(x, w, b);
  EXPECT_DOUBLE_EQ(y.data()[0], 4 * 2.0 + 0.5);       // corner
  EXPECT_DOUBLE_EQ(y.data()[1], 6 * 2.0 + 0.5);       // edge
  EXPECT_DOUBLE_EQ(y.data()[5], 9 * 2.0 + 0.5);       // interior
}

TEST(Conv2d, OneByOneMixesChannels) {
  TD x({1, 2, 1, 2}, {1, 2, 3, 4});
  TD w({1, 2, 1, 1}, {10, 100});
  const TD y = conv2d(x, w, TD({1, 1, 1, 1}));
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 2}));
  EXPECT_DOUBLE_EQ(y.data()[0], 310);
  EXPECT_DOUBLE_EQ(y.data()[1], 420);
}

TEST(Conv2d, ShapeErrors) {
  const TD x = random_tensor({1, 2, 4, 4}, 1);
  EXPECT_THROW(conv2d(x, TD({3, 1, 3, 3}), TD({3, 1, 1, 1})), ShapeError);
  EXPECT_THROW(conv2d(x, TD({3, 2, 5, 5}), TD({3, 1, 1, 1})), ShapeError);
  EXPECT_THROW(conv2d(x, TD({3, 2, 3, 3}), TD({2, 1, 1, 1})), ShapeError);
}

TEST(Conv2d, GradCheck3x3And1x1) {
  expect_grad_ok([](const std::vector<TD>& in) { return probe(conv2d(in[0], in[1], in[2])); },
                 {random_tensor({2, 3, 5, 4}, 1), random_tensor({2, 3, 3, 3}, 2), random_tensor({2, 1, 1, 1}, 3)});
  expect_grad_ok([](const std::vector<TD>& in) { return probe(conv2d(in[0], in[1], in[2])); },
                 {random_tensor({2, 4, 3, 3}, 4), random_tensor({3, 4, 1, 1}, 5), random_tensor({3, 1, 1, 1}, 6)});
}

TEST(Pool, MaxAndAverageValues) {
  TD x({1, 1, 2, 2}, {1, 2, 3, 4}, true);
  EXPECT_DOUBLE_EQ(pool2(x, PoolKind::Max).item(), 4);
  EXPECT_DOUBLE_EQ(pool2(x, PoolKind::Avg).item(), 2.5);
  EXPECT_THROW(pool2(TD({1, 1, 3, 4}), PoolKind::Max), ShapeError);
}

TEST(Pool, MaxRoutesGradientToFirstMaximum) {
  TD x({1, 1, 2, 2}, {5, 5, 1, 5}, true);
  sum(pool2(x, PoolKind::Max)).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{1, 0, 0, 0}));
}

TEST(Pool, GradCheck) {
  // Distinct values keep the max away from ties under perturbation.
  std::vector<double> v(2 * 3 * 4 * 6);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(1.7 * static_cast<double>(i)) + 0.01 * static_cast<double>(i);
  for (auto kind : {PoolKind::Max, PoolKind::Avg}) {
    expect_grad_ok([kind](const std::vector<TD>& in) { return probe(pool2(in[0], kind)); },
                   {TD({2, 3, 4, 6}, v, true)});
  }
}

TEST(Upsample, NearestNeighbourAndGradient) {
  TD x({1, 1, 1, 2}, {3, 7}, true);
  const TD y = upsample2(x);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 4}));
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{3, 3, 7, 7, 3, 3, 7, 7}));
  sum(y).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 4);
  expect_grad_ok([](const std::vector<TD>& in) { return probe(upsample2(in[0])); }, {random_tensor({2, 2, 3, 2}, 8)});
}

TEST(Activation, Values) {
  TD x({1, 1, 1, 3}, {-1.0, 0.0, 2.0});
  const TD l = activation(x, {ActivationKind::LeakyReLU, 0.2});
  EXPECT_DOUBLE_EQ(l.data()[0], -0.2);
  EXPECT_DOUBLE_EQ(l.data()[2], 2.0);
  const TD s = activation(x, {ActivationKind::Sigmoid});
  EXPECT_DOUBLE_EQ(s.data()[1], 0.5);
  EXPECT_NEAR(s.data()[2], 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  const TD t = activation(x, {ActivationKind::Tanh});
  EXPECT_NEAR(t.data()[0], std::tanh(-1.0), 1e-15);
}

TEST(Activation, GradCheck) {
  for (auto kind : {ActivationKind::LeakyReLU, ActivationKind::Tanh, ActivationKind::Sigmoid}) {
    // Keep LeakyReLU inputs away from the kink at 0.
    std::vector<double> v(2 * 2 * 3 * 3);
    Rng rng(static_cast<std::uint64_t>(kind) + 10);
    for (double& e : v) e = (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.05, 1.5);
    expect_grad_ok([kind](const std::vector<TD>& in) { return probe(activation(in[0], {kind, 0.2})); },
                   {TD({2, 2, 3, 3}, v, true)});
  }
}

TEST(ConcatSlice, ValuesShapesAndGradients) {
  TD a({1, 1, 1, 2}, {1, 2}, true);
  TD b({1, 2, 1, 2}, {3, 4, 5, 6}, true);
  const TD c = concat_channels(a, b);
  EXPECT_EQ(c.shape(), (Shape{1, 3, 1, 2}));
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()), (std::vector<double>{1, 2, 3, 4, 5, 6}));
  const TD s = slice_channels(c, 1, 2);
  EXPECT_EQ(std::vector<double>(s.data().begin(), s.data().end()), (std::vector<double>{3, 4, 5, 6}));
  EXPECT_THROW(slice_channels(c, 2, 2), ShapeError);
  EXPECT_THROW(concat_channels(a, TD({1, 1, 2, 2})), ShapeError);
  expect_grad_ok([](const std::vector<TD>& in) { return probe(slice_channels(concat_channels(in[0], in[1]), 1, 3)); },
                 {random_tensor({2, 2, 2, 3}, 1), random_tensor({2, 3, 2, 3}, 2)});
}

TEST(BatchNorm, TrainNormalizesAndUpdatesRunningStats) {
  BatchNormState<double> st(1, {0.9, 1e-12});
  TD x({2, 1, 1, 2}, {1, 2, 3, 4});
  const TD y = batch_norm(x, st);
  double m = 0, v = 0;
  for (double e : y.data()) m += e;
  for (double e : y.data()) v += e * e;
  EXPECT_NEAR(m / 4, 0.0, 1e-12);
  EXPECT_NEAR(v / 4, 1.0, 1e-9);
  // Running stats: momentum-weighted with the unbiased batch variance.
  EXPECT_NEAR(st.running_mean[0], 0.9 * 0.0 + 0.1 * 2.5, 1e-12);
  EXPECT_NEAR(st.running_var[0], 0.9 * 1.0 + 0.1 * (5.0 / 3.0), 1e-12);
}

TEST(BatchNorm, EvalUsesRunningStats) {
  BatchNormState<double> st(1, {0.99, 1e-12});
  st.mode = Mode::Eval;
  st.running_mean = {1.0};
  st.running_var = {4.0};
  st.gamma.data()[0] = 3.0;
  st.beta.data()[0] = 0.5;
  const TD y = batch_norm(TD({1, 1, 1, 1}, std::vector<double>{5.0}), st);
  EXPECT_NEAR(y.item(), 3.0 * (5.0 - 1.0) / 2.0 + 0.5, 1e-9);
  EXPECT_THROW(batch_norm(TD({1, 2, 1, 1}), st), ShapeError);
}

TEST(BatchNorm, GradCheckTrainAndEval) {
  for (Mode mode : {Mode::Train, Mode::Eval}) {
    auto f = [mode](const std::vector<TD>& in) {
      BatchNormState<double> st(3, {0.9, 1e-3});
      st.mode = mode;
      st.running_mean = {0.1, -0.2, 0.3};
      st.running_var = {0.5, 1.5, 2.0};
      st.gamma = in[1];
      st.beta = in[2];
      return probe(batch_norm(in[0], st));
    };
    expect_grad_ok(f, {random_tensor({2, 3, 3, 2}, 31), random_tensor({1, 3, 1, 1}, 32, 0.5, 1.5),
                       random_tensor({1, 3, 1, 1}, 33)});
  }
}

TEST(Elementwise, ValuesAndGradients) {
  TD a({1, 1, 1, 2}, {3, -2});
  TD b({1, 1, 1, 2}, {0.5, 4});
  EXPECT_DOUBLE_EQ(add(a, b).data()[1], 2);
  EXPECT_DOUBLE_EQ(sub(a, b).data()[0], 2.5);
  EXPECT_DOUBLE_EQ(mul(a, b).data()[1], -8);
  EXPECT_DOUBLE_EQ(scale(a, 2.0).data()[0], 6);
  EXPECT_DOUBLE_EQ(square(a).data()[1], 4);
  EXPECT_DOUBLE_EQ(abs(a).data()[1], 2);
  EXPECT_DOUBLE_EQ(sum(a).item(), 1);
  EXPECT_DOUBLE_EQ(mean(a).item(), 0.5);
  EXPECT_THROW(add(a, TD({1, 1, 2, 1})), ShapeError);

  expect_grad_ok(
      [](const std::vector<TD>& in) {
        return mean(add(mul(square(in[0]), in[1]), scale(sub(abs(in[0]), in[1]), 0.3)));
      },
      {random_tensor({2, 2, 2, 2}, 41, 0.1, 1.0), random_tensor({2, 2, 2, 2}, 42)});
  expect_grad_ok(
      [](const std::vector<TD>& in) {
        return sum(map_unary<double>(
            in[0], [](double v) { return std::sin(v); }, [](double v) { return std::cos(v); }, "sin"));
      },
      {random_tensor({1, 2, 2, 2}, 43)});
}

TEST(Autodiff, GradientsAccumulateAcrossBackwardCalls) {
  TD x({1, 1, 1, 2}, {1, 2}, true);
  sum(scale(x, 3.0)).backward();
  sum(scale(x, 3.0)).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
  x.zero_grad();
  EXPECT_DOUBLE_EQ(x.grad()[1], 0.0);
}

TEST(Autodiff, SharedSubexpressionSumsContributions) {
  TD x({1, 1, 1, 1}, {2.0}, true);
  const TD y = mul(x, x);
  sum(add(y, y)).backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 8.0);
}

TEST(Autodiff, NoGradGuardAndDetachBuildNoGraph) {
  TD x({1, 1, 1, 1}, {2.0}, true);
  {
    NoGradGuard guard;
    EXPECT_FALSE(square(x).requires_grad());
  }
  EXPECT_TRUE(square(x).requires_grad());
  EXPECT_FALSE(square(x.detach()).requires_grad());
  EXPECT_THROW(concat_channels(x, x).backward(), ShapeError);  // not a scalar
}

TEST(Autodiff, DeterministicAcrossRuns) {
  auto run = [] {
    TD x = random_tensor({2, 3, 4, 4}, 1);
    TD w = random_tensor({4, 3, 3, 3}, 2);
    TD b = random_tensor({4, 1, 1, 1}, 3);
    probe(pool2(activation(conv2d(x, w, b), {ActivationKind::Tanh}), PoolKind::Max)).backward();
    return std::vector<double>(w.grad().begin(), w.grad().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(GradCheck, DetectsACorruptedBackward) {
  auto broken = [](const std::vector<TD>& in) {
    // Forward is v^2, backward claims 3v.
    return sum(map_unary<double>(
        in[0], [](double v) { return v * v; }, [](double v) { return 3 * v; }, "broken"));
  };
  const auto r = grad_check(broken, {random_tensor({1, 1, 2, 2}, 5, 0.5, 1.0)});
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.max_rel_error, 1.0 / 3.0, 1e-4);
}

TEST(GradCheck, SumHasUnitGradient) {
  const auto r = grad_check([](const TD& x) { return sum(x); }, random_tensor({1, 2, 2, 2}, 3));
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.coordinates, 8u);
  EXPECT_THROW(grad_check([](const TD& x) { return square(x); }, random_tensor({1, 1, 1, 2}, 3)), ShapeError);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  TD p({1, 1, 1, 3}, {1, 2, 3}, true);
  AdamState<double> st;
  adam_step<double>({p}, st, 1e-3);
  EXPECT_EQ(std::vector<double>(p.data().begin(), p.data().end()), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  TD p({1, 1, 1, 2}, {1.0, -1.0}, true);
  p.grad_mut()[0] = 0.3;
  p.grad_mut()[1] = -5.0;
  AdamState<double> st;
  adam_step<double>({p}, st, 1e-3);
  // m_hat = g, v_hat = g^2: step = lr * g / (|g| + eps).
  EXPECT_NEAR(p.data()[0], 1.0 - 1e-3 * 0.3 / (0.3 + 1e-7), 1e-12);
  EXPECT_NEAR(p.data()[1], -1.0 + 1e-3 * 5.0 / (5.0 + 1e-7), 1e-12);
}

TEST(Adam, TwoStepsMatchHandComputation) {
  TD p({1, 1, 1, 1}, {0.0}, true);
  AdamState<double> st;
  const double g1 = 1.0, g2 = -2.0, lr = 0.01;
  p.grad_mut()[0] = g1;
  adam_step<double>({p}, st, lr);
  p.zero_grad();
  p.grad_mut()[0] = g2;
  adam_step<double>({p}, st, lr);
  double m = 0.1 * g1, v = 0.001 * g1 * g1;
  double x = -lr * (m / 0.1) / (std::sqrt(v / 0.001) + 1e-7);
  m = 0.9 * m + 0.1 * g2;
  v = 0.999 * v + 0.001 * g2 * g2;
  const double c1 = 1 - 0.81, c2 = 1 - 0.999 * 0.999;
  x -= lr * (m / c1) / (std::sqrt(v / c2) + 1e-7);
  EXPECT_NEAR(p.data()[0], x, 1e-9);
}

TEST(Adam, MismatchedStateRejected) {
  TD p({1, 1, 1, 2}, true);
  AdamState<double> st;
  st.m = {std::vector<double>(3)};
  st.v = {std::vector<double>(3)};
  EXPECT_THROW(adam_step<double>({p}, st, 1e-3), ShapeError);
}

TEST(Plateau, HalvesAfterPatienceAndFloors) {
  PlateauSchedule s(1e-3, 1e-6, 100, 0.5);
  std::vector<double> lr;
  for (int e = 1; e <= 300; ++e) lr.push_back(s.step(1.0));
  // lr returned after epoch e applies from epoch e+1.
  EXPECT_DOUBLE_EQ(lr[99], 1e-3);
  EXPECT_DOUBLE_EQ(lr[100], 5e-4);
  EXPECT_DOUBLE_EQ(lr[199], 5e-4);
  EXPECT_DOUBLE_EQ(lr[200], 2.5e-4);
  PlateauSchedule f(1e-3, 4e-4, 1, 0.5);
  for (int e = 0; e < 20; ++e) f.step(1.0);
  EXPECT_DOUBLE_EQ(f.lr(), 4e-4);
}

TEST(Plateau, ImprovementResetsCounter) {
  PlateauSchedule s(1e-3, 1e-6, 3, 0.5);
  s.step(1.0);
  s.step(1.0);
  s.step(1.0);
  EXPECT_EQ(s.epochs_since_improvement(), 2);
  s.step(0.5);
  EXPECT_EQ(s.epochs_since_improvement(), 0);
  EXPECT_DOUBLE_EQ(s.best(), 0.5);
  EXPECT_DOUBLE_EQ(s.lr(), 1e-3);
  EXPECT_THROW(PlateauSchedule(1e-6, 1e-3, 3, 0.5), InvalidArgumentError);
}

}  // namespace
}  // namespace dcam::nn
