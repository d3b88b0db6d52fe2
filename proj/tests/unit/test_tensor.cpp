#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "footandball/autodiff.hpp"
#include "footandball/gradcheck.hpp"
#include "footandball/kernels.hpp"
#include "test_util.hpp"

using namespace fnb;
using fnb::test::project;
using fnb::test::random_tensor;

namespace {

Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const std::vector<double>& b) {
  const Shape s = x.shape();
  const int oc = w.shape().n, k = w.shape().h, r = k / 2;
  Tensor<double> y(Shape{s.n, oc, s.h, s.w});
  for (int n = 0; n < s.n; ++n)
    for (int o = 0; o < oc; ++o)
      for (int yy = 0; yy < s.h; ++yy)
        for (int xx = 0; xx < s.w; ++xx) {
          double acc = b[o];
          for (int c = 0; c < s.c; ++c)
            for (int dy = 0; dy < k; ++dy)
              for (int dx = 0; dx < k; ++dx) {
                const int iy = yy + dy - r, ix = xx + dx - r;
                if (iy < 0 || ix < 0 || iy >= s.h || ix >= s.w) continue;
                acc += w.at(o, c, dy, dx) * x.at(n, c, iy, ix);
              }
          y.at(n, o, yy, xx) = acc;
        }
  return y;
}

void expect_near_all(const Tensor<double>& a, const Tensor<double>& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_NEAR(a[i], b[i], tol) << "at " << i;
}

Shape random_shape(Rng& rng, int max_c = 3, int max_hw = 6, bool even = false) {
  Shape s{rng.range(1, 2), rng.range(1, max_c), rng.range(1, max_hw), rng.range(1, max_hw)};
  if (even) {
    s.h = 2 * rng.range(1, max_hw / 2);
    s.w = 2 * rng.range(1, max_hw / 2);
  }
  return s;
}

void expect_grad_ok(const GradCheckReport& r) {
  EXPECT_TRUE(r.passed) << r.worst << " (max rel " << r.max_rel_error << ")";
  EXPECT_GT(r.checked, 0u);
}

constexpr int kShapes = 20;

}  // namespace

TEST(Conv2d, MatchesNaiveLoopsForBothKernelSizes) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = trial % 2 ? 3 : 1;
    const Shape s{rng.range(1, 3), rng.range(1, 9), rng.range(1, 11), rng.range(1, 13)};
    const int oc = rng.range(1, 9);
    const auto x = random_tensor(s, rng);
    const auto w = random_tensor(Shape{oc, s.c, k, k}, rng);
    std::vector<double> b(oc);
    for (auto& v : b) v = rng.uniform(-1, 1);
    expect_near_all(kernels::conv2d<double>(x, w, b), naive_conv(x, w, b), 1e-12);
  }
}

TEST(Conv2d, FloatKernelAgreesWithDoubleOracle) {
  Rng rng(2);
  const Shape s{2, 16, 20, 24};
  const auto x = random_tensor(s, rng);
  const auto w = random_tensor(Shape{32, 16, 3, 3}, rng);
  std::vector<double> b(32, 0.25);
  const auto ref = naive_conv(x, w, b);
  const auto got = kernels::conv2d<float>(x.cast<float>(), w.cast<float>(), std::vector<float>(32, 0.25f));
  for (std::size_t i = 0; i < ref.numel(); ++i) ASSERT_NEAR(got[i], ref[i], 1e-4);
}

TEST(Conv2d, RejectsChannelMismatch) {
  Tensor<double> x(Shape{1, 3, 4, 4}), w(Shape{2, 4, 3, 3});
  std::vector<double> b(2);
  EXPECT_THROW(kernels::conv2d<double>(x, w, b), ShapeError);
}

TEST(MaxPool, PicksFirstElementOnTies) {
  Tensor<double> x(Shape{1, 1, 4, 4}, 7.0);
  const auto r = kernels::maxpool2x2(x);
  ASSERT_EQ(r.output.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(r.argmax, (std::vector<std::uint32_t>{0, 2, 8, 10}));
  Tensor<double> g(Shape{1, 1, 2, 2}, 1.0);
  const auto gx = kernels::maxpool2x2_backward(g, r.argmax, x.shape());
  EXPECT_EQ(gx.at(0, 0, 0, 0), 1.0);
  EXPECT_EQ(gx.at(0, 0, 0, 1), 0.0);
  EXPECT_EQ(gx.at(0, 0, 1, 0), 0.0);
}

TEST(MaxPool, RejectsOddExtents) {
  EXPECT_THROW(kernels::maxpool2x2(Tensor<double>(Shape{1, 1, 3, 4})), ShapeError);
}

TEST(BatchNorm, TrainModeMatchesDirectStatistics) {
  Rng rng(3);
  const Shape s{3, 2, 4, 5};
  const auto x = random_tensor(s, rng, -2, 3);
  std::vector<double> gamma{1.5, -0.5}, beta{0.25, 1.0};
  std::vector<double> rm{0.1, -0.2}, rv{1.0, 2.0};
  kernels::BatchNormOptions opt;
  const auto r = kernels::batchnorm_train<double>(x, gamma, beta, rm, rv, opt);
  const double m = static_cast<double>(s.n) * s.h * s.w;
  for (int c = 0; c < 2; ++c) {
    double sum = 0, sq = 0;
    for (int n = 0; n < s.n; ++n)
      for (int y = 0; y < s.h; ++y)
        for (int xx = 0; xx < s.w; ++xx) sum += x.at(n, c, y, xx);
    const double mean = sum / m;
    for (int n = 0; n < s.n; ++n)
      for (int y = 0; y < s.h; ++y)
        for (int xx = 0; xx < s.w; ++xx) sq += std::pow(x.at(n, c, y, xx) - mean, 2);
    const double var = sq / m;
    for (int n = 0; n < s.n; ++n)
      for (int y = 0; y < s.h; ++y)
        for (int xx = 0; xx < s.w; ++xx)
          ASSERT_NEAR(r.output.at(n, c, y, xx), gamma[c] * (x.at(n, c, y, xx) - mean) / std::sqrt(var + 1e-5) + beta[c],
                      1e-12);
    const double rm0 = c == 0 ? 0.1 : -0.2, rv0 = c == 0 ? 1.0 : 2.0;
    EXPECT_NEAR(rm[c], 0.9 * rm0 + 0.1 * mean, 1e-12);
    EXPECT_NEAR(rv[c], 0.9 * rv0 + 0.1 * sq / (m - 1), 1e-12);
  }
}

TEST(BatchNorm, EvalModeUsesRunningStatistics) {
  Tensor<double> x(Shape{1, 1, 1, 2}, std::vector<double>{1.0, 3.0});
  std::vector<double> gamma{2.0}, beta{1.0}, rm{1.0}, rv{4.0};
  const auto y = kernels::batchnorm_eval<double>(x, gamma, beta, rm, rv, {});
  EXPECT_NEAR(y[0], 1.0, 1e-12);
  EXPECT_NEAR(y[1], 2.0 * 2.0 / std::sqrt(4.0 + 1e-5) + 1.0, 1e-12);
}

TEST(BatchNormRelu, FusedOutputEqualsComposition) {
  Rng rng(4);
  const auto x = random_tensor(Shape{2, 3, 5, 4}, rng);
  std::vector<double> gamma{1.0, 0.5, -1.0}, beta{0.1, -0.2, 0.3};
  std::vector<double> rm1(3), rv1(3, 1.0), rm2(3), rv2(3, 1.0);
  const auto fused = kernels::batchnorm_relu_train<double>(x, gamma, beta, rm1, rv1, {});
  const auto plain = kernels::relu(kernels::batchnorm_train<double>(x, gamma, beta, rm2, rv2, {}).output);
  expect_near_all(fused.output, plain, 1e-12);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(rm1[c], rm2[c], 1e-12);
    EXPECT_NEAR(rv1[c], rv2[c], 1e-12);
  }
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(kernels::stable_sigmoid(-1000.0), 0.0);
  EXPECT_EQ(kernels::stable_sigmoid(1000.0), 1.0);
  EXPECT_NEAR(kernels::stable_sigmoid(0.0), 0.5, 0.0);
  EXPECT_TRUE(std::isfinite(kernels::stable_sigmoid(-800.0f)));
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-9);
  EXPECT_NEAR(softplus(-800.0), 0.0, 1e-300);
}

TEST(Upsample, ReplicatesEachPixel) {
  Tensor<double> x(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  const auto y = kernels::upsample2x(x);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  EXPECT_EQ(y.at(0, 0, 0, 1), 1);
  EXPECT_EQ(y.at(0, 0, 1, 2), 2);
  EXPECT_EQ(y.at(0, 0, 3, 0), 3);
  EXPECT_EQ(y.at(0, 0, 2, 3), 4);
  const auto g = kernels::upsample2x_backward(Tensor<double>(Shape{1, 1, 4, 4}, 1.0));
  for (double v : g.data()) EXPECT_EQ(v, 4.0);
}

TEST(Add, ShapeMismatchIsAnError) {
  EXPECT_THROW(kernels::add(Tensor<double>(Shape{1, 1, 2, 2}), Tensor<double>(Shape{1, 2, 2, 2})), ShapeError);
}

TEST(SmoothL1, PiecewiseValue) {
  EXPECT_DOUBLE_EQ(smooth_l1_value(0.5), 0.125);
  EXPECT_DOUBLE_EQ(smooth_l1_value(-0.5), 0.125);
  EXPECT_DOUBLE_EQ(smooth_l1_value(2.0), 1.5);
  EXPECT_DOUBLE_EQ(smooth_l1_value(-3.0), 2.5);
}

// ---- finite-difference checks, 20 random shapes per op -----------------

TEST(GradCheck, Conv2d) {
  Rng rng(10);
  for (int t = 0; t < kShapes; ++t) {
    const int k = t % 2 ? 3 : 1;
    const Shape s = random_shape(rng);
    const int oc = rng.range(1, 3);
    const auto r = grad_check(
        [](Tape<double>& tape, const std::vector<Var<double>>& v) {
          return project(tape, ops::conv2d(tape, v[0], v[1], v[2]));
        },
        {random_tensor(s, rng), random_tensor(Shape{oc, s.c, k, k}, rng), random_tensor(Shape{1, oc, 1, 1}, rng)});
    expect_grad_ok(r);
  }
}

TEST(GradCheck, MaxPool) {
  Rng rng(11);
  for (int t = 0; t < kShapes; ++t) {
    const auto r = grad_check([](Tape<double>& tape, const Var<double>& x) { return project(tape, ops::maxpool2x2(tape, x)); },
                              random_tensor(random_shape(rng, 3, 8, true), rng));
    expect_grad_ok(r);
  }
}

TEST(GradCheck, BatchNormTrainAndEval) {
  Rng rng(12);
  for (int t = 0; t < kShapes; ++t) {
    Shape s = random_shape(rng);
    if (s.n * s.h * s.w < 3) s.h = 3;
    const Mode mode = t % 2 ? Mode::kEval : Mode::kTrain;
    std::vector<double> rm(s.c), rv(s.c);
    for (int c = 0; c < s.c; ++c) {
      rm[c] = rng.uniform(-0.5, 0.5);
      rv[c] = rng.uniform(0.5, 2.0);
    }
    const auto r = grad_check(
        [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
          std::vector<double> m = rm, var = rv;  // train mode mutates them
          return project(tape, ops::batchnorm(tape, v[0], v[1], v[2], std::span<double>(m), std::span<double>(var), mode));
        },
        {random_tensor(s, rng, -2, 2), random_tensor(Shape{1, s.c, 1, 1}, rng, 0.5, 1.5),
         random_tensor(Shape{1, s.c, 1, 1}, rng)});
    expect_grad_ok(r);
  }
}

TEST(GradCheck, FusedBatchNormRelu) {
  Rng rng(13);
  for (int t = 0; t < kShapes; ++t) {
    Shape s = random_shape(rng);
    if (s.n * s.h * s.w < 3) s.w = 3;
    const auto r = grad_check(
        [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
          std::vector<double> m(s.c), var(s.c, 1.0);
          return project(tape, ops::batchnorm_relu(tape, v[0], v[1], v[2], std::span<double>(m),
                                                   std::span<double>(var), Mode::kTrain));
        },
        {random_tensor(s, rng, -2, 2), random_tensor(Shape{1, s.c, 1, 1}, rng, 0.5, 1.5),
         random_tensor(Shape{1, s.c, 1, 1}, rng)});
    expect_grad_ok(r);
  }
}

TEST(GradCheck, ElementwiseOps) {
  Rng rng(14);
  using Op = std::function<Var<double>(Tape<double>&, const Var<double>&)>;
  const std::vector<std::pair<const char*, Op>> ops_list = {
      {"relu", [](Tape<double>& t, const Var<double>& x) { return ops::relu(t, x); }},
      {"sigmoid", [](Tape<double>& t, const Var<double>& x) { return ops::sigmoid(t, x); }},
      {"upsample2x", [](Tape<double>& t, const Var<double>& x) { return ops::upsample2x(t, x); }},
  };
  for (const auto& [name, op] : ops_list) {
    for (int t = 0; t < kShapes; ++t) {
      const auto r = grad_check([&](Tape<double>& tape, const Var<double>& x) { return project(tape, op(tape, x)); },
                                random_tensor(random_shape(rng), rng, -3, 3));
      SCOPED_TRACE(name);
      expect_grad_ok(r);
    }
  }
}

TEST(GradCheck, AddAndWeightedSum) {
  Rng rng(15);
  for (int t = 0; t < kShapes; ++t) {
    const Shape s = random_shape(rng);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    const auto r = grad_check(
        [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
          const Var<double> s1 = project(tape, ops::add(tape, v[0], v[1]));
          const Var<double> s2 = ops::sum(tape, ops::sigmoid(tape, v[1]));
          return ops::weighted_sum(tape, {s1, s2}, {a, b});
        },
        {random_tensor(s, rng), random_tensor(s, rng)});
    expect_grad_ok(r);
  }
}

TEST(GradCheck, BinaryCrossEntropyWithLogits) {
  Rng rng(16);
  for (int t = 0; t < kShapes; ++t) {
    const Shape s = random_shape(rng);
    std::vector<CellLabel> cells;
    for (std::size_t i = 0; i < s.numel(); ++i)
      if (rng.chance(0.7)) cells.push_back({i, rng.chance(0.4)});
    if (cells.empty()) cells.push_back({0, true});
    const auto r = grad_check(
        [&](Tape<double>& tape, const Var<double>& x) { return ops::bce_with_logits(tape, x, cells); },
        random_tensor(s, rng, -6, 6));
    expect_grad_ok(r);
  }
}

TEST(GradCheck, SmoothL1BothBranches) {
  Rng rng(17);
  for (int t = 0; t < kShapes; ++t) {
    Shape s = random_shape(rng);
    s.c = 4;
    std::vector<RegressionCell> cells;
    for (int n = 0; n < s.n; ++n)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
          if (rng.chance(0.6)) {
            RegressionCell c{n, y, x, {}};
            for (auto& v : c.target) v = rng.uniform(-3, 3);
            cells.push_back(c);
          }
    if (cells.empty()) cells.push_back({0, 0, 0, {0.5, -0.5, 2.0, -2.0}});
    const auto r = grad_check(
        [&](Tape<double>& tape, const Var<double>& x) { return ops::smooth_l1(tape, x, cells); },
        random_tensor(s, rng, -3, 3));
    expect_grad_ok(r);
  }
}

// ---- tape semantics -------------------------------------------------------

TEST(Tape, BackwardTwiceIsAnError) {
  Tape<double> tape;
  const auto x = tape.leaf(Tensor<double>(Shape{1, 1, 2, 2}, 1.0), true);
  const auto y = ops::sum(tape, ops::sigmoid(tape, x));
  tape.backward(y);
  EXPECT_THROW(tape.backward(y), TapeError);
}

TEST(Tape, NonScalarLossIsAnError) {
  Tape<double> tape;
  const auto x = tape.leaf(Tensor<double>(Shape{1, 1, 2, 2}, 1.0), true);
  EXPECT_THROW(tape.backward(ops::sigmoid(tape, x)), TapeError);
}

TEST(Tape, GradientsAccumulateOverFanOut) {
  Tape<double> tape;
  const auto x = tape.leaf(Tensor<double>(Shape{1, 1, 1, 3}, 0.0), true);
  const auto y = ops::sum(tape, ops::add(tape, x, x));
  tape.backward(y);
  for (double g : x.grad().data()) EXPECT_DOUBLE_EQ(g, 2.0);
}

TEST(Tape, NonRecordingTapeKeepsNoRecords) {
  Tape<double> tape(false);
  const auto x = tape.leaf(Tensor<double>(Shape{1, 1, 2, 2}, 1.0), true);
  ops::sum(tape, ops::relu(tape, x));
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Tape, LeafWithoutGradientReportsIt) {
  Tape<double> tape;
  const auto x = tape.leaf(Tensor<double>(Shape{1, 1, 1, 1}, 1.0), false);
  EXPECT_FALSE(x.has_grad());
  EXPECT_THROW(x.grad(), TapeError);
}

TEST(GradCheck, FlagsAWrongBackward) {
  // square with a deliberately wrong derivative (x instead of 2x)
  auto bad_square = [](Tape<double>& tape, const Var<double>& x) {
    Tensor<double> y = x.value();
    for (auto& v : y.data()) v = v * v;
    auto xn = x.node();
    return ops::sum(tape, tape.emit("bad_square", std::move(y), {x},
                                    [xn](const Tensor<double>& g, const Tensor<double>&, GradSink<double>& sink) {
                                      Tensor<double> gx = g;
                                      for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] *= xn->value[i];
                                      sink.add(0, std::move(gx));
                                    }));
  };
  Rng rng(18);
  const auto r = grad_check(bad_square, random_tensor(Shape{1, 2, 3, 3}, rng, 0.5, 1.5));
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.max_rel_error, 0.5, 1e-6);
}
