#include "fsdag/gradcheck.hpp"
#include "fsdag/gradcheck_suite.hpp"
#include "fsdag/ops.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fsdag;
using T = Tensor<double>;

namespace {

T random_tensor(Shape shape, std::uint64_t seed) {
  T t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

}  // namespace

TEST(Tensor, RejectsMismatchedValues) {
  EXPECT_THROW(T(Shape{2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
  EXPECT_THROW(T(Shape{-1}), std::invalid_argument);
  EXPECT_EQ(T::scalar(3.0).item(), 3.0);
  EXPECT_EQ(T(Shape{2, 3}).reshaped({3, 2}).shape(), (Shape{3, 2}));
}

TEST(Backward, SumGivesOnes) {
  Tape<double> tape;
  auto x = tape.leaf(random_tensor({3, 4}, 1));
  tape.backward(sum(x));
  EXPECT_TRUE((tape.grad(x).values() == 1.0).all());
}

TEST(Backward, MeanOfSquaresGivesTwoXOverN) {
  Tape<double> tape;
  const T xv = random_tensor({5}, 2);
  auto x = tape.leaf(xv);
  tape.backward(mean(mul(x, x)));
  for (Index i = 0; i < 5; ++i) EXPECT_NEAR(tape.grad(x)[i], 2.0 * xv[i] / 5.0, 1e-15);
}

TEST(Backward, DetachedLeafGetsZeroGradient) {
  Tape<double> tape;
  auto x = tape.leaf(random_tensor({3}, 3));
  auto y = tape.leaf(random_tensor({3}, 4));
  tape.backward(sum(add(x, detach(y))));
  EXPECT_TRUE((tape.grad(y).values() == 0.0).all());
  EXPECT_TRUE((tape.grad(x).values() == 1.0).all());
}

TEST(Backward, NonScalarLossThrows) {
  Tape<double> tape;
  auto x = tape.leaf(random_tensor({3}, 5));
  EXPECT_THROW(tape.backward(x), std::invalid_argument);
}

TEST(Backward, BitIdenticalAcrossRuns) {
  auto run = [] {
    Tape<double> tape;
    auto x = tape.leaf(random_tensor({1, 2, 5, 5}, 6));
    auto w = tape.leaf(random_tensor({3, 2, 3, 3}, 7));
    auto b = tape.leaf(random_tensor({3}, 8));
    tape.backward(sum(fsdag::tanh(conv2d(x, w, b, 2))));
    return std::pair{tape.grad(x), tape.grad(w)};
  };
  EXPECT_EQ(run(), run());
}

TEST(Ops, BroadcastAdd) {
  Tape<double> tape;
  auto a = tape.leaf(T(Shape{2, 3}, {1, 2, 3, 4, 5, 6}));
  auto s = tape.leaf(T::scalar(10.0));
  auto r = tape.leaf(T(Shape{3}, {1, 0, -1}));
  auto y = add(add(a, s), r);
  EXPECT_EQ(y.value(), T(Shape{2, 3}, {12, 12, 12, 15, 15, 15}));
  tape.backward(sum(y));
  EXPECT_EQ(tape.grad(s).item(), 6.0);
  EXPECT_EQ(tape.grad(r), T(Shape{3}, {2, 2, 2}));
}

TEST(Ops, Matmul) {
  Tape<double> tape;
  auto a = tape.constant(T(Shape{2, 2}, {1, 2, 3, 4}));
  auto b = tape.constant(T(Shape{2, 1}, {5, 6}));
  EXPECT_EQ(matmul(a, b).value(), T(Shape{2, 1}, {17, 39}));
  EXPECT_THROW(matmul(b, b), std::invalid_argument);
}

TEST(Ops, Conv2dPaddingAndStride) {
  Tape<double> tape;
  auto x = tape.constant(T::filled({1, 1, 4, 4}, 1.0));
  auto w = tape.constant(T::filled({1, 1, 3, 3}, 1.0));
  auto b = tape.constant(T(Shape{1}));
  const T y = conv2d(x, w, b, 1).value();
  EXPECT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  EXPECT_EQ(y[0], 4.0);   // corner sees 2x2 of the image
  EXPECT_EQ(y[1], 6.0);   // edge
  EXPECT_EQ(y[5], 9.0);   // interior
  const T y2 = conv2d(x, w, b, 2).value();
  EXPECT_EQ(y2.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(y2[0], 4.0);
  EXPECT_EQ(y2[3], 9.0);
  EXPECT_THROW(conv2d(x, w, b, 3), std::invalid_argument);
}

TEST(Ops, KinkGradientsAreZero) {
  Tape<double> tape;
  auto x = tape.leaf(T(Shape{3}, {-1.0, 0.0, 2.0}));
  tape.backward(sum(add(relu(x), fsdag::abs(x))));
  EXPECT_EQ(tape.grad(x), T(Shape{3}, {-1.0, 0.0, 2.0}));
}

TEST(Ops, LogRejectsNonPositive) {
  Tape<double> tape;
  EXPECT_THROW(fsdag::log(tape.constant(T(Shape{2}, {1.0, 0.0}))), std::domain_error);
}

TEST(Ops, ChannelSoftmaxNormalizesAndIsShiftInvariant) {
  Tape<double> tape;
  const T xv = random_tensor({4, 3, 2}, 9);
  T shifted = xv;
  shifted.values() += 1000.0;
  const T p = channel_softmax(tape.constant(xv)).value();
  const T q = channel_softmax(tape.constant(shifted)).value();
  for (Index site = 0; site < 6; ++site) {
    double total = 0;
    for (Index c = 0; c < 4; ++c) total += p[c * 6 + site];
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
  EXPECT_TRUE(q.all_finite());
  EXPECT_LE((p.values() - q.values()).abs().maxCoeff(), 1e-9);
}

TEST(Ops, BilinearSampleInterpolatesAndClamps) {
  Tape<double> tape;
  auto fmap = tape.constant(T(Shape{1, 2, 2}, {0, 1, 2, 3}));
  const T at = bilinear_sample(fmap, tape.constant(T(Shape{3, 2}, {0, 0, 0.5, 0.5, 1, 0}))).value();
  EXPECT_EQ(at, T(Shape{3, 1}, {0.0, 1.5, 1.0}));
  auto pts = tape.leaf(T(Shape{1, 2}, {5.0, 7.0}));
  auto y = bilinear_sample(fmap, pts);
  EXPECT_EQ(y.value().item(), 3.0);
  tape.backward(sum(y));
  EXPECT_EQ(tape.grad(pts), T(Shape{1, 2}));
}

TEST(Ops, ConcatAndReshape) {
  Tape<double> tape;
  auto a = tape.constant(T(Shape{1, 2}, {1, 2}));
  auto b = tape.constant(T(Shape{1, 1}, {3}));
  EXPECT_EQ(concat<double>({a, b}, 1).value(), T(Shape{1, 3}, {1, 2, 3}));
  EXPECT_EQ(concat<double>({a, a}, 0).value(), T(Shape{2, 2}, {1, 2, 1, 2}));
  EXPECT_THROW(concat<double>({a, b}, 0), std::invalid_argument);
  EXPECT_THROW(reshape(a, Shape{3}), std::invalid_argument);
}

TEST(FiniteDiff, LinearProgramIsExact) {
  const auto r = finite_diff_check([](Tape<double>&, Var<double> x) { return sum(x); }, random_tensor({4, 4}, 10));
  EXPECT_LE(r.max_rel_error, 1e-9);
  EXPECT_EQ(r.checked, 16);
}

TEST(FiniteDiff, SoftmaxKlProgram) {
  const T target = random_tensor({3, 2, 2}, 11);
  auto program = [&](Tape<double>& tape, Var<double> x) {
    Var<double> p = channel_softmax(x);
    Var<double> q = channel_softmax(tape.constant(target));
    return sum(mul(p, sub(fsdag::log(p), fsdag::log(q))));
  };
  EXPECT_LE(finite_diff_check(program, random_tensor({3, 2, 2}, 12)).max_rel_error, 1e-3);
}

TEST(FiniteDiff, HingeAtKinkIsSkipped) {
  const auto r = finite_diff_check([](Tape<double>&, Var<double> x) { return sum(hinge(x)); }, T(Shape{3}, {0.0, 1.0, -1.0}));
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0], 0);
  EXPECT_EQ(r.checked, 2);
}

TEST(GradCheckSuite, AllEntriesWithinTolerance) {
  for (const GradCheckEntry& e : run_gradcheck_suite(5, 123)) {
    EXPECT_LE(e.max_rel_error, kGradCheckTolerance) << e.name;
    EXPECT_GT(e.checked, 0) << e.name;
  }
}
