#include "fsdag/gradcheck.hpp"
#include "fsdag/losses.hpp"
#include "fsdag/model.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fsdag;
using T = Tensor<double>;

namespace {

ArchDescriptor toy_arch() {
  ArchDescriptor a;
  a.image_size = 16;
  a.num_landmarks = 4;
  a.encoder_channels = {3, 4};
  a.encoder_strides = {1, 2};
  a.gcn_width = 5;
  a.gcn_layers = 2;
  a.cascade_stages = 2;
  return a;
}

T uniform(Shape s, std::uint64_t seed, double lo = 0, double hi = 1) {
  T t(std::move(s));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

const MeanShape kToyMean{{0.3, 0.3}, {0.7, 0.3}, {0.7, 0.7}, {0.3, 0.7}};

}  // namespace

TEST(MeanShape, ArithmeticMean) {
  const LandmarkSet s{{0.2, 0.4}, {0.6, 0.8}};
  EXPECT_EQ(compute_mean_shape({s}), s);
  EXPECT_EQ(compute_mean_shape({LandmarkSet{{0, 0}}, LandmarkSet{{1, 1}}}), (LandmarkSet{{0.5, 0.5}}));
  const LandmarkSet a{{0.1, 0.2}}, b{{0.4, 0.9}}, c{{0.3, 0.3}};
  EXPECT_LE((compute_mean_shape({a, b, c}).coords() - compute_mean_shape({c, a, b}).coords()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(compute_mean_shape({}), std::invalid_argument);
  EXPECT_THROW(compute_mean_shape({a, s}), std::invalid_argument);
}

TEST(Topology, ValidatesEdges) {
  EXPECT_THROW(GraphTopology(2, {{0, 0}}), std::invalid_argument);
  EXPECT_THROW(GraphTopology(3, {{0, 1}}), std::invalid_argument);
  const GraphTopology t(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(t.neighbors(1).size(), 2u);
  EXPECT_EQ(t.neighbors(0), std::vector<Index>{1});
}

TEST(Affine, HandExamples) {
  const LandmarkSet s{{1, 0}, {0.25, 0.5}};
  EXPECT_EQ(apply_affine(s, AffineParams::identity()), s);
  const LandmarkSet moved = apply_affine(s, AffineParams{{1, 0, 0, 1, 0.1, 0.2}});
  EXPECT_DOUBLE_EQ(moved.x(1), 0.35);
  EXPECT_DOUBLE_EQ(moved.y(1), 0.7);
  const LandmarkSet rotated = apply_affine(LandmarkSet{{1, 0}}, AffineParams{{0, -1, 1, 0, 0, 0}});
  EXPECT_EQ(rotated, (LandmarkSet{{0, 1}}));
}

TEST(Encoder, DefaultShapeContract) {
  const ArchDescriptor arch;
  const auto params = DagModelParams<float>::initialized(arch, 1);
  Tape<float> tape;
  const auto bound = bind(tape, params, false);
  const auto f = extract_features(tape.constant(Tensor<float>(Shape{1, 1, 64, 64})), bound);
  EXPECT_EQ(f.shape(), (Shape{1, 32, 16, 16}));
  EXPECT_THROW(extract_features(tape.constant(Tensor<float>(Shape{1, 1, 32, 32})), bound), std::invalid_argument);
}

TEST(Encoder, Deterministic) {
  const auto params = DagModelParams<double>::initialized(toy_arch(), 2);
  const T img = uniform({1, 1, 16, 16}, 3);
  auto run = [&] {
    Tape<double> tape;
    return extract_features(tape.constant(img), bind(tape, params, false)).value();
  };
  EXPECT_EQ(run(), run());
}

TEST(VertexFeatures, CornerAndClamp) {
  Tape<double> tape;
  const T fmap = uniform({3, 4, 5}, 4);
  auto f = tape.constant(fmap);
  const T corner = sample_vertex_features(f, tape.constant(T(Shape{1, 2}, {0, 0}))).value();
  for (Index c = 0; c < 3; ++c) EXPECT_EQ(corner[c], fmap[c * 20]);
  const T far = sample_vertex_features(f, tape.constant(T(Shape{1, 2}, {2, 2}))).value();
  const T one = sample_vertex_features(f, tape.constant(T(Shape{1, 2}, {1, 1}))).value();
  EXPECT_EQ(far, one);
}

TEST(VertexFeatures, CoordinateGradientCheck) {
  const T fmap = uniform({2, 5, 6}, 5, -1, 1);
  auto program = [&](Tape<double>& tape, Var<double> v) {
    return sum(mul(sample_vertex_features(tape.constant(fmap), v), tape.constant(uniform({4, 2}, 6, -1, 1))));
  };
  EXPECT_LE(finite_diff_check(program, uniform({4, 2}, 7, 0.05, 0.95)).max_rel_error, 1e-3);
}

TEST(Gcn, HandExampleAndZeroWeights) {
  Tape<double> tape;
  const GraphTopology topo(2, {{0, 1}});
  auto h = tape.constant(T(Shape{2, 1}, {1, 3}));
  auto one = tape.constant(T(Shape{1, 1}, {1}));
  auto zero_bias = tape.constant(T(Shape{1}));
  EXPECT_EQ(gcn_layer(h, topo, one, one, zero_bias, false).value(), T(Shape{2, 1}, {4, 4}));
  auto zw = tape.constant(T(Shape{1, 3}));
  auto zb = tape.constant(T(Shape{3}));
  EXPECT_TRUE((gcn_layer(h, topo, zw, zw, zb, true).value().values() == 0.0).all());
  EXPECT_THROW(gcn_layer(tape.constant(T(Shape{3, 1})), topo, one, one, zero_bias, false), std::invalid_argument);
}

TEST(Gcn, PermutationEquivariantUnderAutomorphism) {
  // Path 0-1-2 has the automorphism swapping 0 and 2.
  const GraphTopology topo(3, {{0, 1}, {1, 2}});
  const T h = uniform({3, 2}, 8, -1, 1);
  T hp = h;
  for (Index c = 0; c < 2; ++c) std::swap(hp[c], hp[4 + c]);
  const T ws = uniform({2, 3}, 9, -1, 1), wn = uniform({2, 3}, 10, -1, 1), b = uniform({3}, 11, -1, 1);
  Tape<double> tape;
  const T y = gcn_layer(tape.constant(h), topo, tape.constant(ws), tape.constant(wn), tape.constant(b), true).value();
  const T yp = gcn_layer(tape.constant(hp), topo, tape.constant(ws), tape.constant(wn), tape.constant(b), true).value();
  for (Index c = 0; c < 3; ++c) {
    EXPECT_EQ(yp[c], y[6 + c]);
    EXPECT_EQ(yp[3 + c], y[3 + c]);
    EXPECT_EQ(yp[6 + c], y[c]);
  }
}

TEST(DagForward, ZeroResidualStartsAtMeanShape) {
  const auto params = DagModelParams<double>::initialized(toy_arch(), 12);
  Tape<double> tape;
  const auto out = dag_forward(tape.constant(uniform({2, 1, 16, 16}, 13)), bind(tape, params, false), kToyMean,
                               GraphTopology::fully_connected(4));
  const T expected = landmark_batch<double>({kToyMean, kToyMean});
  EXPECT_EQ(out.v_global.shape(), (Shape{8, 2}));
  EXPECT_EQ(out.v_global.value(), expected);
  ASSERT_EQ(out.v_local_steps.size(), 2u);
  for (const auto& step : out.v_local_steps) EXPECT_EQ(step.value(), expected);
}

TEST(DagForward, FiniteAndDeterministic) {
  auto params = DagModelParams<double>::initialized(toy_arch(), 14);
  std::mt19937_64 rng(15);
  std::normal_distribution<double> d(0, 0.3);
  for (auto& t : params.tensors())
    for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  const T img = uniform({1, 1, 16, 16}, 16);
  auto run = [&] {
    Tape<double> tape;
    return dag_forward(tape.constant(img), bind(tape, params, false), kToyMean, GraphTopology::fully_connected(4))
        .v_local()
        .value();
  };
  const T a = run();
  EXPECT_TRUE(a.all_finite());
  EXPECT_EQ(a, run());
}

TEST(DagForward, SupervisedLossGradientForEveryTensor) {
  auto params = DagModelParams<double>::initialized(toy_arch(), 17);
  std::mt19937_64 rng(18);
  std::normal_distribution<double> d(0, 0.3);
  for (auto& t : params.tensors())
    for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  const T img = uniform({1, 1, 16, 16}, 19);
  const T gt = uniform({4, 2}, 20, 0.2, 0.8);
  const GraphTopology topo = GraphTopology::fully_connected(4);
  for (std::size_t idx = 0; idx < params.count(); ++idx) {
    auto program = [&](Tape<double>& tape, Var<double> v) {
      BoundParams<double> bound = bind(tape, params, false);
      bound.vars[idx] = v;
      return supervised_total(dag_forward(tape.constant(img), bound, kToyMean, topo), tape.constant(gt), 4, LossConfig{});
    };
    EXPECT_LE(finite_diff_check(program, params.tensors()[idx]).max_rel_error, 1e-3) << params.names()[idx];
  }
}

TEST(Params, NamesShapesAndCast) {
  const auto p = DagModelParams<double>::initialized(toy_arch(), 21);
  EXPECT_EQ(p.names().front(), "encoder.0.weight");
  EXPECT_EQ(p.tensors()[p.global_head()].shape(), (Shape{5, 6}));
  EXPECT_EQ(p.tensors()[p.local_head(1)].shape(), (Shape{5, 2}));
  EXPECT_EQ(p.cast<float>().cast<double>().arch(), p.arch());
  EXPECT_EQ(DagModelParams<double>::initialized(toy_arch(), 21), p);
}
