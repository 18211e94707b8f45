#include "fsdag/checkpoint.hpp"
#include "fsdag/dataset.hpp"
#include "fsdag/errors.hpp"
#include "fsdag/schedule.hpp"
#include "fsdag/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace fsdag;

namespace {

double alpha_oracle(std::int64_t t) {
  if (t <= 98) return 0.99;
  if (t >= 999) return 0.999;
  return 1.0 - 1.0 / (static_cast<double>(t) + 1.0);
}

ArchDescriptor small_arch() {
  ArchDescriptor a;
  a.image_size = 32;
  a.num_landmarks = 8;
  a.encoder_channels = {8, 8};
  a.encoder_strides = {2, 2};
  a.gcn_width = 16;
  a.gcn_layers = 1;
  a.cascade_stages = 1;
  return a;
}

Dataset small_dataset(Eigen::Index labeled, Eigen::Index unlabeled, std::uint64_t seed = 7) {
  GenerationSpec spec;
  spec.shape.image_size = 32;
  spec.counts = {labeled, unlabeled, 2, 2};
  spec.seed = seed;
  return generate_dataset(spec);
}

DagModelParams<double> randomized(const ArchDescriptor& arch, std::uint64_t seed, double scale) {
  auto p = DagModelParams<double>::initialized(arch, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> d(0, scale);
  for (auto& t : p.tensors())
    for (Index i = 0; i < t.size(); ++i) t[i] += d(rng);
  return p;
}

/// Zeroes every cascade head so that the final vertices equal the global ones.
template <typename Scalar>
DagModelParams<Scalar> without_cascade_displacement(DagModelParams<Scalar> p) {
  for (Index s = 0; s < p.arch().cascade_stages; ++s)
    for (std::size_t j = 0; j < 3; ++j) p.tensors()[p.local_head(static_cast<std::size_t>(s)) + j].values() = Scalar(0);
  return p;
}

ModelContext context_for(const Dataset& d) {
  std::vector<LandmarkSet> sets;
  for (const auto& s : d.train_labeled) sets.push_back(*s.landmarks);
  return ModelContext{compute_mean_shape(sets), GraphTopology::fully_connected(d.num_landmarks), LossConfig{}};
}

TrainerConfig quick(Strategy s, std::int64_t epochs = 1) {
  TrainerConfig c;
  c.strategy = s;
  c.epochs = epochs;
  c.ratio = 2;
  c.lr = 1e-3;
  return c;
}

}  // namespace

TEST(AlphaSchedule, ExactAtBoundaries) {
  for (std::int64_t t : {0, 1, 98, 99, 199, 500, 998, 999, 1000000}) EXPECT_EQ(alpha_schedule(t), alpha_oracle(t)) << t;
  EXPECT_EQ(alpha_schedule(0), 0.99);
  EXPECT_EQ(alpha_schedule(199), 0.995);
  EXPECT_EQ(alpha_schedule(1000000), 0.999);
  EXPECT_THROW(alpha_schedule(-1), std::invalid_argument);
}

TEST(AlphaSchedule, MatchesPiecewiseFormOnEveryStep) {
  for (std::int64_t t = 0; t < 2000; ++t) ASSERT_EQ(alpha_schedule(t), alpha_oracle(t)) << t;
}

TEST(LrAtEpoch, StepDecay) {
  EXPECT_EQ(lr_at_epoch(0, 1e-4), 1e-4);
  EXPECT_EQ(lr_at_epoch(9, 1e-4), 1e-4);
  EXPECT_NEAR(lr_at_epoch(10, 1e-4), 9.6e-5, 1e-15 * 9.6e-5);
  EXPECT_NEAR(lr_at_epoch(25, 1e-4), 9.216e-5, 1e-15 * 9.216e-5);
  EXPECT_THROW(lr_at_epoch(-1, 1e-4), std::invalid_argument);
}

TEST(BatchSchedule, Patterns) {
  const auto r2 = build_batch_schedule(3, 6, 2);
  std::string kinds;
  for (const auto& b : r2) kinds += b.kind == BatchKind::kLabeled ? 'L' : 'U';
  EXPECT_EQ(kinds, "LUULUULUU");
  const auto r1 = build_batch_schedule(2, 4, 1);
  kinds.clear();
  for (const auto& b : r1) kinds += b.kind == BatchKind::kLabeled ? 'L' : 'U';
  EXPECT_EQ(kinds, "LULULULU");
  // Labeled indices cycle.
  EXPECT_EQ(r1[4].index, 0);
  EXPECT_EQ(r1[6].index, 1);
  EXPECT_THROW(build_batch_schedule(1, 4, 0), std::invalid_argument);
}

TEST(BatchSchedule, OneToRRatio) {
  const auto s = build_batch_schedule(2, 500, 100);
  const auto labeled = std::count_if(s.begin(), s.end(), [](const auto& b) { return b.kind == BatchKind::kLabeled; });
  EXPECT_EQ(labeled, 5);
  EXPECT_EQ(static_cast<std::int64_t>(s.size()) - labeled, 500);
}

TEST(Ema, DegenerateAndWorkedCases) {
  const ArchDescriptor arch = small_arch();
  const auto student = randomized(arch, 1, 0.5);
  const auto teacher0 = randomized(arch, 2, 0.5);
  auto teacher = teacher0;
  ema_update(teacher, student, 1.0);
  EXPECT_EQ(teacher, teacher0);
  ema_update(teacher, student, 0.0);
  EXPECT_EQ(teacher, student);
  EXPECT_THROW(ema_update(teacher, student, 1.5), std::invalid_argument);

  auto one = DagModelParams<double>::initialized(arch, 3);
  auto zero = one;
  for (auto& t : one.tensors()) t.values() = 1.0;
  for (auto& t : zero.tensors()) t.values() = 0.0;
  ema_update(one, zero, 0.99);
  for (const auto& t : one.tensors()) EXPECT_TRUE((t.values() == 0.99).all());
}

TEST(Ema, ConvexEnvelopeOverRandomTrajectory) {
  ArchDescriptor arch = small_arch();
  auto student = randomized(arch, 4, 0.1);
  auto teacher = student;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0, 0.05);
  for (std::int64_t t = 0; t < 1000; ++t) {
    for (auto& p : student.tensors())
      for (Index i = 0; i < p.size(); ++i) p[i] += d(rng);
    const auto before = teacher;
    ema_update(teacher, student, alpha_schedule(t));
    for (std::size_t k = 0; k < teacher.count(); ++k) {
      const auto& a = before.tensors()[k].values();
      const auto& s = student.tensors()[k].values();
      const auto& n = teacher.tensors()[k].values();
      ASSERT_TRUE((n >= a.min(s) && n <= a.max(s)).all()) << "step " << t << " tensor " << k;
    }
  }
}

TEST(Adam, FixedPointFirstStepAndDeterminism) {
  std::vector<Tensor<double>> p{Tensor<double>(Shape{3}, {1, -2, 3})};
  auto opt = OptimizerState<double>::for_params(p);
  const auto p0 = p;
  adam_step(p, {Tensor<double>(Shape{3})}, opt, 1e-3, 0.0);
  EXPECT_EQ(p, p0);

  auto q = p0;
  auto opt2 = OptimizerState<double>::for_params(q);
  adam_step(q, {Tensor<double>(Shape{3}, {0.5, -4, 1e-3})}, opt2, 1e-3, 0.0);
  // Bias-corrected first step: lr * g / (|g| + eps).
  EXPECT_NEAR(q[0][0], 1 - 1e-3, 1e-10);
  EXPECT_NEAR(q[0][1], -2 + 1e-3, 1e-10);
  EXPECT_NEAR(q[0][2], 3 - 1e-3, 1e-7);

  auto r = p0;
  auto opt3 = OptimizerState<double>::for_params(r);
  adam_step(r, {Tensor<double>(Shape{3}, {0.5, -4, 1e-3})}, opt3, 1e-3, 0.0);
  EXPECT_EQ(q, r);
  EXPECT_THROW(adam_step(r, {Tensor<double>(Shape{2})}, opt3, 1e-3, 0.0), std::invalid_argument);
}

TEST(Adam, DecoupledWeightDecay) {
  std::vector<Tensor<double>> p{Tensor<double>(Shape{1}, {2.0})};
  auto opt = OptimizerState<double>::for_params(p);
  adam_step(p, {Tensor<double>(Shape{1})}, opt, 0.1, 0.5);
  EXPECT_DOUBLE_EQ(p[0][0], 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(Strategy, NamesRoundTrip) {
  for (const auto& [s, name] : strategy_names()) EXPECT_EQ(parse_strategy(name), s);
  EXPECT_THROW(parse_strategy("mean-teacher"), std::invalid_argument);
  EXPECT_EQ(default_batch_size(1), 1);
  EXPECT_EQ(default_batch_size(5), 4);
  EXPECT_EQ(default_batch_size(50), 8);
}

TEST(Pretrain, FiveSamplesLossDecreases) {
  const Dataset d = small_dataset(5, 0);
  TrainerConfig cfg = quick(Strategy::kSupervisedOnly, 200);
  cfg.select_best = false;
  const auto r = pretrain<float>(d.train_labeled, d.validation, small_arch(), LossConfig{}, cfg);
  ASSERT_EQ(r.history.epochs.size(), 200u);
  auto window = [&](std::size_t from) {
    double s = 0;
    for (std::size_t i = from; i < from + 10; ++i) s += r.history.epochs[i].train_loss;
    return s / 10;
  };
  EXPECT_LT(window(190), window(0));
  EXPECT_TRUE(r.history.converged);
}

TEST(Pretrain, DeterministicAndValidated) {
  const Dataset d = small_dataset(3, 0);
  const TrainerConfig cfg = quick(Strategy::kSupervisedOnly, 5);
  const auto a = pretrain<float>(d.train_labeled, d.validation, small_arch(), LossConfig{}, cfg);
  const auto b = pretrain<float>(d.train_labeled, d.validation, small_arch(), LossConfig{}, cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.optimizer, b.optimizer);
  EXPECT_THROW(pretrain<float>({}, d.validation, small_arch(), LossConfig{}, cfg), std::invalid_argument);
}

TEST(Pretrain, SingleSampleCompletes) {
  const Dataset d = small_dataset(1, 0);
  const auto r = pretrain<float>(d.train_labeled, d.validation, small_arch(), LossConfig{}, quick(Strategy::kSupervisedOnly, 3));
  EXPECT_EQ(r.history.labeled_steps, 3);
  for (const auto& t : r.params.tensors()) EXPECT_TRUE(t.all_finite());
}

TEST(SslTrain, SupervisedOnlyEqualsContinuedPretraining) {
  const Dataset d = small_dataset(3, 8);
  const ModelContext ctx = context_for(d);
  const auto pre = randomized(small_arch(), 8, 0.05).cast<float>();
  const TrainerConfig cfg = quick(Strategy::kSupervisedOnly, 3);
  const auto r = ssl_train<float>(pre, ctx, d.train_labeled, d.train_unlabeled, d.validation, cfg);
  auto params = pre;
  auto opt = OptimizerState<float>::for_params(params.tensors());
  const TrainHistory h = continue_supervised(params, opt, d.train_labeled, d.validation, ctx, cfg);
  EXPECT_EQ(r.student, params);
  EXPECT_EQ(r.history.unlabeled_steps, 0);
  EXPECT_EQ(r.history.labeled_steps, h.labeled_steps);
  EXPECT_FALSE(r.teacher.has_value());
}

TEST(SslTrain, ConsistencyGradientVanishesAtFixedPoint) {
  const Dataset d = small_dataset(2, 40);
  const ModelContext ctx = context_for(d);
  // Arbitrary weights with the global hinge out of reach, and weights whose
  // cascade leaves the global vertices in place under the default margin.
  LossConfig wide = ctx.loss;
  wide.margin = 10;
  const std::pair<DagModelParams<double>, LossConfig> cases[] = {
      {randomized(small_arch(), 9, 0.1), wide}, {without_cascade_displacement(randomized(small_arch(), 10, 0.1)), ctx.loss}};
  for (const auto& [model, loss] : cases) {
    for (int b = 0; b < 10; ++b) {
      std::vector<Image> images;
      for (int i = 0; i < 4; ++i) images.push_back(d.train_unlabeled[static_cast<std::size_t>(b * 4 + i)].image);
      const auto step = consistency_gradients(model, model, images, images, ctx, loss);
      EXPECT_EQ(step.loss, 0.0);
      for (const auto& g : step.grads) ASSERT_TRUE((g.values() == 0.0).all()) << "batch " << b;
      auto updated = model;
      auto opt = OptimizerState<double>::for_params(updated.tensors());
      adam_step(updated, step.grads, opt, 1e-3, 0.0);
      EXPECT_EQ(updated, model);
    }
  }
}

TEST(SslTrain, GlobalTermSeesCascadeDisplacement) {
  const Dataset d = small_dataset(2, 4);
  const ModelContext ctx = context_for(d);
  const auto model = randomized(small_arch(), 11, 0.5);
  const std::vector<Image> batch(1, d.train_unlabeled[0].image);
  LossConfig zero_margin = ctx.loss;
  zero_margin.margin = 0;
  EXPECT_GT(consistency_gradients(model, model, batch, batch, ctx, zero_margin).loss, 0.0);
}

TEST(SslTrain, MeanTeacherCountsAndTeacherState) {
  const Dataset d = small_dataset(3, 12);
  const ModelContext ctx = context_for(d);
  const auto pre = randomized(small_arch(), 10, 0.05).cast<float>();
  TrainerConfig cfg = quick(Strategy::kMeanTeacherJs, 2);
  cfg.select_best = false;
  const auto r = ssl_train<float>(pre, ctx, d.train_labeled, d.train_unlabeled, d.validation, cfg);
  // 12 unlabeled images in batches of 4 with R = 2: L U U L U per epoch.
  EXPECT_EQ(r.history.unlabeled_steps, 6);
  EXPECT_EQ(r.history.labeled_steps, 4);
  EXPECT_EQ(r.global_step, 10);
  EXPECT_EQ(r.history.models_allocated, 2);
  ASSERT_TRUE(r.teacher.has_value());
  EXPECT_FALSE(*r.teacher == r.student);
  for (const auto& s : r.history.steps) EXPECT_TRUE(std::isfinite(s.loss));
}

TEST(SslTrain, IdenticalWeightsGiveZeroFloatLoss) {
  const Dataset d = small_dataset(3, 4);
  const ModelContext ctx = context_for(d);
  const auto pre = without_cascade_displacement(randomized(small_arch(), 11, 0.05).cast<float>());
  const std::vector<Image> batch(1, d.train_unlabeled[0].image);
  const auto step = consistency_gradients(pre, pre, batch, batch, ctx, ctx.loss);
  EXPECT_EQ(step.loss, 0.0);
  for (const auto& g : step.grads) EXPECT_TRUE((g.values() == 0.0f).all());
}

TEST(SslTrain, PiModelKeepsOneModel) {
  const Dataset d = small_dataset(2, 8);
  const auto r = ssl_train<float>(randomized(small_arch(), 12, 0.05).cast<float>(), context_for(d), d.train_labeled,
                                  d.train_unlabeled, d.validation, quick(Strategy::kPiModel));
  EXPECT_EQ(r.history.models_allocated, 1);
  EXPECT_FALSE(r.teacher.has_value());
  EXPECT_GT(r.history.unlabeled_steps, 0);
}

TEST(SslTrain, BaselinesFiniteAndReproducible) {
  const Dataset d = small_dataset(2, 8);
  const ModelContext ctx = context_for(d);
  const auto pre = randomized(small_arch(), 13, 0.05).cast<float>();
  for (Strategy s : {Strategy::kMeanTeacher, Strategy::kPseudoLabel, Strategy::kPiModel, Strategy::kTemporalEnsemble}) {
    const TrainerConfig cfg = quick(s, 2);
    const auto a = ssl_train<float>(pre, ctx, d.train_labeled, d.train_unlabeled, d.validation, cfg);
    const auto b = ssl_train<float>(pre, ctx, d.train_labeled, d.train_unlabeled, d.validation, cfg);
    EXPECT_EQ(a.student, b.student) << to_string(s);
    EXPECT_EQ(a.teacher, b.teacher) << to_string(s);
    for (const auto& st : a.history.steps) EXPECT_TRUE(std::isfinite(st.loss)) << to_string(s);
  }
}

TEST(SslTrain, RejectsMissingUnlabeledData) {
  const Dataset d = small_dataset(2, 0);
  EXPECT_THROW(ssl_train<float>(randomized(small_arch(), 14, 0.0).cast<float>(), context_for(d), d.train_labeled, {},
                                d.validation, quick(Strategy::kMeanTeacher)),
               std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const ArchDescriptor arch = small_arch();
  Checkpoint c;
  c.arch = arch;
  c.mean_shape = MeanShape(8);
  c.mean_shape.coords().col(0).setConstant(0.25);
  c.mean_shape.coords().col(1).setConstant(0.75);
  c.global_step = 1234;
  c.models.emplace_back("student", randomized(arch, 15, 0.3).cast<float>());
  c.models.emplace_back("teacher", randomized(arch, 16, 0.3).cast<float>());
  c.optimizer = OptimizerState<float>::for_params(c.models[0].second.tensors());
  c.optimizer->step = 7;
  const auto bytes = serialize_checkpoint(c);
  const Checkpoint back = deserialize_checkpoint(bytes);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_checkpoint(back), bytes);
  EXPECT_TRUE(back.has_model("teacher"));
  EXPECT_THROW(back.model("model"), std::out_of_range);
}

TEST(Checkpoint, CorruptionIsDetected) {
  Checkpoint c;
  c.arch = small_arch();
  c.mean_shape = MeanShape(8);
  c.mean_shape.coords().setConstant(0.5);
  c.models.emplace_back("model", DagModelParams<float>::initialized(c.arch, 17));
  auto bytes = serialize_checkpoint(c);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[8] = 9;
  EXPECT_THROW(deserialize_checkpoint(bad_version), VersionError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize_checkpoint(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(deserialize_checkpoint(trailing), FormatError);
  EXPECT_THROW(read_checkpoint("/nonexistent/dir/x.ckpt"), IoError);
}
