#pragma once

#include "fsdag/geometry.hpp"
#include "fsdag/losses.hpp"
#include "fsdag/metrics.hpp"
#include "fsdag/model.hpp"
#include "fsdag/optimizer.hpp"
#include "fsdag/random.hpp"
#include "fsdag/schedule.hpp"
#include "fsdag/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fsdag {

enum class Strategy { kSupervisedOnly, kMeanTeacher, kMeanTeacherJs, kPseudoLabel, kPiModel, kTemporalEnsemble };

inline const std::vector<std::pair<Strategy, std::string>>& strategy_names() {
  static const std::vector<std::pair<Strategy, std::string>> names{
      {Strategy::kSupervisedOnly, "supervised_only"}, {Strategy::kMeanTeacher, "mean_teacher"},
      {Strategy::kMeanTeacherJs, "mean_teacher_js"},  {Strategy::kPseudoLabel, "pseudo_label"},
      {Strategy::kPiModel, "pi_model"},               {Strategy::kTemporalEnsemble, "temporal_ensemble"}};
  return names;
}

inline std::string to_string(Strategy s) {
  for (const auto& [k, v] : strategy_names())
    if (k == s) return v;
  throw std::invalid_argument("unknown strategy");
}

inline Strategy parse_strategy(std::string_view name) {
  for (const auto& [k, v] : strategy_names())
    if (v == name) return k;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

inline bool has_teacher(Strategy s) { return s == Strategy::kMeanTeacher || s == Strategy::kMeanTeacherJs; }

/// Labeled-set size 1 -> batch 1, up to 5 -> 4, otherwise 8.
inline std::int64_t default_batch_size(std::size_t n_labeled) {
  if (n_labeled <= 1) return 1;
  if (n_labeled <= 5) return 4;
  return 8;
}

struct TrainerConfig {
  Strategy strategy = Strategy::kMeanTeacherJs;
  std::int64_t ratio = 100;  // unlabeled batches per labeled batch
  double lr = 1e-4;
  double lr_decay = 0.96;
  std::int64_t lr_decay_every = 10;
  double weight_decay = 1e-4;
  double noise_sigma = 0.1;
  std::int64_t batch_size = 0;  // 0: derived from the labeled-set size
  std::int64_t epochs = 20;
  std::uint64_t rng_seed = 0;
  bool augment = true;
  bool augment_unlabeled = true;
  AugmentRanges augment_ranges;
  double ensemble_alpha = 0.99;  // temporal ensemble pseudo-GT smoothing
  bool select_best = true;       // return the epoch with lowest validation error

  void validate() const {
    if (ratio < 1) throw std::invalid_argument("TrainerConfig: R must be >= 1");
    if (!(lr > 0)) throw std::invalid_argument("TrainerConfig: lr must be > 0");
    if (!(lr_decay >= 0 && lr_decay <= 1)) throw std::invalid_argument("TrainerConfig: lr_decay must lie in [0, 1]");
    if (lr_decay_every < 1) throw std::invalid_argument("TrainerConfig: lr_decay_every must be >= 1");
    if (!(weight_decay >= 0)) throw std::invalid_argument("TrainerConfig: weight_decay must be >= 0");
    if (!(noise_sigma >= 0)) throw std::invalid_argument("TrainerConfig: noise_sigma must be >= 0");
    if (batch_size < 0) throw std::invalid_argument("TrainerConfig: batch_size must be >= 0");
    if (epochs < 0) throw std::invalid_argument("TrainerConfig: epochs must be >= 0");
    if (!(ensemble_alpha >= 0 && ensemble_alpha <= 1)) throw std::invalid_argument("TrainerConfig: ensemble_alpha must lie in [0, 1]");
    const auto& a = augment_ranges;
    if (!(a.max_rotation_deg >= 0 && a.max_rotation_deg <= 30) || !(a.scale_min >= 0.8 && a.scale_min <= 1) ||
        !(a.scale_max >= 1 && a.scale_max <= 1.25) || !(a.translation_fraction >= 0 && a.translation_fraction <= 0.5)) {
      throw std::invalid_argument("TrainerConfig: augmentation ranges exceed rotation 30, scale [0.8, 1.25], translation 0.5");
    }
  }
};

struct StepRecord {
  std::int64_t step;
  BatchKind kind;
  double loss;
};

struct EpochRecord {
  std::int64_t epoch;
  double lr;
  double train_loss;      // mean over the epoch's steps
  double val_mean_error;  // pixels; NaN without a validation set
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::int64_t selected_epoch = -1;
  std::int64_t labeled_steps = 0;
  std::int64_t unlabeled_steps = 0;
  int models_allocated = 0;  // parameter sets held by the run
  bool converged = true;
};

/// Fixed inputs shared by every forward of one experiment.
struct ModelContext {
  MeanShape mean_shape;
  GraphTopology topology;
  LossConfig loss;
};

template <typename Scalar>
struct PretrainResult {
  DagModelParams<Scalar> params;
  MeanShape mean_shape;
  OptimizerState<Scalar> optimizer;
  TrainHistory history;
};

template <typename Scalar>
struct SslResult {
  DagModelParams<Scalar> student;
  std::optional<DagModelParams<Scalar>> teacher;
  OptimizerState<Scalar> optimizer;
  std::int64_t global_step = 0;
  TrainHistory history;

  /// Teacher when the strategy keeps one, otherwise the student.
  const DagModelParams<Scalar>& eval_model() const { return teacher ? *teacher : student; }
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

enum SeedTag : std::uint64_t { kAugmentTag = 1, kNoiseTag = 2, kShuffleTag = 3, kInitTag = 4 };

/// Samples of one batch after augmentation, ready for a forward pass.
struct PreparedBatch {
  std::vector<Image> images;
  std::vector<LandmarkSet> landmarks;  // empty for unlabeled batches
};

inline PreparedBatch prepare_batch(const std::vector<const Sample*>& samples, const TrainerConfig& cfg, std::int64_t epoch,
                                   bool augmented, const MeanShape& mean_shape) {
  PreparedBatch b;
  const auto [mw, mh] = bounding_box_extent(mean_shape);
  for (const Sample* s : samples) {
    if (!augmented) {
      b.images.push_back(s->image);
      if (s->landmarks) b.landmarks.push_back(*s->landmarks);
      continue;
    }
    const auto [w, h] = s->landmarks ? bounding_box_extent(*s->landmarks) : std::pair{mw, mh};
    // Unlabeled samples are bounded by the mean-shape box but validated against half the image.
    const AugmentParams p = sample_augment_params(
        derive_seed({cfg.rng_seed, static_cast<std::uint64_t>(epoch), fnv1a(s->id), kAugmentTag}), std::min(w, 1.0),
        std::min(h, 1.0), cfg.augment_ranges);
    Sample a = fsdag::augment(*s, p, cfg.augment_ranges);
    b.images.push_back(std::move(a.image));
    if (a.landmarks) b.landmarks.push_back(std::move(*a.landmarks));
  }
  return b;
}

inline std::vector<Image> noised(const std::vector<Image>& images, const std::vector<const Sample*>& samples,
                                 const TrainerConfig& cfg, std::int64_t epoch) {
  std::vector<Image> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    out.push_back(add_gaussian_noise(
        images[i], cfg.noise_sigma,
        derive_seed({cfg.rng_seed, static_cast<std::uint64_t>(epoch), fnv1a(samples[i]->id), kNoiseTag})));
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> to_batch(const std::vector<Image>& images) {
  std::vector<const Image*> ptrs;
  for (const auto& img : images) ptrs.push_back(&img);
  return image_batch<Scalar>(ptrs);
}

/// Shuffled index order, reshuffled on every pass.
class IndexStream {
 public:
  IndexStream(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) { reshuffle(); }

  std::vector<std::size_t> next(std::size_t count) {
    std::vector<std::size_t> out;
    while (out.size() < count && n_ > 0) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    order_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    std::mt19937_64 rng(derive_seed({seed_, pass_++, kShuffleTag}));
    std::shuffle(order_.begin(), order_.end(), rng);
    pos_ = 0;
  }

  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t pass_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch)));
  }
  return out;
}

template <typename Scalar>
double supervised_step(DagModelParams<Scalar>& params, OptimizerState<Scalar>& opt, const std::vector<Image>& images,
                       const std::vector<LandmarkSet>& targets, const ModelContext& ctx, double lr, double weight_decay) {
  Tape<Scalar> tape;
  const BoundParams<Scalar> bound = bind(tape, params, true);
  Var<Scalar> x = tape.constant(to_batch<Scalar>(images));
  const DagOutputs<Scalar> out = dag_forward(x, bound, ctx.mean_shape, ctx.topology);
  Var<Scalar> gt = tape.constant(landmark_batch<Scalar>(targets));
  Var<Scalar> loss = supervised_total(out, gt, params.arch().num_landmarks, ctx.loss);
  tape.backward(loss);
  adam_step(params, gradients(tape, bound), opt, lr, weight_decay);
  return static_cast<double>(loss.value().item());
}

inline bool loss_decreased(const TrainHistory& h) {
  if (h.epochs.empty()) return true;
  const double first = h.epochs.front().train_loss, last = h.epochs.back().train_loss;
  return std::isfinite(last) && last < first;
}

}  // namespace detail

/// Gradient-free forward over `samples` (no augmentation), final vertices.
template <typename Scalar>
std::vector<LandmarkSet> predict(const DagModelParams<Scalar>& params, const ModelContext& ctx,
                                 const std::vector<const Sample*>& samples, std::size_t batch = 16) {
  std::vector<LandmarkSet> out;
  for (std::size_t i = 0; i < samples.size(); i += batch) {
    std::vector<const Image*> imgs;
    for (std::size_t j = i; j < std::min(samples.size(), i + batch); ++j) imgs.push_back(&samples[j]->image);
    Tape<Scalar> tape;
    const BoundParams<Scalar> bound = bind(tape, params, false);
    const DagOutputs<Scalar> o = dag_forward(tape.constant(image_batch<Scalar>(imgs)), bound, ctx.mean_shape, ctx.topology);
    for (auto& s : unbatch_landmarks(o.v_local().value(), params.arch().num_landmarks)) out.push_back(std::move(s));
  }
  return out;
}

template <typename Scalar>
std::vector<LandmarkSet> predict(const DagModelParams<Scalar>& params, const ModelContext& ctx,
                                 const std::vector<Sample>& samples, std::size_t batch = 16) {
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return predict(params, ctx, ptrs, batch);
}

/// Per-image landmark errors in pixels against the stored annotations.
template <typename Scalar>
std::vector<std::vector<double>> evaluate_errors(const DagModelParams<Scalar>& params, const ModelContext& ctx,
                                                 const std::vector<Sample>& samples) {
  const auto preds = predict(params, ctx, samples);
  std::vector<std::vector<double>> errors;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].landmarks) throw std::invalid_argument("evaluate_errors: sample " + samples[i].id + " has no landmarks");
    errors.push_back(euclidean_errors(preds[i], *samples[i].landmarks, static_cast<double>(samples[i].image.cols()),
                                      static_cast<double>(samples[i].image.rows())));
  }
  return errors;
}

template <typename Scalar>
double mean_pixel_error(const DagModelParams<Scalar>& params, const ModelContext& ctx, const std::vector<Sample>& samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0;
  std::size_t n = 0;
  for (const auto& image : evaluate_errors(params, ctx, samples)) {
    for (double e : image) {
      total += e;
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

template <typename Scalar>
struct StepGradients {
  double loss = 0;
  std::vector<Tensor<Scalar>> grads;
};

/// Loss and student gradients of one consistency step. The target forward
/// runs without gradients on `clean`; the student sees `perturbed`.
template <typename Scalar>
StepGradients<Scalar> consistency_gradients(const DagModelParams<Scalar>& student, const DagModelParams<Scalar>& target,
                                            const std::vector<Image>& clean, const std::vector<Image>& perturbed,
                                            const ModelContext& ctx, const LossConfig& loss) {
  Tape<Scalar> target_tape;
  const BoundParams<Scalar> target_bound = bind(target_tape, target, false);
  const DagOutputs<Scalar> target_out =
      dag_forward(target_tape.constant(detail::to_batch<Scalar>(clean)), target_bound, ctx.mean_shape, ctx.topology);
  Tape<Scalar> tape;
  const BoundParams<Scalar> bound = bind(tape, student, true);
  const DagOutputs<Scalar> out =
      dag_forward(tape.constant(detail::to_batch<Scalar>(perturbed)), bound, ctx.mean_shape, ctx.topology);
  Var<Scalar> l = unlabeled_total(out, target_out, student.arch().num_landmarks, loss);
  tape.backward(l);
  return StepGradients<Scalar>{static_cast<double>(l.value().item()), gradients(tape, bound)};
}

/// Supervised epochs on the labeled set starting from `params`, continuing the
/// epoch counter at `first_epoch`. With `select_best`, `params` ends as the
/// snapshot of the epoch with lowest validation error.
template <typename Scalar>
TrainHistory continue_supervised(DagModelParams<Scalar>& params, OptimizerState<Scalar>& opt,
                                 const std::vector<Sample>& labeled, const std::vector<Sample>& validation,
                                 const ModelContext& ctx, const TrainerConfig& cfg, std::int64_t first_epoch = 0) {
  if (labeled.empty()) throw std::invalid_argument("supervised training: labeled set is empty");
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size > 0 ? cfg.batch_size : default_batch_size(labeled.size()));
  TrainHistory history;
  history.models_allocated = 1;
  std::optional<DagModelParams<Scalar>> best;
  double best_error = std::numeric_limits<double>::infinity();
  std::int64_t step = 0;
  for (std::int64_t e = 0; e < cfg.epochs; ++e) {
    const std::int64_t epoch = first_epoch + e;
    const double lr = lr_at_epoch(epoch, cfg.lr, cfg.lr_decay, cfg.lr_decay_every);
    double epoch_loss = 0;
    const auto batches = detail::epoch_batches(
        labeled.size(), batch, derive_seed({cfg.rng_seed, static_cast<std::uint64_t>(epoch), detail::kShuffleTag}));
    for (const auto& idx : batches) {
      std::vector<const Sample*> samples;
      for (std::size_t i : idx) samples.push_back(&labeled[i]);
      const auto prepared = detail::prepare_batch(samples, cfg, epoch, cfg.augment, ctx.mean_shape);
      const double loss = detail::supervised_step(params, opt, prepared.images, prepared.landmarks, ctx, lr, cfg.weight_decay);
      history.steps.push_back({step++, BatchKind::kLabeled, loss});
      ++history.labeled_steps;
      epoch_loss += loss;
    }
    const double val = mean_pixel_error(params, ctx, validation);
    history.epochs.push_back({epoch, lr, epoch_loss / static_cast<double>(batches.size()), val});
    if (cfg.select_best && !validation.empty() && val < best_error) {
      best_error = val;
      best = params;
      history.selected_epoch = epoch;
    }
  }
  if (best) {
    params = std::move(*best);
  } else if (!history.epochs.empty()) {
    history.selected_epoch = history.epochs.back().epoch;
  }
  history.converged = detail::loss_decreased(history);
  return history;
}

/// Supervised DAG training on the labeled set only.
template <typename Scalar>
PretrainResult<Scalar> pretrain(const std::vector<Sample>& labeled, const std::vector<Sample>& validation,
                                const ArchDescriptor& arch, const LossConfig& loss, const TrainerConfig& cfg) {
  if (labeled.empty()) throw std::invalid_argument("pretrain: labeled set is empty");
  cfg.validate();
  loss.validate();
  std::vector<LandmarkSet> sets;
  for (const auto& s : labeled) {
    if (!s.landmarks) throw std::invalid_argument("pretrain: sample " + s.id + " has no landmarks");
    sets.push_back(*s.landmarks);
  }
  ModelContext ctx{compute_mean_shape(sets), GraphTopology::fully_connected(arch.num_landmarks), loss};
  auto params = DagModelParams<Scalar>::initialized(arch, derive_seed({cfg.rng_seed, detail::kInitTag}));
  auto opt = OptimizerState<Scalar>::for_params(params.tensors());
  TrainHistory history = continue_supervised(params, opt, labeled, validation, ctx, cfg);
  return PretrainResult<Scalar>{std::move(params), ctx.mean_shape, std::move(opt), std::move(history)};
}

/// Semi-supervised fine-tuning of a pre-trained model.
///
/// Each epoch walks the unlabeled set once, interleaving one labeled batch
/// before every `ratio` unlabeled batches. Teacher-bearing strategies feed the
/// same augmented batch to the teacher (clean) and the student (noised), take
/// one Adam step on the student and then move the teacher by EMA with
/// alpha_schedule(t); labeled steps advance the teacher too.
template <typename Scalar>
SslResult<Scalar> ssl_train(const DagModelParams<Scalar>& pretrained, const ModelContext& ctx,
                            const std::vector<Sample>& labeled, const std::vector<Sample>& unlabeled,
                            const std::vector<Sample>& validation, const TrainerConfig& cfg) {
  cfg.validate();
  ctx.loss.validate();
  if (labeled.empty()) throw std::invalid_argument("ssl_train: labeled set is empty");
  const Strategy strategy = cfg.strategy;

  SslResult<Scalar> result{pretrained, std::nullopt, OptimizerState<Scalar>::for_params(pretrained.tensors()), 0, {}};
  if (strategy == Strategy::kSupervisedOnly) {
    result.history = continue_supervised(result.student, result.optimizer, labeled, validation, ctx, cfg);
    result.global_step = result.history.labeled_steps;
    return result;
  }
  if (unlabeled.empty()) throw std::invalid_argument("ssl_train: strategy " + to_string(strategy) + " needs unlabeled data");

  TrainHistory& history = result.history;
  if (has_teacher(strategy)) result.teacher = pretrained;
  history.models_allocated = has_teacher(strategy) ? 2 : 1;

  LossConfig unlabeled_loss = ctx.loss;
  if (strategy != Strategy::kMeanTeacherJs) unlabeled_loss.w2 = 0.0;

  // Pseudo-labeled copies of the unlabeled set for the target-based baselines.
  std::vector<Sample> pseudo;
  std::vector<LandmarkSet> ensemble;
  if (strategy == Strategy::kPseudoLabel || strategy == Strategy::kTemporalEnsemble) {
    ensemble = predict(pretrained, ctx, unlabeled);
    pseudo = unlabeled;
    for (std::size_t i = 0; i < pseudo.size(); ++i) pseudo[i].landmarks = ensemble[i];
  }

  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size > 0 ? cfg.batch_size : default_batch_size(labeled.size()));
  const std::int64_t n_labeled_batches = static_cast<std::int64_t>((labeled.size() + batch - 1) / batch);
  detail::IndexStream labeled_stream(labeled.size(), derive_seed({cfg.rng_seed, 0xA11ULL}));

  std::optional<SslResult<Scalar>> best;
  double best_error = std::numeric_limits<double>::infinity();
  std::int64_t& t = result.global_step;

  auto after_student_update = [&]() {
    if (result.teacher) ema_update(*result.teacher, result.student, alpha_schedule(t));
    ++t;
  };

  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(epoch, cfg.lr, cfg.lr_decay, cfg.lr_decay_every);
    const auto u_batches = detail::epoch_batches(
        unlabeled.size(), batch, derive_seed({cfg.rng_seed, static_cast<std::uint64_t>(epoch), detail::kShuffleTag, 1}));
    const auto schedule = build_batch_schedule(n_labeled_batches, static_cast<std::int64_t>(u_batches.size()), cfg.ratio);
    double epoch_loss = 0;
    for (const ScheduledBatch& sb : schedule) {
      double loss = 0;
      if (sb.kind == BatchKind::kLabeled) {
        std::vector<const Sample*> samples;
        for (std::size_t i : labeled_stream.next(batch)) samples.push_back(&labeled[i]);
        const auto prepared = detail::prepare_batch(samples, cfg, epoch, cfg.augment, ctx.mean_shape);
        loss = detail::supervised_step(result.student, result.optimizer, prepared.images, prepared.landmarks, ctx, lr,
                                       cfg.weight_decay);
        ++history.labeled_steps;
      } else {
        const auto& idx = u_batches[static_cast<std::size_t>(sb.index)];
        std::vector<const Sample*> samples;
        const std::vector<Sample>& source = pseudo.empty() ? unlabeled : pseudo;
        for (std::size_t i : idx) samples.push_back(&source[i]);
        const auto prepared = detail::prepare_batch(samples, cfg, epoch, cfg.augment && cfg.augment_unlabeled, ctx.mean_shape);
        const std::vector<Image> student_input = detail::noised(prepared.images, samples, cfg, epoch);
        if (!pseudo.empty()) {
          loss = detail::supervised_step(result.student, result.optimizer, student_input, prepared.landmarks, ctx, lr,
                                         cfg.weight_decay);
        } else {
          // Target forward: teacher weights, or the student itself for the Pi-model.
          const DagModelParams<Scalar>& target_params = result.teacher ? *result.teacher : result.student;
          StepGradients<Scalar> step =
              consistency_gradients(result.student, target_params, prepared.images, student_input, ctx, unlabeled_loss);
          adam_step(result.student, step.grads, result.optimizer, lr, cfg.weight_decay);
          loss = step.loss;
        }
        ++history.unlabeled_steps;
      }
      history.steps.push_back({t, sb.kind, loss});
      epoch_loss += loss;
      after_student_update();
    }

    if (strategy == Strategy::kTemporalEnsemble) {
      const auto current = predict(result.student, ctx, unlabeled);
      for (std::size_t i = 0; i < ensemble.size(); ++i) {
        ensemble[i].coords() = cfg.ensemble_alpha * ensemble[i].coords() + (1.0 - cfg.ensemble_alpha) * current[i].coords();
        pseudo[i].landmarks = ensemble[i];
      }
    }

    const double val = mean_pixel_error(result.eval_model(), ctx, validation);
    history.epochs.push_back({epoch, lr, epoch_loss / std::max<double>(1.0, static_cast<double>(schedule.size())), val});
    if (cfg.select_best && !validation.empty() && val < best_error) {
      best_error = val;
      history.selected_epoch = epoch;
      best.emplace(SslResult<Scalar>{result.student, result.teacher, result.optimizer, result.global_step, {}});
    }
  }
  history.converged = detail::loss_decreased(history) || history.epochs.size() <= 1;
  if (best) {
    TrainHistory h = std::move(result.history);
    result = std::move(*best);
    result.history = std::move(h);
  } else if (!history.epochs.empty()) {
    history.selected_epoch = history.epochs.back().epoch;
  }
  return result;
}

}  // namespace fsdag
