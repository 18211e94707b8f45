#include "fsdag/experiment.hpp"

#include "fsdag/errors.hpp"
#include "fsdag/log.hpp"

#include <json.hpp>

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace fsdag {

namespace fs = std::filesystem;

namespace {

std::vector<LandmarkSet> labels_of(const std::vector<Sample>& samples) {
  std::vector<LandmarkSet> out;
  for (const Sample& s : samples) {
    if (!s.landmarks) throw ValidationError("sample " + s.id + " in a labeled split has no landmarks");
    out.push_back(*s.landmarks);
  }
  return out;
}

template <typename To, typename From>
OptimizerState<To> cast_optimizer(const OptimizerState<From>& o) {
  OptimizerState<To> out;
  out.beta1 = o.beta1;
  out.beta2 = o.beta2;
  out.eps = o.eps;
  out.step = o.step;
  for (const auto& t : o.first_moment) out.first_moment.push_back(t.template cast<To>());
  for (const auto& t : o.second_moment) out.second_moment.push_back(t.template cast<To>());
  return out;
}

ModelContext context_for(const Checkpoint& ckpt, const LossConfig& loss) {
  return ModelContext{ckpt.mean_shape, GraphTopology::fully_connected(ckpt.arch.num_landmarks), loss};
}

template <typename Scalar>
TrainedRun pretrain_as(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed) {
  TrainerConfig tc = cfg.pretrain;
  tc.rng_seed = seed;
  const ArchDescriptor arch = architecture_for(cfg, data);
  PretrainResult<Scalar> r = pretrain<Scalar>(data.train_labeled, data.validation, arch, cfg.loss, tc);
  TrainedRun run{"pretrain", seed, {}, std::move(r.history)};
  run.checkpoint.arch = arch;
  run.checkpoint.mean_shape = r.mean_shape;
  run.checkpoint.global_step = r.optimizer.step;
  run.checkpoint.models.emplace_back("model", r.params.template cast<float>());
  run.checkpoint.optimizer = cast_optimizer<float>(r.optimizer);
  return run;
}

template <typename Scalar>
TrainedRun strategy_as(const ExperimentConfig& cfg, const Dataset& data, const Checkpoint& pretrained, Strategy strategy,
                       std::uint64_t seed) {
  TrainerConfig tc = cfg.train;
  tc.strategy = strategy;
  tc.rng_seed = seed;
  const DagModelParams<Scalar> start = inference_model(pretrained).template cast<Scalar>();
  SslResult<Scalar> r = ssl_train(start, context_for(pretrained, cfg.loss), data.train_labeled, data.train_unlabeled,
                                  data.validation, tc);
  TrainedRun run{to_string(strategy), seed, {}, std::move(r.history)};
  run.checkpoint.arch = pretrained.arch;
  run.checkpoint.mean_shape = pretrained.mean_shape;
  run.checkpoint.global_step = r.global_step;
  run.checkpoint.models.emplace_back("student", r.student.template cast<float>());
  if (r.teacher) run.checkpoint.models.emplace_back("teacher", r.teacher->template cast<float>());
  run.checkpoint.optimizer = cast_optimizer<float>(r.optimizer);
  return run;
}

template <typename Scalar>
std::vector<LandmarkSet> predict_as(const Checkpoint& ckpt, const std::vector<Sample>& samples) {
  return predict(inference_model(ckpt).template cast<Scalar>(), context_for(ckpt, LossConfig{}), samples);
}

/// Runs `count` independent tasks on up to `jobs` threads; rethrows the first failure.
template <typename Fn>
void run_parallel(std::size_t count, int jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.data.path) return read_dataset(*cfg.data.path);
  return generate_dataset(cfg.data.generate);
}

ArchDescriptor architecture_for(const ExperimentConfig& cfg, const Dataset& data) {
  if (data.height != data.width) throw ValidationError("dataset images must be square");
  ArchDescriptor arch = cfg.model;
  arch.image_size = data.width;
  arch.num_landmarks = data.num_landmarks;
  arch.validate();
  return arch;
}

TrainedRun run_pretrain(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed) {
  labels_of(data.train_labeled);
  return cfg.precision == Precision::kFloat64 ? pretrain_as<double>(cfg, data, seed) : pretrain_as<float>(cfg, data, seed);
}

TrainedRun run_strategy(const ExperimentConfig& cfg, const Dataset& data, const Checkpoint& pretrained, Strategy strategy,
                        std::uint64_t seed) {
  if (!(architecture_for(cfg, data) == pretrained.arch)) {
    throw ValidationError("pre-trained checkpoint architecture does not match the config and dataset");
  }
  return cfg.precision == Precision::kFloat64 ? strategy_as<double>(cfg, data, pretrained, strategy, seed)
                                              : strategy_as<float>(cfg, data, pretrained, strategy, seed);
}

const DagModelParams<float>& inference_model(const Checkpoint& ckpt) {
  for (const char* role : {"teacher", "student", "model"}) {
    if (ckpt.has_model(role)) return ckpt.model(role);
  }
  throw FormatError("checkpoint holds no usable model");
}

std::vector<LandmarkSet> predict_checkpoint(const Checkpoint& ckpt, const std::vector<Sample>& samples, Precision precision) {
  return precision == Precision::kFloat64 ? predict_as<double>(ckpt, samples) : predict_as<float>(ckpt, samples);
}

MetricSummary evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<Sample>& test, const EvalConfig& eval,
                                  Precision precision) {
  if (test.empty()) throw ValidationError("evaluation set is empty");
  const std::vector<LandmarkSet> gt = labels_of(test);
  const std::vector<LandmarkSet> pred = predict_checkpoint(ckpt, test, precision);
  std::vector<std::vector<double>> errors;
  for (std::size_t i = 0; i < test.size(); ++i) {
    errors.push_back(euclidean_errors(pred[i], gt[i], static_cast<double>(test[i].image.cols()),
                                      static_cast<double>(test[i].image.rows())));
  }
  return summarize(errors, static_cast<double>(test.front().image.cols()), eval.failure_fraction, eval.population_std);
}

void write_history(const TrainHistory& h, const fs::path& path) {
  using nlohmann::json;
  json steps = json::array();
  for (const StepRecord& s : h.steps) {
    steps.push_back({{"step", s.step}, {"kind", s.kind == BatchKind::kLabeled ? "labeled" : "unlabeled"}, {"loss", s.loss}});
  }
  json epochs = json::array();
  for (const EpochRecord& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"lr", e.lr},
                      {"train_loss", e.train_loss},
                      {"val_mean_error", std::isfinite(e.val_mean_error) ? json(e.val_mean_error) : json(nullptr)}});
  }
  const json doc{{"selected_epoch", h.selected_epoch},
                 {"labeled_steps", h.labeled_steps},
                 {"unlabeled_steps", h.unlabeled_steps},
                 {"models_allocated", h.models_allocated},
                 {"converged", h.converged},
                 {"epochs", std::move(epochs)},
                 {"steps", std::move(steps)}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

std::vector<ReportRow> reproduce_table(const ExperimentConfig& cfg, const Dataset& data, int jobs, const fs::path& out_dir) {
  const auto& seeds = cfg.reproduce.seeds;
  const auto& strategies = cfg.reproduce.strategies;
  fs::create_directories(out_dir);
  auto seed_dir = [&](std::uint64_t seed) { return out_dir / ("seed-" + std::to_string(seed)); };

  std::vector<Checkpoint> pretrained(seeds.size());
  run_parallel(seeds.size(), jobs, [&](std::size_t i) {
    TrainedRun run = run_pretrain(cfg, data, seeds[i]);
    log_info("seed ", seeds[i], ": pre-training done, selected epoch ", run.history.selected_epoch);
    write_checkpoint(run.checkpoint, seed_dir(seeds[i]) / "pretrain.ckpt");
    write_history(run.history, seed_dir(seeds[i]) / "pretrain.history.json");
    pretrained[i] = std::move(run.checkpoint);
  });

  const std::size_t n = seeds.size() * strategies.size();
  std::vector<ReportRow> rows(n);
  run_parallel(n, jobs, [&](std::size_t task) {
    const std::size_t si = task / strategies.size();
    const Strategy strategy = strategies[task % strategies.size()];
    TrainedRun run = run_strategy(cfg, data, pretrained[si], strategy, seeds[si]);
    const fs::path stem = seed_dir(seeds[si]) / to_string(strategy);
    write_checkpoint(run.checkpoint, fs::path(stem).concat(".ckpt"));
    write_history(run.history, fs::path(stem).concat(".history.json"));
    ReportRow row{run.method, seeds[si], evaluate_checkpoint(run.checkpoint, data.test, cfg.eval, cfg.precision),
                  run.history.converged};
    log_info("seed ", seeds[si], " ", row.method, ": mean error ", row.summary.mean_error, " px");
    rows[task] = std::move(row);
  });
  emit_report(rows, out_dir / "report");
  return rows;
}

}  // namespace fsdag
