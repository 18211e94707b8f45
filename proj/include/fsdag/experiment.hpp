#pragma once

#include "fsdag/checkpoint.hpp"
#include "fsdag/config.hpp"
#include "fsdag/dataset.hpp"
#include "fsdag/metrics.hpp"
#include "fsdag/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fsdag {

/// Reads `data.path` or generates from `data.generate`.
Dataset load_dataset(const ExperimentConfig& cfg);

/// Architecture with image size and landmark count taken from the dataset.
ArchDescriptor architecture_for(const ExperimentConfig& cfg, const Dataset& data);

struct TrainedRun {
  std::string method;
  std::uint64_t seed = 0;
  Checkpoint checkpoint;
  TrainHistory history;
};

/// Supervised pre-training; the checkpoint holds one model under role "model".
TrainedRun run_pretrain(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed);

/// Strategy run started from a pre-trained checkpoint. Roles "student" and,
/// for teacher-bearing strategies, "teacher".
TrainedRun run_strategy(const ExperimentConfig& cfg, const Dataset& data, const Checkpoint& pretrained, Strategy strategy,
                        std::uint64_t seed);

/// Role used for inference: teacher, else student, else model.
const DagModelParams<float>& inference_model(const Checkpoint& ckpt);

std::vector<LandmarkSet> predict_checkpoint(const Checkpoint& ckpt, const std::vector<Sample>& samples, Precision precision);

MetricSummary evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<Sample>& test, const EvalConfig& eval,
                                  Precision precision);

/// Per-step losses and per-epoch validation errors as JSON.
void write_history(const TrainHistory& history, const std::filesystem::path& path);

/// All configured strategies over all configured seeds. Per seed one
/// pre-training run is shared by the strategies. Runs are independent, so up
/// to `jobs` of them execute concurrently; results do not depend on `jobs`.
/// Writes checkpoints, histories and `report.{json,txt}` under `out_dir`.
std::vector<ReportRow> reproduce_table(const ExperimentConfig& cfg, const Dataset& data, int jobs,
                                       const std::filesystem::path& out_dir);

}  // namespace fsdag
