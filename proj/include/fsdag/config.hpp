#pragma once

#include "fsdag/dataset.hpp"
#include "fsdag/losses.hpp"
#include "fsdag/model.hpp"
#include "fsdag/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fsdag {

enum class Precision { kFloat32, kFloat64 };

struct DataConfig {
  std::optional<std::filesystem::path> path;  // existing dataset directory; otherwise generated
  GenerationSpec generate;
};

struct EvalConfig {
  double failure_fraction = 0.05;
  bool population_std = true;
  std::int64_t overlay_count = 4;
};

struct ReproduceConfig {
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<Strategy> strategies{Strategy::kSupervisedOnly, Strategy::kMeanTeacher,     Strategy::kMeanTeacherJs,
                                   Strategy::kPseudoLabel,    Strategy::kPiModel,         Strategy::kTemporalEnsemble};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "runs";
  Precision precision = Precision::kFloat32;
  DataConfig data;
  ArchDescriptor model;  // image_size and num_landmarks follow the data section
  LossConfig loss;
  TrainerConfig pretrain;
  TrainerConfig train;
  EvalConfig eval;
  ReproduceConfig reproduce;
};

/// Documented defaults for every section.
ExperimentConfig default_config();

/// Strict parse: unknown keys and type mismatches raise ValidationError naming
/// the offending key. A missing file raises ValidationError carrying the path.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Range checks plus existence of referenced paths.
void validate_config(const ExperimentConfig& cfg);

/// Fully resolved config as JSON text; parse_config_text(snapshot) round-trips.
std::string config_snapshot(const ExperimentConfig& cfg);
void write_config_snapshot(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Strict parse of a bare generation spec (the `data.generate` schema).
GenerationSpec parse_generation_spec(const std::filesystem::path& path);

}  // namespace fsdag
