#pragma once

#include "fsdag/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fsdag {

inline constexpr int kDatasetFormatVersion = 1;

struct SplitCounts {
  Eigen::Index train_labeled = 5;
  Eigen::Index train_unlabeled = 500;
  Eigen::Index validation = 5;
  Eigen::Index test = 200;
};

struct GenerationSpec {
  SyntheticShapeSpec shape;
  SplitCounts counts;
  std::uint64_t seed = 0;
};

/// In-memory dataset. Unlabeled samples carry no landmarks.
struct Dataset {
  Eigen::Index num_landmarks = 0;
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  std::uint64_t generator_seed = 0;
  std::vector<Sample> train_labeled;
  std::vector<Sample> train_unlabeled;
  std::vector<Sample> validation;
  std::vector<Sample> test;

  Eigen::Index total() const {
    return static_cast<Eigen::Index>(train_labeled.size() + train_unlabeled.size() + validation.size() + test.size());
  }
  bool operator==(const Dataset&) const = default;
};

/// Sample i of the whole dataset uses seed derive_seed({spec.seed, i}).
Dataset generate_dataset(const GenerationSpec& spec);

/// Writes manifest.json plus images/<id>.pgm (8-bit binary PGM).
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Throws FormatError on a missing or inconsistent manifest and VersionError
/// on an unsupported version; nothing is returned on failure.
Dataset read_dataset(const std::filesystem::path& dir);

void write_pgm(const Image& image, const std::filesystem::path& path);
Image read_pgm(const std::filesystem::path& path);

}  // namespace fsdag
