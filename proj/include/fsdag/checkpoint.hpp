#pragma once

#include "fsdag/geometry.hpp"
#include "fsdag/model.hpp"
#include "fsdag/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fsdag {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume or evaluate a run. Byte layout: docs/checkpoint-format.md.
struct Checkpoint {
  ArchDescriptor arch;
  MeanShape mean_shape;
  std::int64_t global_step = 0;
  std::vector<std::pair<std::string, DagModelParams<float>>> models;  // role -> parameters
  std::optional<OptimizerState<float>> optimizer;

  /// Parameters stored under `role`; throws std::out_of_range if absent.
  const DagModelParams<float>& model(std::string_view role) const;
  bool has_model(std::string_view role) const;
  bool operator==(const Checkpoint&) const = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace fsdag
