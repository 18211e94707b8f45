#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsdag {

struct GradCheckEntry {
  std::string name;
  int instances = 0;
  double max_rel_error = 0.0;
  long long checked = 0;
  long long skipped = 0;
};

/// Finite-difference checks of every primitive op, the landmark and
/// consistency losses and one full model forward, each over `instances`
/// random double-precision inputs.
std::vector<GradCheckEntry> run_gradcheck_suite(int instances = 50, std::uint64_t seed = 0);

inline constexpr double kGradCheckTolerance = 1e-3;

}  // namespace fsdag
