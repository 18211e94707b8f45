#pragma once

#include "fsdag/ops.hpp"
#include "fsdag/tape.hpp"
#include "fsdag/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace fsdag {

struct GradCheckResult {
  double max_rel_error = 0.0;
  Index checked = 0;
  std::vector<Index> skipped;  // coordinates whose perturbation crosses a kink
};

/// Compares the reverse-mode gradient of a scalar tape program against
/// central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
///
/// `program(tape, x)` must build a scalar result from the leaf `x`. A
/// coordinate is skipped when the perturbed evaluations fall in different
/// piecewise regions (relu/abs/hinge sign, bilinear cell or clamp state).
/// Relative error is |g - fd| / max(|g|, |fd|, floor).
template <typename Program>
GradCheckResult finite_diff_check(Program&& program, const Tensor<double>& x, double eps = 1e-4,
                                  double floor = 1e-6) {
  struct Eval {
    double value;
    std::vector<std::int64_t> regions;
  };
  auto evaluate = [&](const Tensor<double>& at) {
    Tape<double> tape;
    tape.set_track_regions(true);
    Var<double> leaf = tape.leaf(at, false);
    Var<double> y = program(tape, leaf);
    return Eval{y.value().item(), tape.regions()};
  };

  Tape<double> tape;
  tape.set_track_regions(true);
  Var<double> leaf = tape.leaf(x, true);
  Var<double> y = program(tape, leaf);
  tape.backward(y);
  const Tensor<double> grad = tape.grad(leaf);
  const std::vector<std::int64_t> center_regions = tape.regions();

  GradCheckResult result;
  Tensor<double> probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const Eval plus = evaluate(probe);
    probe[i] = x[i] - eps;
    const Eval minus = evaluate(probe);
    probe[i] = x[i];
    if (plus.regions != minus.regions || plus.regions != center_regions) {
      result.skipped.push_back(i);
      continue;
    }
    const double numeric = (plus.value - minus.value) / (2.0 * eps);
    const double denom = std::max({std::abs(grad[i]), std::abs(numeric), floor});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(grad[i] - numeric) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace fsdag
