#pragma once

#include "fsdag/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fsdag {

/// Teacher smoothing coefficient min(max(1 - 1/(t+1), 0.99), 0.999).
double alpha_schedule(std::int64_t step);

/// base_lr * decay^floor(epoch / every).
double lr_at_epoch(std::int64_t epoch, double base_lr, double decay = 0.96, std::int64_t every = 10);

enum class BatchKind { kLabeled, kUnlabeled };

struct ScheduledBatch {
  BatchKind kind;
  std::int64_t index;  // labeled indices cycle modulo the labeled batch count

  bool operator==(const ScheduledBatch&) const = default;
};

/// One labeled batch followed by `ratio` unlabeled batches, repeated until all
/// `n_unlabeled_batches` have been scheduled once.
std::vector<ScheduledBatch> build_batch_schedule(std::int64_t n_labeled_batches, std::int64_t n_unlabeled_batches,
                                                 std::int64_t ratio);

/// theta_T <- alpha theta_T + (1 - alpha) theta_S, elementwise.
template <typename Scalar>
void ema_update(DagModelParams<Scalar>& teacher, const DagModelParams<Scalar>& student, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("ema_update: alpha must lie in [0, 1]");
  if (!(teacher.arch() == student.arch())) throw std::invalid_argument("ema_update: architectures differ");
  const Scalar a = static_cast<Scalar>(alpha);
  const Scalar b = static_cast<Scalar>(1.0 - alpha);
  for (std::size_t i = 0; i < teacher.count(); ++i) {
    auto& t = teacher.tensors()[i].values();
    const auto& s = student.tensors()[i].values();
    if (alpha == 1.0) continue;
    if (alpha == 0.0) {
      t = s;
      continue;
    }
    t = a * t + b * s;
  }
}

}  // namespace fsdag
