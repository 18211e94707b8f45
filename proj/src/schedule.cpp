#include "fsdag/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace fsdag {

double alpha_schedule(std::int64_t step) {
  if (step < 0) throw std::invalid_argument("alpha_schedule: negative step");
  const double t = static_cast<double>(step);
  return std::min(std::max(1.0 - 1.0 / (t + 1.0), 0.99), 0.999);
}

double lr_at_epoch(std::int64_t epoch, double base_lr, double decay, std::int64_t every) {
  if (epoch < 0) throw std::invalid_argument("lr_at_epoch: negative epoch");
  if (every < 1) throw std::invalid_argument("lr_at_epoch: decay interval must be >= 1");
  return base_lr * std::pow(decay, static_cast<double>(epoch / every));
}

std::vector<ScheduledBatch> build_batch_schedule(std::int64_t n_labeled_batches, std::int64_t n_unlabeled_batches,
                                                 std::int64_t ratio) {
  if (ratio < 1) throw std::invalid_argument("build_batch_schedule: ratio must be >= 1");
  if (n_labeled_batches < 1) throw std::invalid_argument("build_batch_schedule: need at least one labeled batch");
  if (n_unlabeled_batches < 0) throw std::invalid_argument("build_batch_schedule: negative unlabeled batch count");
  std::vector<ScheduledBatch> out;
  std::int64_t labeled = 0;
  for (std::int64_t u = 0; u < n_unlabeled_batches; ++u) {
    if (u % ratio == 0) out.push_back({BatchKind::kLabeled, labeled++ % n_labeled_batches});
    out.push_back({BatchKind::kUnlabeled, u});
  }
  return out;
}

}  // namespace fsdag
