#include "fsdag/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fsdag {

std::vector<double> euclidean_errors(const LandmarkSet& pred, const LandmarkSet& gt, double width_px, double height_px) {
  if (pred.size() != gt.size()) throw std::invalid_argument("euclidean_errors: landmark counts differ");
  if (!(width_px > 0)) throw std::invalid_argument("euclidean_errors: width must be positive");
  if (height_px <= 0) height_px = width_px;
  std::vector<double> e(static_cast<std::size_t>(pred.size()));
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    e[static_cast<std::size_t>(i)] = std::hypot((pred.x(i) - gt.x(i)) * width_px, (pred.y(i) - gt.y(i)) * height_px);
  }
  return e;
}

MetricSummary summarize(const std::vector<std::vector<double>>& errors, double width_px, double failure_fraction,
                        bool population_std) {
  if (errors.empty()) throw std::invalid_argument("summarize: no images");
  MetricSummary s;
  s.errors = errors;
  s.threshold_px = failure_fraction * width_px;
  s.sample_count = errors.size();
  s.population_std = population_std;
  double total = 0;
  std::size_t n = 0, failed_images = 0, failed_landmarks = 0;
  for (const auto& image : errors) {
    if (image.empty()) throw std::invalid_argument("summarize: image without landmark errors");
    bool failed = false;
    for (double e : image) {
      total += e;
      ++n;
      if (e > s.threshold_px) {
        failed = true;
        ++failed_landmarks;
      }
    }
    failed_images += failed ? 1 : 0;
  }
  s.mean_error = total / static_cast<double>(n);
  double sq = 0;
  for (const auto& image : errors)
    for (double e : image) sq += (e - s.mean_error) * (e - s.mean_error);
  const double dof = population_std ? static_cast<double>(n) : static_cast<double>(std::max<std::size_t>(n - 1, 1));
  s.std_error = std::sqrt(sq / dof);
  s.failure_rate = static_cast<double>(failed_images) / static_cast<double>(errors.size());
  s.landmark_failure_rate = static_cast<double>(failed_landmarks) / static_cast<double>(n);
  return s;
}

}  // namespace fsdag
