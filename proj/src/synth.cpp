#include "fsdag/synth.hpp"

#include "fsdag/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fsdag {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kTolerance = 1e-12;

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

// Zero outside the image.
double sample_bilinear(const Image& img, double x, double y) {
  const Eigen::Index h = img.rows(), w = img.cols();
  const double x0f = std::floor(x), y0f = std::floor(y);
  const Eigen::Index x0 = static_cast<Eigen::Index>(x0f), y0 = static_cast<Eigen::Index>(y0f);
  const double fx = x - x0f, fy = y - y0f;
  auto at = [&](Eigen::Index yy, Eigen::Index xx) {
    return (xx >= 0 && xx < w && yy >= 0 && yy < h) ? img(yy, xx) : 0.0;
  };
  return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) + fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
}

}  // namespace

std::vector<JointTemplate> SyntheticShapeSpec::default_skeleton() {
  return {
      {-1, 0, 0, 0, 0, 3.0},       // 0 base
      {0, 0, 12, 0.22, 0.12, 1.5},  // 1 trunk top
      {1, 0, 20, 0.12, 0.15, 3.5},  // 2 head
      {1, -100, 20, 0.16, 0.15, 1.5},  // 3 left elbow
      {3, 35, 25, 0.14, 0.15, 2.5},    // 4 left hand
      {1, 100, 20, 0.16, 0.15, 2.0},   // 5 right elbow
      {5, -35, 25, 0.14, 0.15, 1.2},   // 6 right hand
      {0, 180, 20, 0.15, 0.15, 2.2},   // 7 foot
  };
}

void SyntheticShapeSpec::validate() const {
  if (num_landmarks < 3) throw std::invalid_argument("SyntheticShapeSpec: need at least 3 landmarks");
  if (static_cast<Eigen::Index>(joints.size()) != num_landmarks) {
    throw std::invalid_argument("SyntheticShapeSpec: num_landmarks " + std::to_string(num_landmarks) +
                                " does not match template with " + std::to_string(joints.size()) + " joints");
  }
  if (image_size < 8) throw std::invalid_argument("SyntheticShapeSpec: image_size must be >= 8");
  if (joints.front().parent != -1) throw std::invalid_argument("SyntheticShapeSpec: joint 0 must be the root");
  for (std::size_t i = 1; i < joints.size(); ++i) {
    const auto& j = joints[i];
    if (j.parent < 0 || static_cast<std::size_t>(j.parent) >= i) {
      throw std::invalid_argument("SyntheticShapeSpec: joint parents must precede their children");
    }
    if (!(j.length > 0) || j.length_jitter < 0 || j.length_jitter >= 1 || j.angle_jitter_deg < 0) {
      throw std::invalid_argument("SyntheticShapeSpec: degenerate joint ranges");
    }
  }
  if (!(scale_min > 0 && scale_min <= scale_max) || !(stroke_width_min > 0 && stroke_width_min <= stroke_width_max) ||
      rotation_jitter_deg < 0 || root_jitter < 0 || noise_level < 0 || border < 0 || border >= 0.5) {
    throw std::invalid_argument("SyntheticShapeSpec: invalid ranges");
  }
  for (double v : {stroke_intensity, marker_intensity, background}) {
    if (v < 0 || v > 1) throw std::invalid_argument("SyntheticShapeSpec: intensities must lie in [0, 1]");
  }
}

Sample generate_sample(const SyntheticShapeSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::size_t k = spec.joints.size();
  const double side = static_cast<double>(spec.image_size - 1);

  LandmarkSet lm(static_cast<Eigen::Index>(k));
  std::vector<double> direction(k, 0.0);
  bool inside = false;
  for (int attempt = 0; attempt < 1000 && !inside; ++attempt) {
    const double rotation = spec.rotation_jitter_deg * unit(rng) * kDegToRad;
    const double scale = spec.scale_min + (spec.scale_max - spec.scale_min) * 0.5 * (unit(rng) + 1.0);
    lm.coords()(0, 0) = spec.root_x + spec.root_jitter * unit(rng);
    lm.coords()(0, 1) = spec.root_y + spec.root_jitter * unit(rng);
    direction[0] = rotation;
    for (std::size_t i = 1; i < k; ++i) {
      const auto& j = spec.joints[i];
      const auto parent = static_cast<std::size_t>(j.parent);
      const double angle = direction[parent] + (j.angle_deg + j.angle_jitter_deg * unit(rng)) * kDegToRad;
      const double length = scale * j.length * (1.0 + j.length_jitter * unit(rng));
      direction[i] = angle;
      lm.coords()(static_cast<Eigen::Index>(i), 0) = lm.x(static_cast<Eigen::Index>(parent)) + length * std::sin(angle);
      lm.coords()(static_cast<Eigen::Index>(i), 1) = lm.y(static_cast<Eigen::Index>(parent)) - length * std::cos(angle);
    }
    inside = (lm.coords().array() >= spec.border).all() && (lm.coords().array() <= 1.0 - spec.border).all();
  }
  if (!inside) throw std::invalid_argument("generate_sample: template does not fit inside the image");

  const double stroke = spec.stroke_width_min + (spec.stroke_width_max - spec.stroke_width_min) * 0.5 * (unit(rng) + 1.0);
  const Eigen::Index n = spec.image_size;
  Image img = Image::Constant(n, n, spec.background);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double px = static_cast<double>(c), py = static_cast<double>(r);
      double v = spec.background;
      for (std::size_t i = 1; i < k; ++i) {
        const auto p = static_cast<Eigen::Index>(spec.joints[i].parent);
        const auto q = static_cast<Eigen::Index>(i);
        const double d = segment_distance(px, py, lm.x(p) * side, lm.y(p) * side, lm.x(q) * side, lm.y(q) * side);
        v = std::max(v, spec.stroke_intensity * std::clamp(0.5 * stroke + 0.5 - d, 0.0, 1.0));
      }
      for (std::size_t i = 0; i < k; ++i) {
        const auto q = static_cast<Eigen::Index>(i);
        const double d = std::hypot(px - lm.x(q) * side, py - lm.y(q) * side);
        v = std::max(v, spec.marker_intensity * std::clamp(spec.joints[i].marker_radius + 0.5 - d, 0.0, 1.0));
      }
      img(r, c) = std::clamp(v + spec.noise_level * noise(rng), 0.0, 1.0);
    }
  }
  return Sample{"sample-" + std::to_string(seed), quantize_8bit(img), std::move(lm)};
}

std::pair<double, double> bounding_box_extent(const LandmarkSet& landmarks) {
  if (landmarks.size() == 0) return {0.0, 0.0};
  const auto& c = landmarks.coords();
  return {c.col(0).maxCoeff() - c.col(0).minCoeff(), c.col(1).maxCoeff() - c.col(1).minCoeff()};
}

AugmentParams sample_augment_params(std::uint64_t seed, double box_w, double box_h, const AugmentRanges& ranges) {
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  AugmentParams p;
  p.rotation_deg = ranges.max_rotation_deg * unit(rng);
  const double lo = std::log(ranges.scale_min), hi = std::log(ranges.scale_max);
  p.scale = std::clamp(std::exp(lo + (hi - lo) * 0.5 * (unit(rng) + 1.0)), ranges.scale_min, ranges.scale_max);
  p.dx = ranges.translation_fraction * box_w * unit(rng);
  p.dy = ranges.translation_fraction * box_h * unit(rng);
  return p;
}

LandmarkSet transform_landmarks(const LandmarkSet& landmarks, const AugmentParams& params) {
  if (params.rotation_deg == 0 && params.scale == 1 && params.dx == 0 && params.dy == 0) return landmarks;
  const double a = params.rotation_deg * kDegToRad;
  const double c = std::cos(a) * params.scale, s = std::sin(a) * params.scale;
  LandmarkSet out(landmarks.size());
  for (Eigen::Index i = 0; i < landmarks.size(); ++i) {
    const double x = landmarks.x(i) - 0.5, y = landmarks.y(i) - 0.5;
    out.coords()(i, 0) = c * x - s * y + 0.5 + params.dx;
    out.coords()(i, 1) = s * x + c * y + 0.5 + params.dy;
  }
  return out;
}

Sample augment(const Sample& sample, const AugmentParams& params, const AugmentRanges& ranges) {
  if (std::abs(params.rotation_deg) > ranges.max_rotation_deg + kTolerance) {
    throw std::invalid_argument("augment: rotation outside +-" + std::to_string(ranges.max_rotation_deg) + " degrees");
  }
  if (params.scale < ranges.scale_min - kTolerance || params.scale > ranges.scale_max + kTolerance) {
    throw std::invalid_argument("augment: scale outside [" + std::to_string(ranges.scale_min) + ", " +
                                std::to_string(ranges.scale_max) + "]");
  }
  double max_dx = 0.5, max_dy = 0.5;
  if (sample.landmarks) {
    const auto [w, h] = bounding_box_extent(*sample.landmarks);
    max_dx = ranges.translation_fraction * w;
    max_dy = ranges.translation_fraction * h;
  }
  if (std::abs(params.dx) > max_dx + kTolerance || std::abs(params.dy) > max_dy + kTolerance) {
    throw std::invalid_argument("augment: translation outside the landmark bounding box range");
  }

  Sample out{sample.id, Image(sample.image.rows(), sample.image.cols()), std::nullopt};
  if (sample.landmarks) out.landmarks = transform_landmarks(*sample.landmarks, params);
  const Eigen::Index h = sample.image.rows(), w = sample.image.cols();
  if (params.rotation_deg == 0 && params.scale == 1 && params.dx == 0 && params.dy == 0) {
    out.image = sample.image;
    return out;
  }
  const double a = params.rotation_deg * kDegToRad;
  const double c = std::cos(a) / params.scale, s = std::sin(a) / params.scale;
  const double sx = static_cast<double>(std::max<Eigen::Index>(w - 1, 1));
  const double sy = static_cast<double>(std::max<Eigen::Index>(h - 1, 1));
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index col = 0; col < w; ++col) {
      // Inverse map of the output pixel into the source image, in normalized units.
      const double qx = static_cast<double>(col) / sx - 0.5 - params.dx;
      const double qy = static_cast<double>(r) / sy - 0.5 - params.dy;
      const double px = c * qx + s * qy + 0.5;
      const double py = -s * qx + c * qy + 0.5;
      out.image(r, col) = std::clamp(sample_bilinear(sample.image, px * sx, py * sy), 0.0, 1.0);
    }
  }
  return out;
}

Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0)) throw std::invalid_argument("add_gaussian_noise: sigma must be >= 0");
  if (sigma == 0) return image;
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, sigma);
  Image out(image.rows(), image.cols());
  for (Eigen::Index i = 0; i < image.size(); ++i) out.data()[i] = std::clamp(image.data()[i] + normal(rng), 0.0, 1.0);
  return out;
}

Image resize_normalize(const Image& raw, Eigen::Index height, Eigen::Index width) {
  if (raw.rows() < 1 || raw.cols() < 1 || height < 1 || width < 1) {
    throw std::invalid_argument("resize_normalize: image dimensions must be >= 1");
  }
  const double lo = raw.minCoeff(), hi = raw.maxCoeff();
  Image norm = hi > lo ? Image((raw - lo) / (hi - lo)) : Image(Image::Zero(raw.rows(), raw.cols()));
  if (raw.rows() == height && raw.cols() == width) return norm;

  const double ry = static_cast<double>(raw.rows()) / static_cast<double>(height);
  const double rx = static_cast<double>(raw.cols()) / static_cast<double>(width);
  Image out(height, width);
  for (Eigen::Index r = 0; r < height; ++r) {
    const double y = std::clamp((static_cast<double>(r) + 0.5) * ry - 0.5, 0.0, static_cast<double>(raw.rows() - 1));
    for (Eigen::Index c = 0; c < width; ++c) {
      const double x = std::clamp((static_cast<double>(c) + 0.5) * rx - 0.5, 0.0, static_cast<double>(raw.cols() - 1));
      const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(x)), y0 = static_cast<Eigen::Index>(std::floor(y));
      const Eigen::Index x1 = std::min(x0 + 1, raw.cols() - 1), y1 = std::min(y0 + 1, raw.rows() - 1);
      const double fx = x - static_cast<double>(x0), fy = y - static_cast<double>(y0);
      out(r, c) = (1 - fy) * ((1 - fx) * norm(y0, x0) + fx * norm(y0, x1)) + fy * ((1 - fx) * norm(y1, x0) + fx * norm(y1, x1));
    }
  }
  return out;
}

Image quantize_8bit(const Image& image) {
  return (image.max(0.0).min(1.0) * 255.0).round() / 255.0;
}

}  // namespace fsdag
