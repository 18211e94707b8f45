#pragma once

#include "fsdag/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fsdag {

/// One image with an optional annotation (absent for unlabeled samples).
struct Sample {
  std::string id;
  Image image;
  std::optional<LandmarkSet> landmarks;

  bool operator==(const Sample& other) const {
    return id == other.id && image.rows() == other.image.rows() && image.cols() == other.image.cols() &&
           (image == other.image).all() && landmarks == other.landmarks;
  }
};

/// A skeleton joint placed relative to its parent. Angles are measured
/// clockwise from the parent limb direction (image "up" for children of the
/// root); lengths are fractions of the image side.
struct JointTemplate {
  int parent = -1;
  double angle_deg = 0;
  double angle_jitter_deg = 0;
  double length = 0;
  double length_jitter = 0;  // relative, e.g. 0.15 = +-15 %
  double marker_radius = 2;  // pixels
};

struct SyntheticShapeSpec {
  Eigen::Index image_size = 64;
  Eigen::Index num_landmarks = 8;
  std::vector<JointTemplate> joints = default_skeleton();
  double root_x = 0.5;
  double root_y = 0.6;
  double root_jitter = 0.06;
  double rotation_jitter_deg = 12;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double stroke_width_min = 1.5;  // pixels
  double stroke_width_max = 2.5;
  double stroke_intensity = 0.55;
  double marker_intensity = 1.0;
  double background = 0.1;
  double noise_level = 0.03;
  double border = 0.04;  // landmarks stay inside [border, 1 - border]

  static std::vector<JointTemplate> default_skeleton();
  void validate() const;
};

struct AugmentParams {
  double rotation_deg = 0;
  double scale = 1;
  double dx = 0;  // normalized units
  double dy = 0;
};

struct AugmentRanges {
  double max_rotation_deg = 30;
  double scale_min = 0.8;
  double scale_max = 1.25;
  double translation_fraction = 0.5;  // of the landmark bounding box extent
};

/// Renders an articulated figure; landmarks are the joint positions.
Sample generate_sample(const SyntheticShapeSpec& spec, std::uint64_t seed);

/// Draws augmentation parameters. `box_w`, `box_h` are the landmark bounding
/// box extents (normalized) bounding the translation.
AugmentParams sample_augment_params(std::uint64_t seed, double box_w, double box_h, const AugmentRanges& ranges = {});

/// Similarity transform about the image centre applied to image (bilinear,
/// zero fill) and landmarks (exact).
Sample augment(const Sample& sample, const AugmentParams& params, const AugmentRanges& ranges = {});

LandmarkSet transform_landmarks(const LandmarkSet& landmarks, const AugmentParams& params);

/// Adds i.i.d. N(0, sigma^2) noise, then clips to [0, 1].
Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed);

/// Rescales intensities linearly to [0, 1] (constant images map to 0), then
/// bilinearly resizes with pixel-centre alignment.
Image resize_normalize(const Image& raw, Eigen::Index height, Eigen::Index width);

/// Bounding box extents (width, height) of a landmark set.
std::pair<double, double> bounding_box_extent(const LandmarkSet& landmarks);

/// Rounds intensities to the 8-bit grid used by dataset files.
Image quantize_8bit(const Image& image);

}  // namespace fsdag
