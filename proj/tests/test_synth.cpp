#include "fsdag/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fsdag;

namespace {

/// Gaussian blobs of std 1.2 px at each landmark on a black background.
Sample blob_sample(const LandmarkSet& lm, Eigen::Index n) {
  Image img = Image::Zero(n, n);
  const double side = static_cast<double>(n - 1);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index i = 0; i < lm.size(); ++i) {
        const double dx = static_cast<double>(c) - lm.x(i) * side, dy = static_cast<double>(r) - lm.y(i) * side;
        img(r, c) = std::max(img(r, c), std::exp(-(dx * dx + dy * dy) / (2 * 1.2 * 1.2)));
      }
  return Sample{"blobs", img, lm};
}

}  // namespace

TEST(GenerateSample, DeterministicInsideAndSeedDependent) {
  const SyntheticShapeSpec spec;
  const Sample a = generate_sample(spec, 1);
  EXPECT_EQ(a, generate_sample(spec, 1));
  EXPECT_FALSE((a.image == generate_sample(spec, 2).image).all());
  ASSERT_TRUE(a.landmarks.has_value());
  EXPECT_EQ(a.landmarks->size(), 8);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Sample s = generate_sample(spec, seed);
    EXPECT_TRUE((s.landmarks->coords().array() >= 0).all() && (s.landmarks->coords().array() <= 1).all());
    EXPECT_TRUE((s.image >= 0).all() && (s.image <= 1).all());
    EXPECT_EQ(s.image.rows(), 64);
  }
}

TEST(GenerateSample, RejectsInconsistentTemplate) {
  SyntheticShapeSpec spec;
  spec.num_landmarks = 6;
  EXPECT_THROW(generate_sample(spec, 0), std::invalid_argument);
  spec = SyntheticShapeSpec{};
  spec.joints.resize(2);
  spec.num_landmarks = 2;
  EXPECT_THROW(generate_sample(spec, 0), std::invalid_argument);
}

TEST(Augment, IdentityAndRange) {
  const Sample s = generate_sample(SyntheticShapeSpec{}, 3);
  const Sample same = augment(s, AugmentParams{});
  EXPECT_EQ(same.landmarks, s.landmarks);
  EXPECT_LE((same.image - s.image).abs().maxCoeff(), 1e-12);
  EXPECT_THROW(augment(s, AugmentParams{31, 1, 0, 0}), std::invalid_argument);
  EXPECT_THROW(augment(s, AugmentParams{0, 1.3, 0, 0}), std::invalid_argument);
  EXPECT_THROW(augment(s, AugmentParams{0, 1, 0.9, 0}), std::invalid_argument);
}

TEST(Augment, HandRotationAboutCentre) {
  const LandmarkSet out = transform_landmarks(LandmarkSet{{0.75, 0.5}}, AugmentParams{90, 1, 0, 0});
  EXPECT_NEAR(out.x(0), 0.5, 1e-15);
  EXPECT_NEAR(out.y(0), 0.75, 1e-15);
}

TEST(Augment, LandmarksUseTheExactTransform) {
  const Sample s = generate_sample(SyntheticShapeSpec{}, 4);
  const auto [w, h] = bounding_box_extent(*s.landmarks);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const AugmentParams p = sample_augment_params(seed, w, h);
    EXPECT_LE(std::abs(p.rotation_deg), 30);
    EXPECT_GE(p.scale, 0.8);
    EXPECT_LE(p.scale, 1.25);
    EXPECT_LE(std::abs(p.dx), 0.5 * w);
    const Sample a = augment(s, p);
    EXPECT_LE((a.landmarks->coords() - transform_landmarks(*s.landmarks, p).coords()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_TRUE((a.image >= 0).all() && (a.image <= 1).all());
  }
}

TEST(Augment, ImageFollowsLandmarksWithinOnePixel) {
  const Eigen::Index n = 64;
  const LandmarkSet lm{{0.35, 0.4}, {0.6, 0.45}, {0.5, 0.65}};
  const Sample s = blob_sample(lm, n);
  const auto [w, h] = bounding_box_extent(lm);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Sample a = augment(s, sample_augment_params(seed, w, h));
    for (Eigen::Index i = 0; i < lm.size(); ++i) {
      const double tx = a.landmarks->x(i) * (n - 1), ty = a.landmarks->y(i) * (n - 1);
      if (tx < 3 || ty < 3 || tx > n - 4 || ty > n - 4) continue;
      Eigen::Index br = 0, bc = 0;
      double best = -1;
      for (Eigen::Index r = std::lround(ty) - 3; r <= std::lround(ty) + 3; ++r)
        for (Eigen::Index c = std::lround(tx) - 3; c <= std::lround(tx) + 3; ++c)
          if (a.image(r, c) > best) {
            best = a.image(r, c);
            br = r;
            bc = c;
          }
      EXPECT_LE(std::hypot(static_cast<double>(bc) - tx, static_cast<double>(br) - ty), 1.0) << "seed " << seed;
    }
  }
}

TEST(Noise, ZeroSigmaClipAndStatistics) {
  const Image flat = Image::Constant(64, 64, 0.5);
  EXPECT_TRUE((add_gaussian_noise(flat, 0.0, 1) == flat).all());
  const Image noisy = add_gaussian_noise(flat, 0.1, 2);
  const Image d = noisy - flat;
  const double mean = d.mean();
  const double std = std::sqrt((d - mean).square().mean());
  EXPECT_GE(std, 0.09);
  EXPECT_LE(std, 0.11);
  const Image harsh = add_gaussian_noise(flat, 5.0, 3);
  EXPECT_TRUE((harsh >= 0).all() && (harsh <= 1).all());
  EXPECT_TRUE((add_gaussian_noise(flat, 0.1, 2) == noisy).all());
  EXPECT_THROW(add_gaussian_noise(flat, -0.1, 0), std::invalid_argument);
}

TEST(ResizeNormalize, FixedPointConstantAndCheckerboard) {
  Image ramp(4, 4);
  for (Eigen::Index i = 0; i < 16; ++i) ramp.data()[i] = static_cast<double>(i) / 15.0;
  EXPECT_LE((resize_normalize(ramp, 4, 4) - ramp).abs().maxCoeff(), 1e-9);
  EXPECT_TRUE((resize_normalize(Image::Constant(5, 5, 0.7), 3, 3) == 0.0).all());
  Image board(8, 8);
  for (Eigen::Index r = 0; r < 8; ++r)
    for (Eigen::Index c = 0; c < 8; ++c) board(r, c) = (r + c) % 2;
  const Image half = resize_normalize(board, 4, 4);
  EXPECT_LE((half - 0.5).abs().maxCoeff(), 1e-12);
  EXPECT_THROW(resize_normalize(Image(0, 3), 2, 2), std::invalid_argument);
}
