#include "fsdag/config.hpp"
#include "fsdag/errors.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace fsdag;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyGivesDocumentedDefaults) {
  const ExperimentConfig c = parse_config_text("{}");
  EXPECT_EQ(c.train.ratio, 100);
  EXPECT_EQ(c.train.lr, 1e-4);
  EXPECT_EQ(c.train.noise_sigma, 0.1);
  EXPECT_EQ(c.train.strategy, Strategy::kMeanTeacherJs);
  EXPECT_EQ(c.loss.w1, 1.0);
  EXPECT_EQ(c.loss.w2, 1.0);
  EXPECT_EQ(c.model.image_size, 64);
  EXPECT_EQ(c.model.num_landmarks, 8);
  EXPECT_EQ(c.data.generate.counts.train_unlabeled, 500);
  EXPECT_NO_THROW(validate_config(c));
  EXPECT_EQ(config_snapshot(parse_config_text("")), config_snapshot(c));
}

TEST(Config, ExplicitDefaultEqualsAbsent) {
  EXPECT_EQ(config_snapshot(parse_config_text(R"({"train": {"R": 100}})")), config_snapshot(parse_config_text("{}")));
  EXPECT_NE(config_snapshot(parse_config_text(R"({"train": {"R": 50}})")), config_snapshot(parse_config_text("{}")));
}

TEST(Config, SnapshotRoundTrips) {
  const ExperimentConfig c = parse_config_text(
      R"({"seed": 3, "precision": "float64", "train": {"strategy": "pi_model", "epochs": 2},
          "data": {"generate": {"image_size": 32, "counts": {"test": 9}}}})");
  EXPECT_EQ(c.train.strategy, Strategy::kPiModel);
  EXPECT_EQ(c.model.image_size, 32);
  EXPECT_EQ(c.train.rng_seed, 3u);
  EXPECT_EQ(config_snapshot(parse_config_text(config_snapshot(c))), config_snapshot(c));
}

TEST(Config, StrictnessNamesTheKey) {
  EXPECT_NE(error_of(R"({"train": {"strateggy": "mean_teacher"}})").find("train.strateggy"), std::string::npos);
  EXPECT_NE(error_of(R"({"bogus": 1})").find("bogus"), std::string::npos);
  EXPECT_NE(error_of(R"({"train": {"R": "many"}})").find("train.R"), std::string::npos);
  EXPECT_NE(error_of(R"({"train": {"strategy": "co_training"}})").find("train.strategy"), std::string::npos);
  EXPECT_FALSE(error_of(R"({"precision": "half"})").empty());
  EXPECT_FALSE(error_of("[1, 2]").empty());
  EXPECT_FALSE(error_of("{ nope").empty());
}

TEST(Config, RangeAndPathValidation) {
  EXPECT_THROW(validate_config(parse_config_text(R"({"train": {"R": 0}})")), ValidationError);
  EXPECT_THROW(validate_config(parse_config_text(R"({"loss": {"margin": -1}})")), ValidationError);
  EXPECT_THROW(validate_config(parse_config_text(R"({"data": {"path": "/nonexistent/dataset"}})")), ValidationError);
}

TEST(Config, MissingFileNamesThePath) {
  try {
    parse_config("/nonexistent/experiment.json");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/experiment.json"), std::string::npos);
  }
  const fs::path dir = fs::temp_directory_path() / "fsdag-config-test";
  fs::create_directories(dir);
  write_config_snapshot(parse_config_text("{}"), dir);
  EXPECT_EQ(config_snapshot(parse_config(dir / "config.resolved.json")), config_snapshot(parse_config_text("{}")));
}
