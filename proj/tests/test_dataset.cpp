#include "fsdag/dataset.hpp"
#include "fsdag/errors.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <fstream>

using namespace fsdag;
namespace fs = std::filesystem;

namespace {

GenerationSpec tiny_spec(std::uint64_t seed) {
  GenerationSpec spec;
  spec.shape.image_size = 24;
  spec.counts = {2, 3, 1, 2};
  spec.seed = seed;
  return spec;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fsdag-test-" + name);
  fs::remove_all(dir);
  return dir;
}

nlohmann::json load(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

void store(const nlohmann::json& j, const fs::path& p) { std::ofstream(p) << j.dump(); }

}  // namespace

TEST(Dataset, SplitsAndLabels) {
  const Dataset d = generate_dataset(tiny_spec(1));
  EXPECT_EQ(d.total(), 8);
  EXPECT_EQ(d.train_unlabeled.size(), 3u);
  for (const auto& s : d.train_unlabeled) EXPECT_FALSE(s.landmarks.has_value());
  for (const auto& s : d.test) EXPECT_TRUE(s.landmarks.has_value());
  EXPECT_EQ(d.train_labeled[1].id, "train_labeled-1");
  EXPECT_EQ(generate_dataset(tiny_spec(1)), d);
}

TEST(Dataset, DisjointSeedsShareNoImages) {
  const Dataset a = generate_dataset(tiny_spec(1));
  const Dataset b = generate_dataset(tiny_spec(2));
  for (const auto* split_a : {&a.train_labeled, &a.train_unlabeled, &a.test})
    for (const auto& sa : *split_a)
      for (const auto* split_b : {&b.train_labeled, &b.train_unlabeled, &b.test})
        for (const auto& sb : *split_b) EXPECT_FALSE((sa.image == sb.image).all()) << sa.id << " vs " << sb.id;
}

TEST(Dataset, RoundTripIsBitExact) {
  const Dataset d = generate_dataset(tiny_spec(3));
  const fs::path dir = fresh_dir("roundtrip");
  write_dataset(d, dir);
  EXPECT_EQ(read_dataset(dir), d);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "images")) files += e.path().extension() == ".pgm";
  EXPECT_EQ(static_cast<Eigen::Index>(files), load(dir / "manifest.json")["counts"]["total"].get<Eigen::Index>());
}

TEST(Dataset, CorruptManifestsFailWithDefinedErrors) {
  const fs::path dir = fresh_dir("corrupt");
  write_dataset(generate_dataset(tiny_spec(4)), dir);
  const nlohmann::json good = load(dir / "manifest.json");

  auto expect_format_error = [&](const nlohmann::json& m) {
    store(m, dir / "manifest.json");
    EXPECT_THROW(read_dataset(dir), FormatError);
  };
  nlohmann::json m = good;
  m["counts"]["test"] = 7;
  expect_format_error(m);
  m = good;
  m["samples"][0]["landmarks"].erase(0);
  expect_format_error(m);
  m = good;
  m["samples"][0]["split"] = "holdout";
  expect_format_error(m);
  m = good;
  m.erase("num_landmarks");
  expect_format_error(m);
  m = good;
  m["samples"][0]["id"] = "../escape";
  expect_format_error(m);

  std::ofstream(dir / "manifest.json") << "{ not json";
  EXPECT_THROW(read_dataset(dir), FormatError);

  m = good;
  m["version"] = 2;
  store(m, dir / "manifest.json");
  EXPECT_THROW(read_dataset(dir), VersionError);

  store(good, dir / "manifest.json");
  fs::remove(dir / "images" / "test-1.pgm");
  EXPECT_THROW(read_dataset(dir), FormatError);
  EXPECT_THROW(read_dataset(fresh_dir("missing")), FormatError);
}

TEST(Pgm, RoundTripOnEightBitGrid) {
  Image img(3, 5);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<double>(i * 17 % 256) / 255.0;
  const fs::path p = fs::temp_directory_path() / "fsdag-test.pgm";
  write_pgm(img, p);
  EXPECT_TRUE((read_pgm(p) == img).all());
}
