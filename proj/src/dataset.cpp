#include "fsdag/dataset.hpp"

#include "fsdag/errors.hpp"
#include "fsdag/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace fsdag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSplitNames[] = {"train_labeled", "train_unlabeled", "validation", "test"};

std::vector<Sample>& split_of(Dataset& d, int i) {
  switch (i) {
    case 0: return d.train_labeled;
    case 1: return d.train_unlabeled;
    case 2: return d.validation;
    default: return d.test;
  }
}

const std::vector<Sample>& split_of(const Dataset& d, int i) { return split_of(const_cast<Dataset&>(d), i); }

}  // namespace

Dataset generate_dataset(const GenerationSpec& spec) {
  spec.shape.validate();
  Dataset d;
  d.num_landmarks = spec.shape.num_landmarks;
  d.height = d.width = spec.shape.image_size;
  d.generator_seed = spec.seed;
  const Eigen::Index counts[] = {spec.counts.train_labeled, spec.counts.train_unlabeled, spec.counts.validation,
                                 spec.counts.test};
  std::uint64_t index = 0;
  for (int s = 0; s < 4; ++s) {
    if (counts[s] < 0) throw std::invalid_argument("generate_dataset: negative split count");
    for (Eigen::Index i = 0; i < counts[s]; ++i, ++index) {
      Sample sample = generate_sample(spec.shape, derive_seed({spec.seed, index}));
      std::ostringstream id;
      id << kSplitNames[s] << '-' << i;
      sample.id = id.str();
      if (s == 1) sample.landmarks.reset();
      split_of(d, s).push_back(std::move(sample));
    }
  }
  return d;
}

void write_pgm(const Image& image, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  std::string bytes(static_cast<std::size_t>(image.size()), '\0');
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    bytes[static_cast<std::size_t>(i)] =
        static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(image.data()[i], 0.0, 1.0) * 255.0)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Image read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing image " + path.string());
  std::string magic;
  long w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w < 1 || h < 1 || maxval != 255) throw FormatError("unsupported PGM header in " + path.string());
  in.get();  // single whitespace after maxval
  std::string bytes(static_cast<std::size_t>(w * h), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw FormatError("truncated PGM " + path.string());
  Image img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    img.data()[i] = static_cast<double>(static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)])) / 255.0;
  }
  return img;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) throw IoError("cannot create " + (dir / "images").string() + ": " + ec.message());
  json manifest;
  manifest["format"] = "fsdag-dataset";
  manifest["version"] = kDatasetFormatVersion;
  manifest["num_landmarks"] = dataset.num_landmarks;
  manifest["image_size"] = {dataset.height, dataset.width};
  manifest["generator_seed"] = dataset.generator_seed;
  json counts = json::object();
  json samples = json::array();
  for (int s = 0; s < 4; ++s) {
    const auto& split = split_of(dataset, s);
    counts[kSplitNames[s]] = split.size();
    for (const Sample& sample : split) {
      json entry{{"id", sample.id}, {"split", kSplitNames[s]}};
      if (sample.landmarks) {
        json pts = json::array();
        for (Eigen::Index i = 0; i < sample.landmarks->size(); ++i) {
          pts.push_back({sample.landmarks->x(i), sample.landmarks->y(i)});
        }
        entry["landmarks"] = std::move(pts);
      } else {
        entry["landmarks"] = nullptr;
      }
      samples.push_back(std::move(entry));
      write_pgm(sample.image, dir / "images" / (sample.id + ".pgm"));
    }
  }
  counts["total"] = dataset.total();
  manifest["counts"] = std::move(counts);
  manifest["samples"] = std::move(samples);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("missing manifest " + manifest_path.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("corrupt manifest " + manifest_path.string() + ": " + e.what());
  }
  try {
    if (!m.is_object() || m.value("format", "") != "fsdag-dataset") throw FormatError("not a dataset manifest: " + manifest_path.string());
    if (!m.contains("version") || !m["version"].is_number_integer()) throw FormatError("manifest has no version");
    if (m["version"].get<int>() != kDatasetFormatVersion) {
      throw VersionError("unsupported dataset version " + m["version"].dump() + " (expected " +
                         std::to_string(kDatasetFormatVersion) + ")");
    }
    Dataset d;
    d.num_landmarks = m.at("num_landmarks").get<Eigen::Index>();
    d.height = m.at("image_size").at(0).get<Eigen::Index>();
    d.width = m.at("image_size").at(1).get<Eigen::Index>();
    d.generator_seed = m.at("generator_seed").get<std::uint64_t>();
    for (const json& entry : m.at("samples")) {
      const std::string split = entry.at("split").get<std::string>();
      int s = 0;
      while (s < 4 && split != kSplitNames[s]) ++s;
      if (s == 4) throw FormatError("unknown split '" + split + "'");
      Sample sample;
      sample.id = entry.at("id").get<std::string>();
      if (sample.id.empty() || sample.id.find('/') != std::string::npos || sample.id.find("..") != std::string::npos) {
        throw FormatError("invalid sample id '" + sample.id + "'");
      }
      const json& pts = entry.at("landmarks");
      if (!pts.is_null()) {
        if (static_cast<Eigen::Index>(pts.size()) != d.num_landmarks) throw FormatError("landmark count mismatch for " + sample.id);
        LandmarkSet lm(d.num_landmarks);
        for (Eigen::Index i = 0; i < d.num_landmarks; ++i) {
          lm.coords()(i, 0) = pts.at(static_cast<std::size_t>(i)).at(0).get<double>();
          lm.coords()(i, 1) = pts.at(static_cast<std::size_t>(i)).at(1).get<double>();
        }
        sample.landmarks = std::move(lm);
      }
      split_of(d, s).push_back(std::move(sample));
    }
    const json& counts = m.at("counts");
    for (int s = 0; s < 4; ++s) {
      if (counts.at(kSplitNames[s]).get<std::size_t>() != split_of(d, s).size()) {
        throw FormatError(std::string("manifest count mismatch for split ") + kSplitNames[s]);
      }
    }
    if (counts.at("total").get<Eigen::Index>() != d.total()) throw FormatError("manifest total count mismatch");
    for (int s = 0; s < 4; ++s) {
      for (Sample& sample : split_of(d, s)) {
        sample.image = read_pgm(dir / "images" / (sample.id + ".pgm"));
        if (sample.image.rows() != d.height || sample.image.cols() != d.width) {
          throw FormatError("image size mismatch for " + sample.id);
        }
      }
    }
    return d;
  } catch (const json::exception& e) {
    throw FormatError("corrupt manifest " + manifest_path.string() + ": " + e.what());
  }
}

}  // namespace fsdag
