#include "fsdag/config.hpp"

#include "fsdag/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace fsdag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string type_name(const json& j) { return j.type_name(); }

/// Reads keys of one JSON object and rejects anything it was not asked for.
class Section {
 public:
  Section(const json* node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_->is_object()) throw ValidationError(where() + " must be an object, got " + type_name(*node_));
  }

  template <typename T>
  void get(const char* key, T& out) {
    const json* v = take(key);
    if (!v) return;
    out = convert<T>(*v, key_path(key));
  }

  Section sub(const char* key) { return Section(take(key), key_path(key)); }

  bool has(const char* key) const { return node_ && node_->contains(key); }
  const json* raw(const char* key) { return take(key); }
  std::string key_path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) throw ValidationError("unknown config key '" + key_path(key.c_str()) + "'");
    }
  }

  template <typename T>
  static T convert(const json& v, const std::string& name) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw mismatch(name, "a boolean", v);
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw mismatch(name, "a string", v);
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, fs::path>) {
      if (!v.is_string()) throw mismatch(name, "a path string", v);
      return fs::path(v.get<std::string>());
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw mismatch(name, "a number", v);
      return v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw mismatch(name, "a non-negative integer", v);
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw mismatch(name, "an integer", v);
      return v.get<T>();
    } else {
      // std::vector<element>
      if (!v.is_array()) throw mismatch(name, "an array", v);
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], name + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
  }

 private:
  static ValidationError mismatch(const std::string& name, const char* expected, const json& v) {
    return ValidationError("config key '" + name + "' must be " + expected + ", got " + type_name(v));
  }

  const json* take(const char* key) {
    if (!node_) return nullptr;
    auto it = node_->find(key);
    if (it == node_->end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string where() const { return path_.empty() ? "config" : "config key '" + path_ + "'"; }

  const json* node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_generation(Section s, GenerationSpec& g) {
  SyntheticShapeSpec& sh = g.shape;
  s.get("image_size", sh.image_size);
  s.get("num_landmarks", sh.num_landmarks);
  s.get("seed", g.seed);
  s.get("root_jitter", sh.root_jitter);
  s.get("rotation_jitter_deg", sh.rotation_jitter_deg);
  s.get("scale_min", sh.scale_min);
  s.get("scale_max", sh.scale_max);
  s.get("stroke_width_min", sh.stroke_width_min);
  s.get("stroke_width_max", sh.stroke_width_max);
  s.get("stroke_intensity", sh.stroke_intensity);
  s.get("marker_intensity", sh.marker_intensity);
  s.get("background", sh.background);
  s.get("noise_level", sh.noise_level);
  s.get("border", sh.border);
  if (const json* joints = s.raw("joints")) {
    if (!joints->is_array()) throw ValidationError("config key '" + s.key_path("joints") + "' must be an array");
    sh.joints.clear();
    for (std::size_t i = 0; i < joints->size(); ++i) {
      Section j(&(*joints)[i], s.key_path("joints") + "[" + std::to_string(i) + "]");
      JointTemplate t;
      j.get("parent", t.parent);
      j.get("angle_deg", t.angle_deg);
      j.get("angle_jitter_deg", t.angle_jitter_deg);
      j.get("length", t.length);
      j.get("length_jitter", t.length_jitter);
      j.get("marker_radius", t.marker_radius);
      j.finish();
      sh.joints.push_back(t);
    }
  }
  Section c = s.sub("counts");
  c.get("train_labeled", g.counts.train_labeled);
  c.get("train_unlabeled", g.counts.train_unlabeled);
  c.get("validation", g.counts.validation);
  c.get("test", g.counts.test);
  c.finish();
  s.finish();
}

json generation_to_json(const GenerationSpec& g) {
  const SyntheticShapeSpec& sh = g.shape;
  json joints = json::array();
  for (const JointTemplate& t : sh.joints) {
    joints.push_back({{"parent", t.parent},
                      {"angle_deg", t.angle_deg},
                      {"angle_jitter_deg", t.angle_jitter_deg},
                      {"length", t.length},
                      {"length_jitter", t.length_jitter},
                      {"marker_radius", t.marker_radius}});
  }
  return json{{"image_size", sh.image_size},
              {"num_landmarks", sh.num_landmarks},
              {"seed", g.seed},
              {"root_jitter", sh.root_jitter},
              {"rotation_jitter_deg", sh.rotation_jitter_deg},
              {"scale_min", sh.scale_min},
              {"scale_max", sh.scale_max},
              {"stroke_width_min", sh.stroke_width_min},
              {"stroke_width_max", sh.stroke_width_max},
              {"stroke_intensity", sh.stroke_intensity},
              {"marker_intensity", sh.marker_intensity},
              {"background", sh.background},
              {"noise_level", sh.noise_level},
              {"border", sh.border},
              {"joints", std::move(joints)},
              {"counts",
               {{"train_labeled", g.counts.train_labeled},
                {"train_unlabeled", g.counts.train_unlabeled},
                {"validation", g.counts.validation},
                {"test", g.counts.test}}}};
}

void read_trainer(Section s, TrainerConfig& t, bool with_ssl_keys) {
  if (with_ssl_keys) {
    std::string strategy = to_string(t.strategy);
    s.get("strategy", strategy);
    try {
      t.strategy = parse_strategy(strategy);
    } catch (const std::invalid_argument& e) {
      throw ValidationError("config key '" + s.key_path("strategy") + "': " + e.what());
    }
    s.get("R", t.ratio);
    s.get("noise_sigma", t.noise_sigma);
    s.get("augment_unlabeled", t.augment_unlabeled);
    s.get("ensemble_alpha", t.ensemble_alpha);
  }
  s.get("lr", t.lr);
  s.get("lr_decay", t.lr_decay);
  s.get("lr_decay_every", t.lr_decay_every);
  s.get("weight_decay", t.weight_decay);
  s.get("batch_size", t.batch_size);
  s.get("epochs", t.epochs);
  s.get("augment", t.augment);
  s.get("select_best", t.select_best);
  Section a = s.sub("augmentation");
  a.get("max_rotation_deg", t.augment_ranges.max_rotation_deg);
  a.get("scale_min", t.augment_ranges.scale_min);
  a.get("scale_max", t.augment_ranges.scale_max);
  a.get("translation_fraction", t.augment_ranges.translation_fraction);
  a.finish();
  s.finish();
}

json trainer_to_json(const TrainerConfig& t, bool with_ssl_keys) {
  json j{{"lr", t.lr},
         {"lr_decay", t.lr_decay},
         {"lr_decay_every", t.lr_decay_every},
         {"weight_decay", t.weight_decay},
         {"batch_size", t.batch_size},
         {"epochs", t.epochs},
         {"augment", t.augment},
         {"select_best", t.select_best},
         {"augmentation",
          {{"max_rotation_deg", t.augment_ranges.max_rotation_deg},
           {"scale_min", t.augment_ranges.scale_min},
           {"scale_max", t.augment_ranges.scale_max},
           {"translation_fraction", t.augment_ranges.translation_fraction}}}};
  if (with_ssl_keys) {
    j["strategy"] = to_string(t.strategy);
    j["R"] = t.ratio;
    j["noise_sigma"] = t.noise_sigma;
    j["augment_unlabeled"] = t.augment_unlabeled;
    j["ensemble_alpha"] = t.ensemble_alpha;
  }
  return j;
}

ExperimentConfig from_json(const json& doc) {
  ExperimentConfig cfg = default_config();
  Section root(&doc, "");
  root.get("seed", cfg.seed);
  root.get("output_dir", cfg.output_dir);
  std::string precision = cfg.precision == Precision::kFloat32 ? "float32" : "float64";
  root.get("precision", precision);
  if (precision == "float32") {
    cfg.precision = Precision::kFloat32;
  } else if (precision == "float64") {
    cfg.precision = Precision::kFloat64;
  } else {
    throw ValidationError("config key 'precision' must be \"float32\" or \"float64\"");
  }

  Section data = root.sub("data");
  if (data.has("path")) {
    fs::path p;
    data.get("path", p);
    cfg.data.path = p;
  }
  read_generation(data.sub("generate"), cfg.data.generate);
  data.finish();

  Section model = root.sub("model");
  model.get("encoder_channels", cfg.model.encoder_channels);
  model.get("encoder_strides", cfg.model.encoder_strides);
  model.get("gcn_width", cfg.model.gcn_width);
  model.get("gcn_layers", cfg.model.gcn_layers);
  model.get("cascade_stages", cfg.model.cascade_stages);
  model.finish();

  Section loss = root.sub("loss");
  loss.get("margin", cfg.loss.margin);
  loss.get("w1", cfg.loss.w1);
  loss.get("w2", cfg.loss.w2);
  loss.get("kl_epsilon", cfg.loss.kl_epsilon);
  loss.finish();

  read_trainer(root.sub("pretrain"), cfg.pretrain, false);
  read_trainer(root.sub("train"), cfg.train, true);

  Section ev = root.sub("eval");
  ev.get("failure_fraction", cfg.eval.failure_fraction);
  ev.get("population_std", cfg.eval.population_std);
  ev.get("overlay_count", cfg.eval.overlay_count);
  ev.finish();

  Section rep = root.sub("reproduce");
  rep.get("seeds", cfg.reproduce.seeds);
  if (rep.has("strategies")) {
    std::vector<std::string> names;
    rep.get("strategies", names);
    cfg.reproduce.strategies.clear();
    for (const auto& n : names) {
      try {
        cfg.reproduce.strategies.push_back(parse_strategy(n));
      } catch (const std::invalid_argument& e) {
        throw ValidationError("config key 'reproduce.strategies': " + std::string(e.what()));
      }
    }
  }
  rep.finish();
  root.finish();

  cfg.model.image_size = cfg.data.generate.shape.image_size;
  cfg.model.num_landmarks = cfg.data.generate.shape.num_landmarks;
  cfg.pretrain.rng_seed = cfg.train.rng_seed = cfg.seed;
  validate_config(cfg);
  return cfg;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.data.generate.shape.noise_level = 0.15;
  cfg.model.encoder_channels = {16, 32, 32, 32, 32};
  cfg.model.encoder_strides = {2, 2, 1, 2, 1};
  cfg.pretrain.epochs = 1000;
  cfg.pretrain.lr = 1e-3;
  cfg.train.epochs = 20;
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  auto check = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string(section) + ": " + e.what());
    }
  };
  check("data.generate", [&] { cfg.data.generate.shape.validate(); });
  const SplitCounts& c = cfg.data.generate.counts;
  if (c.train_labeled < 0 || c.train_unlabeled < 0 || c.validation < 0 || c.test < 0) {
    throw ValidationError("data.generate.counts: split sizes must be >= 0");
  }
  check("model", [&] { cfg.model.validate(); });
  check("loss", [&] { cfg.loss.validate(); });
  check("pretrain", [&] { cfg.pretrain.validate(); });
  check("train", [&] { cfg.train.validate(); });
  if (!(cfg.eval.failure_fraction > 0 && cfg.eval.failure_fraction <= 1)) {
    throw ValidationError("eval.failure_fraction must lie in (0, 1]");
  }
  if (cfg.eval.overlay_count < 0) throw ValidationError("eval.overlay_count must be >= 0");
  if (cfg.reproduce.seeds.empty() || cfg.reproduce.strategies.empty()) {
    throw ValidationError("reproduce: seeds and strategies must be non-empty");
  }
  if (cfg.output_dir.empty()) throw ValidationError("output_dir must not be empty");
  if (cfg.data.path && !fs::exists(*cfg.data.path / "manifest.json")) {
    throw ValidationError("data.path: no dataset manifest under " + cfg.data.path->string());
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(doc);
}

ExperimentConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string config_snapshot(const ExperimentConfig& cfg) {
  json doc;
  doc["seed"] = cfg.seed;
  doc["output_dir"] = cfg.output_dir.string();
  doc["precision"] = cfg.precision == Precision::kFloat32 ? "float32" : "float64";
  doc["data"] = json::object();
  if (cfg.data.path) doc["data"]["path"] = cfg.data.path->string();
  doc["data"]["generate"] = generation_to_json(cfg.data.generate);
  doc["model"] = {{"encoder_channels", cfg.model.encoder_channels},
                  {"encoder_strides", cfg.model.encoder_strides},
                  {"gcn_width", cfg.model.gcn_width},
                  {"gcn_layers", cfg.model.gcn_layers},
                  {"cascade_stages", cfg.model.cascade_stages}};
  doc["loss"] = {{"margin", cfg.loss.margin}, {"w1", cfg.loss.w1}, {"w2", cfg.loss.w2}, {"kl_epsilon", cfg.loss.kl_epsilon}};
  doc["pretrain"] = trainer_to_json(cfg.pretrain, false);
  doc["train"] = trainer_to_json(cfg.train, true);
  doc["eval"] = {{"failure_fraction", cfg.eval.failure_fraction},
                 {"population_std", cfg.eval.population_std},
                 {"overlay_count", cfg.eval.overlay_count}};
  std::vector<std::string> names;
  for (Strategy s : cfg.reproduce.strategies) names.push_back(to_string(s));
  doc["reproduce"] = {{"seeds", cfg.reproduce.seeds}, {"strategies", names}};
  return doc.dump(2) + "\n";
}

void write_config_snapshot(const ExperimentConfig& cfg, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "config.resolved.json");
  if (!out) throw IoError("cannot write " + (dir / "config.resolved.json").string());
  out << config_snapshot(cfg);
}

GenerationSpec parse_generation_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read generation spec " + path.string());
  json doc;
  try {
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    doc = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": not valid JSON: " + e.what());
  }
  GenerationSpec g = default_config().data.generate;
  read_generation(Section(&doc, ""), g);
  try {
    g.shape.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return g;
}

}  // namespace fsdag
