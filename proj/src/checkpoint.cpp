#include "fsdag/checkpoint.hpp"

#include "fsdag/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace fsdag {

namespace {

constexpr char kMagic[8] = {'F', 'S', 'D', 'A', 'G', 'C', 'K', 'P'};

class Writer {
 public:
  void u32(std::uint32_t v) { put(v); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v)); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  void tensor(const Tensor<float>& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (Index d : t.shape()) u32(static_cast<std::uint32_t>(d));
    for (Index i = 0; i < t.size(); ++i) f32(t[i]);
  }
  std::string take() { return std::move(out_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(get<std::uint64_t>()); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Tensor<float> tensor(const Shape& expected, const std::string& what) {
    const std::uint32_t rank = u32();
    if (rank > 8) throw FormatError("checkpoint: implausible rank for " + what);
    Shape shape(rank);
    for (auto& d : shape) d = u32();
    if (shape != expected) {
      throw FormatError("checkpoint: " + what + " has shape " + shape_string(shape) + ", expected " + shape_string(expected));
    }
    Tensor<float> t(shape);
    need(static_cast<std::size_t>(t.size()) * 4);
    for (Index i = 0; i < t.size(); ++i) t[i] = f32();
    return t;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated file");
  }
  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const DagModelParams<float>& Checkpoint::model(std::string_view role) const {
  for (const auto& [name, params] : models)
    if (name == role) return params;
  throw std::out_of_range("checkpoint has no '" + std::string(role) + "' model");
}

bool Checkpoint::has_model(std::string_view role) const {
  for (const auto& entry : models)
    if (entry.first == role) return true;
  return false;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  const ArchDescriptor& a = ckpt.arch;
  w.u32(static_cast<std::uint32_t>(a.image_size));
  w.u32(static_cast<std::uint32_t>(a.num_landmarks));
  w.u32(static_cast<std::uint32_t>(a.encoder_channels.size()));
  for (std::size_t i = 0; i < a.encoder_channels.size(); ++i) {
    w.u32(static_cast<std::uint32_t>(a.encoder_channels[i]));
    w.u32(static_cast<std::uint32_t>(a.encoder_strides[i]));
  }
  w.u32(static_cast<std::uint32_t>(a.gcn_width));
  w.u32(static_cast<std::uint32_t>(a.gcn_layers));
  w.u32(static_cast<std::uint32_t>(a.cascade_stages));
  w.i64(ckpt.global_step);
  w.u32(static_cast<std::uint32_t>(ckpt.mean_shape.size()));
  for (Index i = 0; i < ckpt.mean_shape.size(); ++i) {
    w.f64(ckpt.mean_shape.x(i));
    w.f64(ckpt.mean_shape.y(i));
  }
  w.u32(static_cast<std::uint32_t>(ckpt.models.size()));
  for (const auto& [role, params] : ckpt.models) {
    if (!(params.arch() == a)) throw std::invalid_argument("checkpoint: model '" + role + "' has a different architecture");
    w.str(role);
    w.u32(static_cast<std::uint32_t>(params.count()));
    for (std::size_t i = 0; i < params.count(); ++i) {
      w.str(params.names()[i]);
      w.tensor(params.tensors()[i]);
    }
  }
  w.u32(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const OptimizerState<float>& o = *ckpt.optimizer;
    w.i64(o.step);
    w.f64(o.beta1);
    w.f64(o.beta2);
    w.f64(o.eps);
    w.u32(static_cast<std::uint32_t>(o.first_moment.size()));
    for (std::size_t i = 0; i < o.first_moment.size(); ++i) {
      w.tensor(o.first_moment[i]);
      w.tensor(o.second_moment[i]);
    }
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof kMagic || std::memcmp(r.raw(sizeof kMagic).data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  ArchDescriptor& a = c.arch;
  a.image_size = r.u32();
  a.num_landmarks = r.u32();
  const std::uint32_t blocks = r.u32();
  if (blocks > 64) throw FormatError("checkpoint: implausible encoder depth");
  a.encoder_channels.assign(blocks, 0);
  a.encoder_strides.assign(blocks, 0);
  for (std::uint32_t i = 0; i < blocks; ++i) {
    a.encoder_channels[i] = r.u32();
    a.encoder_strides[i] = r.u32();
  }
  a.gcn_width = r.u32();
  a.gcn_layers = r.u32();
  a.cascade_stages = r.u32();
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  c.global_step = r.i64();
  const std::uint32_t k = r.u32();
  if (k != a.num_landmarks) throw FormatError("checkpoint: mean shape size does not match the architecture");
  c.mean_shape = LandmarkSet(k);
  for (Index i = 0; i < k; ++i) {
    c.mean_shape.coords()(i, 0) = r.f64();
    c.mean_shape.coords()(i, 1) = r.f64();
  }
  const std::uint32_t n_models = r.u32();
  if (n_models > 16) throw FormatError("checkpoint: implausible model count");
  for (std::uint32_t m = 0; m < n_models; ++m) {
    std::string role = r.str();
    DagModelParams<float> params(a);
    if (r.u32() != params.count()) throw FormatError("checkpoint: tensor count mismatch in model '" + role + "'");
    for (std::size_t i = 0; i < params.count(); ++i) {
      const std::string name = r.str();
      if (name != params.names()[i]) throw FormatError("checkpoint: unexpected tensor '" + name + "'");
      params.tensors()[i] = r.tensor(params.tensors()[i].shape(), name);
    }
    c.models.emplace_back(std::move(role), std::move(params));
  }
  const std::uint32_t has_opt = r.u32();
  if (has_opt > 1) throw FormatError("checkpoint: bad optimizer flag");
  if (has_opt) {
    const DagModelParams<float> layout(a);
    OptimizerState<float> o;
    o.step = r.i64();
    o.beta1 = r.f64();
    o.beta2 = r.f64();
    o.eps = r.f64();
    if (r.u32() != layout.count()) throw FormatError("checkpoint: optimizer moment count mismatch");
    for (std::size_t i = 0; i < layout.count(); ++i) {
      o.first_moment.push_back(r.tensor(layout.tensors()[i].shape(), "first moment of " + layout.names()[i]));
      o.second_moment.push_back(r.tensor(layout.tensors()[i].shape(), "second moment of " + layout.names()[i]));
    }
    c.optimizer = std::move(o);
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return c;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace fsdag
