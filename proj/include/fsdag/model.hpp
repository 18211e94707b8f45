#pragma once

#include "fsdag/geometry.hpp"
#include "fsdag/ops.hpp"
#include "fsdag/tape.hpp"
#include "fsdag/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsdag {

/// Fixed architecture of one DAG model. Teacher and student share one.
struct ArchDescriptor {
  Index image_size = 64;
  Index num_landmarks = 8;
  std::vector<Index> encoder_channels{16, 16, 32, 32};
  std::vector<Index> encoder_strides{1, 2, 1, 2};
  Index gcn_width = 64;
  Index gcn_layers = 3;
  Index cascade_stages = 3;

  Index feature_channels() const { return encoder_channels.back(); }
  Index feature_size() const {
    Index s = image_size;
    for (Index st : encoder_strides) s = (s - 1) / st + 1;
    return s;
  }

  void validate() const {
    if (image_size < 1 || num_landmarks < 1 || gcn_width < 1 || gcn_layers < 1 || cascade_stages < 0) {
      throw std::invalid_argument("ArchDescriptor: sizes must be positive");
    }
    if (encoder_channels.empty() || encoder_channels.size() != encoder_strides.size()) {
      throw std::invalid_argument("ArchDescriptor: encoder channels and strides must be non-empty and equal length");
    }
    for (Index c : encoder_channels)
      if (c < 1) throw std::invalid_argument("ArchDescriptor: encoder channel count must be positive");
    for (Index s : encoder_strides)
      if (s != 1 && s != 2) throw std::invalid_argument("ArchDescriptor: encoder strides must be 1 or 2");
  }

  bool operator==(const ArchDescriptor&) const = default;
};

/// All learnable tensors of a DAG model in a fixed order:
/// encoder blocks (weight, bias)*, global GCN layers (w_self, w_neigh, bias)*,
/// global head (weight, bias), then per cascade stage its GCN layers followed
/// by a GCN output layer (w_self, w_neigh, bias).
template <typename Scalar>
class DagModelParams {
 public:
  explicit DagModelParams(ArchDescriptor arch) : arch_(std::move(arch)) {
    arch_.validate();
    Index in = 1;
    for (std::size_t i = 0; i < arch_.encoder_channels.size(); ++i) {
      const Index out = arch_.encoder_channels[i];
      add("encoder." + std::to_string(i) + ".weight", {out, in, 3, 3});
      add("encoder." + std::to_string(i) + ".bias", {out});
      in = out;
    }
    const Index vertex_in = arch_.feature_channels() + 2;
    add_gcn_stack("global", vertex_in);
    add("global.head.weight", {arch_.gcn_width, 6});
    add("global.head.bias", {6});
    for (Index s = 0; s < arch_.cascade_stages; ++s) {
      const std::string prefix = "local." + std::to_string(s);
      add_gcn_stack(prefix, vertex_in);
      add(prefix + ".head.w_self", {arch_.gcn_width, 2});
      add(prefix + ".head.w_neigh", {arch_.gcn_width, 2});
      add(prefix + ".head.bias", {2});
    }
  }

  const ArchDescriptor& arch() const { return arch_; }
  std::vector<Tensor<Scalar>>& tensors() { return tensors_; }
  const std::vector<Tensor<Scalar>>& tensors() const { return tensors_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t count() const { return tensors_.size(); }
  Index parameter_count() const {
    Index n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  // Tensor indices within tensors().
  std::size_t encoder_weight(std::size_t block) const { return 2 * block; }
  std::size_t encoder_bias(std::size_t block) const { return 2 * block + 1; }
  std::size_t global_layer(std::size_t layer) const { return encoder_end() + 3 * layer; }
  std::size_t global_head() const { return encoder_end() + 3 * layers(); }
  std::size_t local_layer(std::size_t stage, std::size_t layer) const { return stage_begin(stage) + 3 * layer; }
  std::size_t local_head(std::size_t stage) const { return stage_begin(stage) + 3 * layers(); }

  /// He-normal weights; biases and all output heads zero, so a fresh model
  /// predicts exactly the mean shape.
  static DagModelParams initialized(ArchDescriptor arch, std::uint64_t seed) {
    DagModelParams p(std::move(arch));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill = [&](std::size_t idx, double stddev) {
      for (Index i = 0; i < p.tensors_[idx].size(); ++i) p.tensors_[idx][i] = static_cast<Scalar>(stddev * normal(rng));
    };
    Index in = 1;
    for (std::size_t b = 0; b < p.arch_.encoder_channels.size(); ++b) {
      fill(p.encoder_weight(b), std::sqrt(2.0 / static_cast<double>(in * 9)));
      in = p.arch_.encoder_channels[b];
    }
    auto fill_stack = [&](std::size_t first) {
      Index fan_in = p.arch_.feature_channels() + 2;
      for (std::size_t l = 0; l < p.layers(); ++l) {
        const double stddev = std::sqrt(1.0 / static_cast<double>(fan_in));  // two summed terms
        fill(first + 3 * l, stddev);
        fill(first + 3 * l + 1, stddev);
        fan_in = p.arch_.gcn_width;
      }
    };
    fill_stack(p.global_layer(0));
    for (std::size_t s = 0; s < static_cast<std::size_t>(p.arch_.cascade_stages); ++s) fill_stack(p.local_layer(s, 0));
    return p;
  }

  template <typename Other>
  DagModelParams<Other> cast() const {
    DagModelParams<Other> out(arch_);
    for (std::size_t i = 0; i < tensors_.size(); ++i) out.tensors()[i] = tensors_[i].template cast<Other>();
    return out;
  }

  bool operator==(const DagModelParams& other) const { return arch_ == other.arch_ && tensors_ == other.tensors_; }

 private:
  std::size_t layers() const { return static_cast<std::size_t>(arch_.gcn_layers); }
  std::size_t encoder_end() const { return 2 * arch_.encoder_channels.size(); }
  std::size_t stage_begin(std::size_t stage) const { return global_head() + 2 + stage * (3 * layers() + 3); }

  void add(std::string name, Shape shape) {
    names_.push_back(std::move(name));
    tensors_.emplace_back(std::move(shape));
  }
  void add_gcn_stack(const std::string& prefix, Index in) {
    for (Index l = 0; l < arch_.gcn_layers; ++l) {
      const std::string p = prefix + ".gcn." + std::to_string(l);
      add(p + ".w_self", {in, arch_.gcn_width});
      add(p + ".w_neigh", {in, arch_.gcn_width});
      add(p + ".bias", {arch_.gcn_width});
      in = arch_.gcn_width;
    }
  }

  ArchDescriptor arch_;
  std::vector<std::string> names_;
  std::vector<Tensor<Scalar>> tensors_;
};

/// Parameters placed on a tape as leaves.
template <typename Scalar>
struct BoundParams {
  const DagModelParams<Scalar>* params = nullptr;
  std::vector<Var<Scalar>> vars;

  Var<Scalar> operator[](std::size_t i) const { return vars.at(i); }
};

template <typename Scalar>
BoundParams<Scalar> bind(Tape<Scalar>& tape, const DagModelParams<Scalar>& params, bool requires_grad) {
  BoundParams<Scalar> b{&params, {}};
  b.vars.reserve(params.count());
  for (const auto& t : params.tensors()) b.vars.push_back(tape.leaf(t, requires_grad));
  return b;
}

/// Gradients of every parameter after tape.backward().
template <typename Scalar>
std::vector<Tensor<Scalar>> gradients(const Tape<Scalar>& tape, const BoundParams<Scalar>& bound) {
  std::vector<Tensor<Scalar>> g;
  g.reserve(bound.vars.size());
  for (const auto& v : bound.vars) g.push_back(tape.grad(v));
  return g;
}

/// Stacks equally sized images into a [B, 1, H, W] tensor.
template <typename Scalar>
Tensor<Scalar> image_batch(const std::vector<const Image*>& images) {
  if (images.empty()) throw std::invalid_argument("image_batch: no images");
  const Index h = images.front()->rows(), w = images.front()->cols();
  Tensor<Scalar> t(Shape{static_cast<Index>(images.size()), 1, h, w});
  for (std::size_t b = 0; b < images.size(); ++b) {
    if (images[b]->rows() != h || images[b]->cols() != w) throw std::invalid_argument("image_batch: image sizes differ");
    for (Index i = 0; i < h * w; ++i) t[static_cast<Index>(b) * h * w + i] = static_cast<Scalar>(images[b]->data()[i]);
  }
  return t;
}

/// Stacks landmark sets into a [B*K, 2] tensor.
template <typename Scalar>
Tensor<Scalar> landmark_batch(const std::vector<LandmarkSet>& sets) {
  if (sets.empty()) throw std::invalid_argument("landmark_batch: no landmark sets");
  const Index k = sets.front().size();
  Tensor<Scalar> t(Shape{static_cast<Index>(sets.size()) * k, 2});
  for (std::size_t b = 0; b < sets.size(); ++b) {
    if (sets[b].size() != k) throw std::invalid_argument("landmark_batch: landmark counts differ");
    for (Index i = 0; i < k; ++i) {
      t[2 * (static_cast<Index>(b) * k + i)] = static_cast<Scalar>(sets[b].x(i));
      t[2 * (static_cast<Index>(b) * k + i) + 1] = static_cast<Scalar>(sets[b].y(i));
    }
  }
  return t;
}

/// Splits a [B*K, 2] tensor back into B landmark sets.
template <typename Scalar>
std::vector<LandmarkSet> unbatch_landmarks(const Tensor<Scalar>& t, Index k) {
  if (t.rank() != 2 || t.dim(1) != 2 || k < 1 || t.dim(0) % k != 0) {
    throw std::invalid_argument("unbatch_landmarks: expected [B*K, 2]");
  }
  std::vector<LandmarkSet> sets;
  for (Index b = 0; b < t.dim(0) / k; ++b) {
    LandmarkSet s(k);
    for (Index i = 0; i < k; ++i) {
      s.coords()(i, 0) = static_cast<double>(t[2 * (b * k + i)]);
      s.coords()(i, 1) = static_cast<double>(t[2 * (b * k + i) + 1]);
    }
    sets.push_back(std::move(s));
  }
  return sets;
}

/// CNN encoder: each block is relu(conv3x3(x)). images: [B, 1, H, W].
template <typename Scalar>
Var<Scalar> extract_features(Var<Scalar> images, const BoundParams<Scalar>& bound) {
  const ArchDescriptor& arch = bound.params->arch();
  const auto& shape = images.shape();
  if (shape.size() != 4 || shape[1] != 1 || shape[2] != arch.image_size || shape[3] != arch.image_size) {
    throw std::invalid_argument("extract_features: expected [B,1," + std::to_string(arch.image_size) + "," +
                                std::to_string(arch.image_size) + "], got " + shape_string(shape));
  }
  Var<Scalar> x = images;
  for (std::size_t b = 0; b < arch.encoder_channels.size(); ++b) {
    x = relu(conv2d(x, bound[bound.params->encoder_weight(b)], bound[bound.params->encoder_bias(b)],
                    arch.encoder_strides[b]));
  }
  return x;
}

/// Bilinear feature lookup at normalized vertices: [N, 2] -> [N, C], with the
/// vertex mapped to feature pixel (x (W'-1), y (H'-1)).
template <typename Scalar>
Var<Scalar> sample_vertex_features(Var<Scalar> fmap, Var<Scalar> vertices) {
  const auto& fs = fmap.shape();
  if (fs.size() < 3) throw std::invalid_argument("sample_vertex_features: fmap must be [C,H,W] or [B,C,H,W]");
  const Index h = fs[fs.size() - 2], w = fs[fs.size() - 1];
  const Index n = vertices.shape().at(0);
  Tensor<Scalar> to_pixels(Shape{n, 2});
  for (Index i = 0; i < n; ++i) {
    to_pixels[2 * i] = static_cast<Scalar>(w - 1);
    to_pixels[2 * i + 1] = static_cast<Scalar>(h - 1);
  }
  Var<Scalar> px = mul(vertices, vertices.tape->constant(std::move(to_pixels)));
  return bilinear_sample(fmap, px);
}

/// h'_i = act(W_self h_i + W_neigh mean_{j in N(i)} h_j + b), with `aggregate`
/// the (block-diagonal over the batch) neighbour-mean matrix.
template <typename Scalar>
Var<Scalar> gcn_layer(Var<Scalar> features, Var<Scalar> aggregate, Var<Scalar> w_self, Var<Scalar> w_neigh,
                      Var<Scalar> bias, bool relu_activation) {
  const Index n = features.shape().at(0);
  if (aggregate.shape() != Shape{n, n}) throw std::invalid_argument("gcn_layer: aggregation matrix does not match vertex count");
  Var<Scalar> self_term = matmul(features, w_self);
  Var<Scalar> neigh_term = matmul(matmul(aggregate, features), w_neigh);
  Var<Scalar> out = add(add(self_term, neigh_term), bias);
  return relu_activation ? relu(out) : out;
}

/// Block-diagonal neighbour-mean matrix for `batch` copies of the topology.
template <typename Scalar>
Tensor<Scalar> batched_neighbor_mean(const GraphTopology& topology, Index batch) {
  const Index k = topology.size();
  const Eigen::MatrixXd block = topology.neighbor_mean_matrix();
  Tensor<Scalar> t(Shape{batch * k, batch * k});
  auto m = t.matrix(batch * k, batch * k);
  for (Index b = 0; b < batch; ++b) m.block(b * k, b * k, k, k) = block.cast<Scalar>();
  return t;
}

/// Single-graph form: features [K, F_in].
template <typename Scalar>
Var<Scalar> gcn_layer(Var<Scalar> features, const GraphTopology& topology, Var<Scalar> w_self, Var<Scalar> w_neigh,
                      Var<Scalar> bias, bool relu_activation) {
  if (features.shape().size() != 2 || features.shape()[0] != topology.size()) {
    throw std::invalid_argument("gcn_layer: feature rows do not match topology");
  }
  Var<Scalar> agg = features.tape->constant(batched_neighbor_mean<Scalar>(topology, 1));
  return gcn_layer(features, agg, w_self, w_neigh, bias, relu_activation);
}

/// shape: [N, 2]; affine: [B, 6] rows (a11, a12, a21, a22, tx, ty); the N
/// vertices are split evenly over the B transforms.
template <typename Scalar>
Var<Scalar> apply_affine(Var<Scalar> shape, Var<Scalar> affine) {
  Tape<Scalar>& tape = detail::same_tape(shape, affine, "apply_affine");
  const Tensor<Scalar>& sv = shape.value();
  const Tensor<Scalar>& av = affine.value();
  if (sv.rank() != 2 || sv.dim(1) != 2 || av.rank() != 2 || av.dim(1) != 6 || av.dim(0) == 0 ||
      sv.dim(0) % av.dim(0) != 0) {
    throw std::invalid_argument("apply_affine: expected shape [N,2] and affine [B,6]");
  }
  const Index n = sv.dim(0), per = n / av.dim(0);
  Tensor<Scalar> out(Shape{n, 2});
  for (Index i = 0; i < n; ++i) {
    const Scalar* a = av.data() + 6 * (i / per);
    const Scalar x = sv[2 * i], y = sv[2 * i + 1];
    out[2 * i] = a[0] * x + a[1] * y + a[4];
    out[2 * i + 1] = a[2] * x + a[3] * y + a[5];
  }
  return tape.record(std::move(out), shape.requires_grad() || affine.requires_grad(),
                     [&tape, shape, affine, n, per](const Tensor<Scalar>& g) {
                       const Tensor<Scalar>& sv = shape.value();
                       const Tensor<Scalar>& av = affine.value();
                       Tensor<Scalar>* gs = shape.requires_grad() ? &tape.grad_buffer(shape) : nullptr;
                       Tensor<Scalar>* ga = affine.requires_grad() ? &tape.grad_buffer(affine) : nullptr;
                       for (Index i = 0; i < n; ++i) {
                         const Index row = 6 * (i / per);
                         const Scalar gx = g[2 * i], gy = g[2 * i + 1];
                         if (gs) {
                           (*gs)[2 * i] += av[row + 0] * gx + av[row + 2] * gy;
                           (*gs)[2 * i + 1] += av[row + 1] * gx + av[row + 3] * gy;
                         }
                         if (ga) {
                           const Scalar x = sv[2 * i], y = sv[2 * i + 1];
                           (*ga)[row + 0] += gx * x;
                           (*ga)[row + 1] += gx * y;
                           (*ga)[row + 2] += gy * x;
                           (*ga)[row + 3] += gy * y;
                           (*ga)[row + 4] += gx;
                           (*ga)[row + 5] += gy;
                         }
                       }
                     });
}

template <typename Scalar>
struct DagOutputs {
  Var<Scalar> fmap;                      // [B, C, H', W']
  Var<Scalar> v_global;                  // [B*K, 2]
  std::vector<Var<Scalar>> v_local_steps;  // each [B*K, 2]

  Var<Scalar> v_local() const { return v_local_steps.empty() ? v_global : v_local_steps.back(); }
};

/// Graph evolution from the mean shape: encoder, global GCN -> residual affine
/// applied to the mean shape, then each cascade stage displaces the vertices.
template <typename Scalar>
DagOutputs<Scalar> dag_forward(Var<Scalar> images, const BoundParams<Scalar>& bound, const MeanShape& mean_shape,
                               const GraphTopology& topology) {
  Tape<Scalar>& tape = *images.tape;
  const DagModelParams<Scalar>& p = *bound.params;
  const ArchDescriptor& arch = p.arch();
  const Index k = arch.num_landmarks;
  if (mean_shape.size() != k || topology.size() != k) {
    throw std::invalid_argument("dag_forward: mean shape / topology do not match num_landmarks");
  }
  DagOutputs<Scalar> out;
  out.fmap = extract_features(images, bound);
  const Index batch = images.shape()[0];
  const Index n = batch * k;

  Var<Scalar> aggregate = tape.constant(batched_neighbor_mean<Scalar>(topology, batch));
  Var<Scalar> start = tape.constant(landmark_batch<Scalar>(std::vector<LandmarkSet>(static_cast<std::size_t>(batch), mean_shape)));

  auto gcn_stack = [&](Var<Scalar> vertices, std::size_t first) {
    Var<Scalar> h = concat<Scalar>({sample_vertex_features(out.fmap, vertices), vertices}, 1);
    for (Index l = 0; l < arch.gcn_layers; ++l) {
      const std::size_t i = first + 3 * static_cast<std::size_t>(l);
      h = gcn_layer(h, aggregate, bound[i], bound[i + 1], bound[i + 2], true);
    }
    return h;
  };

  Tensor<Scalar> pool(Shape{batch, n});
  for (Index b = 0; b < batch; ++b)
    for (Index i = 0; i < k; ++i) pool[b * n + b * k + i] = Scalar(1) / static_cast<Scalar>(k);
  Var<Scalar> pooled = matmul(tape.constant(std::move(pool)), gcn_stack(start, p.global_layer(0)));
  Var<Scalar> residual = add(matmul(pooled, bound[p.global_head()]), bound[p.global_head() + 1]);
  Var<Scalar> affine = add(residual, tape.constant(Tensor<Scalar>(Shape{6}, {1, 0, 0, 1, 0, 0})));
  out.v_global = apply_affine(start, affine);

  Var<Scalar> v = out.v_global;
  for (Index s = 0; s < arch.cascade_stages; ++s) {
    const std::size_t stage = static_cast<std::size_t>(s);
    Var<Scalar> h = gcn_stack(v, p.local_layer(stage, 0));
    const std::size_t head = p.local_head(stage);
    v = add(v, gcn_layer(h, aggregate, bound[head], bound[head + 1], bound[head + 2], false));
    out.v_local_steps.push_back(v);
  }
  return out;
}

}  // namespace fsdag
