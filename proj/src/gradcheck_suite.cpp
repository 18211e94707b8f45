#include "fsdag/gradcheck_suite.hpp"

#include "fsdag/gradcheck.hpp"
#include "fsdag/losses.hpp"
#include "fsdag/model.hpp"
#include "fsdag/random.hpp"

#include <functional>
#include <random>

namespace fsdag {

namespace {

using T = Tensor<double>;
using V = Var<double>;
using Program = std::function<V(Tape<double>&, V)>;

struct Instance {
  T x;
  Program program;
};

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  T normal(Shape shape, double sd = 1.0) {
    T t(std::move(shape));
    std::normal_distribution<double> d(0.0, sd);
    for (Index i = 0; i < t.size(); ++i) t[i] = d(rng_);
    return t;
  }
  T uniform(Shape shape, double lo, double hi) {
    T t(std::move(shape));
    std::uniform_real_distribution<double> d(lo, hi);
    for (Index i = 0; i < t.size(); ++i) t[i] = d(rng_);
    return t;
  }
  Index dim(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng_); }

 private:
  std::mt19937_64 rng_;
};

/// sum(y * w) for a fixed random w: checks a full vector-Jacobian product.
V contract(Tape<double>& tape, V y, const T& w) { return sum(mul(y, tape.constant(w))); }

using Factory = std::function<Instance(Gen&)>;

/// Elementwise / shape ops get a random contraction of their output.
Factory unary(std::function<V(V)> op, std::function<T(Gen&, Shape)> input) {
  return [op, input](Gen& g) {
    const Shape s{g.dim(1, 4), g.dim(1, 5)};
    T x = input(g, s);
    Tape<double> probe;
    const Shape out = op(probe.constant(x)).shape();
    T w = g.normal(out);
    return Instance{std::move(x), [op, w](Tape<double>& tape, V v) { return contract(tape, op(v), w); }};
  };
}

Factory binary_lhs(std::function<V(V, V)> op, std::function<std::pair<Shape, Shape>(Gen&)> shapes) {
  return [op, shapes](Gen& g) {
    const auto [sa, sb] = shapes(g);
    T a = g.normal(sa), b = g.normal(sb);
    Tape<double> probe;
    T w = g.normal(op(probe.constant(a), probe.constant(b)).shape());
    return Instance{std::move(a), [op, b, w](Tape<double>& tape, V v) { return contract(tape, op(v, tape.constant(b)), w); }};
  };
}

Factory binary_rhs(std::function<V(V, V)> op, std::function<std::pair<Shape, Shape>(Gen&)> shapes) {
  return [op, shapes](Gen& g) {
    const auto [sa, sb] = shapes(g);
    T a = g.normal(sa), b = g.normal(sb);
    Tape<double> probe;
    T w = g.normal(op(probe.constant(a), probe.constant(b)).shape());
    return Instance{std::move(b), [op, a, w](Tape<double>& tape, V v) { return contract(tape, op(tape.constant(a), v), w); }};
  };
}

auto same_shapes(Gen& g) {
  Shape s{g.dim(1, 4), g.dim(1, 5)};
  return std::pair{s, s};
}

Factory conv_factory(Index stride, int which) {
  return [stride, which](Gen& g) {
    const Index b = g.dim(1, 2), cin = g.dim(1, 2), cout = g.dim(1, 3), h = g.dim(3, 6), w = g.dim(3, 6);
    T x = g.normal({b, cin, h, w}), wt = g.normal({cout, cin, 3, 3}, 0.5), bias = g.normal({cout});
    Tape<double> probe;
    T out_w = g.normal(conv2d(probe.constant(x), probe.constant(wt), probe.constant(bias), stride).shape());
    T leaf = which == 0 ? x : which == 1 ? wt : bias;
    return Instance{leaf, [=](Tape<double>& tape, V v) {
                      V xv = which == 0 ? v : tape.constant(x);
                      V wv = which == 1 ? v : tape.constant(wt);
                      V bv = which == 2 ? v : tape.constant(bias);
                      return contract(tape, conv2d(xv, wv, bv, stride), out_w);
                    }};
  };
}

Factory bilinear_factory(bool wrt_points) {
  return [wrt_points](Gen& g) {
    const Index c = g.dim(1, 3), h = g.dim(2, 6), w = g.dim(2, 6), n = g.dim(1, 6);
    T fmap = g.normal({c, h, w});
    // Mostly interior points plus a margin outside the map to exercise clamping.
    T pts(Shape{n, 2});
    T raw = g.uniform({n, 2}, -0.3, 1.3);
    for (Index i = 0; i < n; ++i) {
      pts[2 * i] = raw[2 * i] * static_cast<double>(w - 1);
      pts[2 * i + 1] = raw[2 * i + 1] * static_cast<double>(h - 1);
    }
    T out_w = g.normal({n, c});
    if (wrt_points) {
      return Instance{pts, [=](Tape<double>& tape, V v) { return contract(tape, bilinear_sample(tape.constant(fmap), v), out_w); }};
    }
    return Instance{fmap, [=](Tape<double>& tape, V v) { return contract(tape, bilinear_sample(v, tape.constant(pts)), out_w); }};
  };
}

Factory softmax_factory(bool batched) {
  return [batched](Gen& g) {
    const Shape s = batched ? Shape{g.dim(1, 2), g.dim(2, 4), g.dim(1, 3), g.dim(1, 3)} : Shape{g.dim(2, 4), g.dim(1, 3), g.dim(1, 3)};
    T x = g.normal(s, 2.0), w = g.normal(s);
    const Index axis = batched ? 1 : 0;
    return Instance{x, [=](Tape<double>& tape, V v) { return contract(tape, channel_softmax(v, axis), w); }};
  };
}

Factory concat_factory(Index axis) {
  return [axis](Gen& g) {
    const Index r = g.dim(1, 4), c = g.dim(1, 4), extra = g.dim(1, 3);
    T a = g.normal({r, c});
    T b = axis == 0 ? g.normal({extra, c}) : g.normal({r, extra});
    T w = axis == 0 ? g.normal({r + extra, c}) : g.normal({r, c + extra});
    return Instance{a, [=](Tape<double>& tape, V v) { return contract(tape, concat<double>({v, tape.constant(b)}, axis), w); }};
  };
}

Factory landmark_loss_factory(int which) {
  return [which](Gen& g) {
    const Index k = g.dim(2, 6), b = g.dim(1, 3);
    T v = g.uniform({b * k, 2}, 0.0, 1.0), gt = g.uniform({b * k, 2}, 0.0, 1.0);
    const double margin = g.uniform({1}, 0.0, 0.05)[0];
    return Instance{v, [=](Tape<double>& tape, V x) {
                      return which == 0 ? global_loss(x, tape.constant(gt), k, margin) : local_loss(x, tape.constant(gt), k);
                    }};
  };
}

Factory js_factory() {
  return [](Gen& g) {
    const Shape s{g.dim(1, 2), g.dim(2, 4), g.dim(1, 3), g.dim(1, 3)};
    T a_s = g.normal(s), a_t = g.normal(s);
    return Instance{a_s, [=](Tape<double>& tape, V v) { return js_loss(v, tape.constant(a_t), 1e-8); }};
  };
}

Factory gcn_factory() {
  return [](Gen& g) {
    const Index k = g.dim(2, 5), fin = g.dim(1, 4), fout = g.dim(1, 4);
    T f = g.normal({k, fin}), ws = g.normal({fin, fout}), wn = g.normal({fin, fout}), b = g.normal({fout});
    T w = g.normal({k, fout});
    const GraphTopology topo = GraphTopology::fully_connected(k);
    return Instance{f, [=](Tape<double>& tape, V v) {
                      return contract(tape, gcn_layer(v, topo, tape.constant(ws), tape.constant(wn), tape.constant(b), true), w);
                    }};
  };
}

/// Random-weight miniature model; checks one parameter tensor end to end.
Factory dag_factory(std::size_t tensor_index_hint) {
  return [tensor_index_hint](Gen& g) {
    ArchDescriptor arch;
    arch.image_size = 8;
    arch.num_landmarks = 3;
    arch.encoder_channels = {2, 2};
    arch.encoder_strides = {1, 2};
    arch.gcn_width = 4;
    arch.gcn_layers = 1;
    arch.cascade_stages = 1;
    DagModelParams<double> params(arch);
    for (auto& t : params.tensors()) t = g.normal(t.shape(), 0.4);
    const std::size_t idx = tensor_index_hint % params.count();
    const T images = g.uniform({2, 1, 8, 8}, 0.0, 1.0);
    const MeanShape mean{{0.3, 0.3}, {0.7, 0.4}, {0.5, 0.7}};
    const T gt = g.uniform({6, 2}, 0.2, 0.8);
    const GraphTopology topo = GraphTopology::fully_connected(3);
    return Instance{params.tensors()[idx], [=](Tape<double>& tape, V v) {
                      BoundParams<double> bound = bind(tape, params, false);
                      bound.vars[idx] = v;
                      const DagOutputs<double> out = dag_forward(tape.constant(images), bound, mean, topo);
                      return supervised_total(out, tape.constant(gt), 3, LossConfig{});
                    }};
  };
}

struct Case {
  std::string name;
  std::function<Factory(int)> factory;  // instance index -> factory
};

std::vector<Case> cases() {
  auto normal_in = [](Gen& g, Shape s) { return g.normal(std::move(s)); };
  auto positive_in = [](Gen& g, Shape s) { return g.uniform(std::move(s), 0.3, 3.0); };
  auto k = [](Factory f) { return [f](int) { return f; }; };
  std::vector<Case> c;
  c.push_back({"add", k(binary_lhs([](V a, V b) { return add(a, b); }, same_shapes))});
  c.push_back({"add.scalar_broadcast", k(binary_rhs([](V a, V b) { return add(a, b); },
                                                    [](Gen& g) { return std::pair{Shape{g.dim(1, 4), g.dim(1, 4)}, Shape{}}; }))});
  c.push_back({"add.row_bias", k(binary_rhs([](V a, V b) { return add(a, b); }, [](Gen& g) {
                 const Index cols = g.dim(1, 4);
                 return std::pair{Shape{g.dim(1, 4), cols}, Shape{cols}};
               }))});
  c.push_back({"sub", k(binary_rhs([](V a, V b) { return sub(a, b); }, same_shapes))});
  c.push_back({"mul", k(binary_lhs([](V a, V b) { return mul(a, b); }, same_shapes))});
  c.push_back({"scale", k(unary([](V a) { return scale(a, 1.7); }, normal_in))});
  c.push_back({"matmul.lhs", k(binary_lhs([](V a, V b) { return matmul(a, b); }, [](Gen& g) {
                 const Index inner = g.dim(1, 4);
                 return std::pair{Shape{g.dim(1, 4), inner}, Shape{inner, g.dim(1, 4)}};
               }))});
  c.push_back({"matmul.rhs", k(binary_rhs([](V a, V b) { return matmul(a, b); }, [](Gen& g) {
                 const Index inner = g.dim(1, 4);
                 return std::pair{Shape{g.dim(1, 4), inner}, Shape{inner, g.dim(1, 4)}};
               }))});
  c.push_back({"conv2d.input.stride1", k(conv_factory(1, 0))});
  c.push_back({"conv2d.input.stride2", k(conv_factory(2, 0))});
  c.push_back({"conv2d.weight", k(conv_factory(1, 1))});
  c.push_back({"conv2d.weight.stride2", k(conv_factory(2, 1))});
  c.push_back({"conv2d.bias", k(conv_factory(2, 2))});
  c.push_back({"relu", k(unary([](V a) { return relu(a); }, normal_in))});
  c.push_back({"hinge", k(unary([](V a) { return hinge(a); }, normal_in))});
  c.push_back({"tanh", k(unary([](V a) { return fsdag::tanh(a); }, normal_in))});
  c.push_back({"abs", k(unary([](V a) { return fsdag::abs(a); }, normal_in))});
  c.push_back({"log", k(unary([](V a) { return fsdag::log(a); }, positive_in))});
  c.push_back({"sum", k(unary([](V a) { return sum(a); }, normal_in))});
  c.push_back({"mean", k(unary([](V a) { return mean(a); }, normal_in))});
  c.push_back({"reshape", k(unary([](V a) { return reshape(a, Shape{a.size()}); }, normal_in))});
  c.push_back({"channel_softmax", k(softmax_factory(false))});
  c.push_back({"channel_softmax.batched", k(softmax_factory(true))});
  c.push_back({"bilinear_sample.fmap", k(bilinear_factory(false))});
  c.push_back({"bilinear_sample.points", k(bilinear_factory(true))});
  c.push_back({"concat.axis0", k(concat_factory(0))});
  c.push_back({"concat.axis1", k(concat_factory(1))});
  c.push_back({"gcn_layer", k(gcn_factory())});
  c.push_back({"loss.global", k(landmark_loss_factory(0))});
  c.push_back({"loss.local", k(landmark_loss_factory(1))});
  c.push_back({"loss.js", k(js_factory())});
  c.push_back({"model.supervised_total", [](int i) { return dag_factory(static_cast<std::size_t>(i)); }});
  return c;
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(int instances, std::uint64_t seed) {
  std::vector<GradCheckEntry> out;
  std::uint64_t case_index = 0;
  for (const Case& c : cases()) {
    GradCheckEntry e;
    e.name = c.name;
    for (int i = 0; i < instances; ++i) {
      Gen g(derive_seed({seed, case_index, static_cast<std::uint64_t>(i)}));
      Instance inst = c.factory(i)(g);
      const GradCheckResult r = finite_diff_check(inst.program, inst.x);
      e.max_rel_error = std::max(e.max_rel_error, r.max_rel_error);
      e.checked += r.checked;
      e.skipped += static_cast<long long>(r.skipped.size());
      ++e.instances;
    }
    out.push_back(std::move(e));
    ++case_index;
  }
  return out;
}

}  // namespace fsdag
