#pragma once

#include "fsdag/tensor.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <deque>
#include <vector>

namespace fsdag {

template <typename Scalar>
class Tape;

/// Handle to a node recorded on a Tape.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  Index id = -1;

  const Tensor<Scalar>& value() const { return tape->value(*this); }
  const Shape& shape() const { return value().shape(); }
  Index size() const { return value().size(); }
  bool requires_grad() const { return tape->requires_grad(*this); }
};

/// Record of executed operations for reverse accumulation.
///
/// Nodes are appended in execution order, so node ids are already a
/// topological order; backward() walks them from the loss down to id 0.
/// Nodes whose inputs carry no gradient are stored without a backward
/// closure, which keeps gradient-free forwards (teacher, evaluation) cheap.
template <typename Scalar>
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor<Scalar>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> leaf(Tensor<Scalar> value, bool requires_grad = true) {
    nodes_.push_back(Node{std::move(value), Tensor<Scalar>(), false, requires_grad, nullptr});
    return Var<Scalar>{this, static_cast<Index>(nodes_.size()) - 1};
  }

  Var<Scalar> constant(Tensor<Scalar> value) { return leaf(std::move(value), false); }

  /// Appends an op result. `fn` is dropped when `requires_grad` is false.
  Var<Scalar> record(Tensor<Scalar> value, bool requires_grad, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), Tensor<Scalar>(), false, requires_grad,
                          requires_grad ? std::move(fn) : BackwardFn{}});
    return Var<Scalar>{this, static_cast<Index>(nodes_.size()) - 1};
  }

  const Tensor<Scalar>& value(Var<Scalar> v) const { return node(v).value; }
  bool requires_grad(Var<Scalar> v) const { return node(v).requires_grad; }
  Index size() const { return static_cast<Index>(nodes_.size()); }

  /// Gradient of the last backward pass; zeros when the node received none.
  Tensor<Scalar> grad(Var<Scalar> v) const {
    const Node& n = node(v);
    if (!n.has_grad) return Tensor<Scalar>(n.value.shape());
    return n.grad;
  }

  /// Adds `g` into the gradient buffer of `v` (no-op for non-tracked nodes).
  template <typename Derived>
  void accumulate(Var<Scalar> v, const Eigen::ArrayBase<Derived>& g) {
    Node& n = node(v);
    if (!n.requires_grad) return;
    ensure_grad(n);
    n.grad.values() += g;
  }

  /// Mutable gradient buffer for scatter-style accumulation.
  Tensor<Scalar>& grad_buffer(Var<Scalar> v) {
    Node& n = node(v);
    ensure_grad(n);
    return n.grad;
  }

  void backward(Var<Scalar> loss) {
    if (loss.tape != this) throw std::invalid_argument("backward: variable belongs to another tape");
    if (value(loss).size() != 1) {
      throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_string(value(loss).shape()));
    }
    for (Node& n : nodes_) {
      n.has_grad = false;
      n.grad = Tensor<Scalar>();
    }
    Node& root = node(loss);
    if (!root.requires_grad) return;
    ensure_grad(root);
    root.grad.values().setOnes();
    for (Index id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      // Closures only write into buffers of earlier nodes.
      if (n.has_grad && n.backward) n.backward(n.grad);
    }
  }

  // Region tracking for finite-difference checks. Piecewise ops report the
  // region each input coordinate falls in and the distance to the nearest
  // region boundary; a gradient check compares regions on both sides of a
  // perturbation to skip coordinates where the function is not smooth.
  void set_track_regions(bool on) { track_regions_ = on; }
  bool tracking_regions() const { return track_regions_; }
  void note_region(std::int64_t region, double boundary_distance) {
    regions_.push_back(region);
    min_boundary_distance_ = std::min(min_boundary_distance_, boundary_distance);
  }
  const std::vector<std::int64_t>& regions() const { return regions_; }
  double min_boundary_distance() const { return min_boundary_distance_; }

 private:
  struct Node {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    bool has_grad;
    bool requires_grad;
    BackwardFn backward;
  };

  Node& node(Var<Scalar> v) {
    if (v.tape != this || v.id < 0 || v.id >= size()) throw std::invalid_argument("Tape: invalid variable");
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  const Node& node(Var<Scalar> v) const {
    if (v.tape != this || v.id < 0 || v.id >= size()) throw std::invalid_argument("Tape: invalid variable");
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  static void ensure_grad(Node& n) {
    if (!n.has_grad) {
      n.grad = Tensor<Scalar>(n.value.shape());
      n.has_grad = true;
    }
  }

  std::deque<Node> nodes_;  // stable references across appends
  bool track_regions_ = false;
  std::vector<std::int64_t> regions_;
  double min_boundary_distance_ = std::numeric_limits<double>::infinity();
};

}  // namespace fsdag
