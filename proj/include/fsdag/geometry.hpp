#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <initializer_list>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fsdag {

/// Grayscale image, row-major, intensities nominally in [0, 1].
using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// K ordered (x, y) vertices in normalized image coordinates: (0, 0) is the
/// top-left pixel centre and (1, 1) the bottom-right one.
class LandmarkSet {
 public:
  using Coords = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

  LandmarkSet() = default;
  explicit LandmarkSet(Eigen::Index k) : coords_(Coords::Zero(k, 2)) {}
  explicit LandmarkSet(Coords coords) : coords_(std::move(coords)) {}
  LandmarkSet(std::initializer_list<std::array<double, 2>> points) : coords_(static_cast<Eigen::Index>(points.size()), 2) {
    Eigen::Index i = 0;
    for (const auto& p : points) {
      coords_(i, 0) = p[0];
      coords_(i, 1) = p[1];
      ++i;
    }
  }

  Eigen::Index size() const { return coords_.rows(); }
  const Coords& coords() const { return coords_; }
  Coords& coords() { return coords_; }
  double x(Eigen::Index i) const { return coords_(i, 0); }
  double y(Eigen::Index i) const { return coords_(i, 1); }

  bool operator==(const LandmarkSet& other) const {
    return coords_.rows() == other.coords_.rows() && coords_ == other.coords_;
  }

 private:
  Coords coords_;
};

using MeanShape = LandmarkSet;

/// Per-vertex arithmetic mean of the given landmark sets.
inline MeanShape compute_mean_shape(const std::vector<LandmarkSet>& sets) {
  if (sets.empty()) throw std::invalid_argument("compute_mean_shape: empty list");
  const Eigen::Index k = sets.front().size();
  LandmarkSet::Coords total = LandmarkSet::Coords::Zero(k, 2);
  for (const auto& s : sets) {
    if (s.size() != k) throw std::invalid_argument("compute_mean_shape: landmark counts differ");
    total += s.coords();
  }
  return MeanShape(LandmarkSet::Coords(total / static_cast<double>(sets.size())));
}

/// 2x3 transform (a11, a12, a21, a22, tx, ty).
struct AffineParams {
  std::array<double, 6> values{1, 0, 0, 1, 0, 0};

  static AffineParams identity() { return {}; }
};

inline LandmarkSet apply_affine(const LandmarkSet& shape, const AffineParams& a) {
  const auto& v = a.values;
  LandmarkSet out(shape.size());
  for (Eigen::Index i = 0; i < shape.size(); ++i) {
    const double x = shape.x(i), y = shape.y(i);
    out.coords()(i, 0) = v[0] * x + v[1] * y + v[4];
    out.coords()(i, 1) = v[2] * x + v[3] * y + v[5];
  }
  return out;
}

/// Undirected landmark graph.
class GraphTopology {
 public:
  using Edge = std::pair<Eigen::Index, Eigen::Index>;

  GraphTopology(Eigen::Index k, std::vector<Edge> edges) : k_(k), edges_(std::move(edges)), neighbors_(k) {
    if (k < 1) throw std::invalid_argument("GraphTopology: need at least one vertex");
    for (auto [a, b] : edges_) {
      if (a < 0 || b < 0 || a >= k || b >= k) throw std::invalid_argument("GraphTopology: vertex out of range");
      if (a == b) throw std::invalid_argument("GraphTopology: self-loop");
      auto& na = neighbors_[static_cast<std::size_t>(a)];
      if (std::find(na.begin(), na.end(), b) != na.end()) continue;
      na.push_back(b);
      neighbors_[static_cast<std::size_t>(b)].push_back(a);
    }
    if (!connected()) throw std::invalid_argument("GraphTopology: graph is not connected");
  }

  static GraphTopology fully_connected(Eigen::Index k) {
    std::vector<Edge> edges;
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = a + 1; b < k; ++b) edges.emplace_back(a, b);
    return GraphTopology(k, std::move(edges));
  }

  Eigen::Index size() const { return k_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Eigen::Index>& neighbors(Eigen::Index v) const { return neighbors_.at(static_cast<std::size_t>(v)); }

  /// Row i averages the rows of i's neighbours.
  Eigen::MatrixXd neighbor_mean_matrix() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k_, k_);
    for (Eigen::Index i = 0; i < k_; ++i) {
      const auto& n = neighbors(i);
      for (Eigen::Index j : n) m(i, j) = 1.0 / static_cast<double>(n.size());
    }
    return m;
  }

 private:
  bool connected() const {
    std::vector<bool> seen(static_cast<std::size_t>(k_), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      for (Eigen::Index n : neighbors_[static_cast<std::size_t>(v)]) {
        if (!seen[static_cast<std::size_t>(n)]) {
          seen[static_cast<std::size_t>(n)] = true;
          stack.push_back(n);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
  }

  Eigen::Index k_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Eigen::Index>> neighbors_;
};

}  // namespace fsdag
