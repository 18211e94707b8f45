#pragma once

#include "fsdag/model.hpp"
#include "fsdag/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fsdag {

/// Adaptive moment estimates for one parameter set.
template <typename Scalar>
struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor<Scalar>> first_moment;
  std::vector<Tensor<Scalar>> second_moment;

  static OptimizerState for_params(const std::vector<Tensor<Scalar>>& params) {
    OptimizerState s;
    for (const auto& p : params) {
      s.first_moment.emplace_back(p.shape());
      s.second_moment.emplace_back(p.shape());
    }
    return s;
  }

  bool operator==(const OptimizerState&) const = default;
};

/// One bias-corrected Adam update with decoupled weight decay
/// (p -= lr * weight_decay * p before the adaptive step).
template <typename Scalar>
void adam_step(std::vector<Tensor<Scalar>>& params, const std::vector<Tensor<Scalar>>& grads, OptimizerState<Scalar>& opt,
               double lr, double weight_decay) {
  if (params.size() != grads.size() || params.size() != opt.first_moment.size() ||
      params.size() != opt.second_moment.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape() || params[i].shape() != opt.first_moment[i].shape() ||
        params[i].shape() != opt.second_moment[i].shape()) {
      throw std::invalid_argument("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
  }
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const Scalar b1 = static_cast<Scalar>(opt.beta1), b2 = static_cast<Scalar>(opt.beta2);
  const Scalar corr1 = static_cast<Scalar>(1.0 - std::pow(opt.beta1, t));
  const Scalar corr2 = static_cast<Scalar>(1.0 - std::pow(opt.beta2, t));
  const Scalar step = static_cast<Scalar>(lr);
  const Scalar decay = static_cast<Scalar>(lr * weight_decay);
  const Scalar eps = static_cast<Scalar>(opt.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].values();
    const auto& g = grads[i].values();
    auto& m = opt.first_moment[i].values();
    auto& v = opt.second_moment[i].values();
    if (decay != Scalar(0)) p -= decay * p;
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g * g;
    p -= step * (m / corr1) / ((v / corr2).sqrt() + eps);
  }
}

template <typename Scalar>
void adam_step(DagModelParams<Scalar>& params, const std::vector<Tensor<Scalar>>& grads, OptimizerState<Scalar>& opt,
               double lr, double weight_decay) {
  adam_step(params.tensors(), grads, opt, lr, weight_decay);
}

}  // namespace fsdag
