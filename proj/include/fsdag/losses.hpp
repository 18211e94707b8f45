#pragma once

#include "fsdag/geometry.hpp"
#include "fsdag/model.hpp"
#include "fsdag/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace fsdag {

struct LossConfig {
  double margin = 0.01;  // normalized coordinate units
  double w1 = 1.0;       // local loss weight
  double w2 = 1.0;       // JS loss weight
  double kl_epsilon = 1e-8;

  void validate() const {
    if (!(margin >= 0)) throw std::invalid_argument("LossConfig: margin must be >= 0");
    if (!(w1 >= 0) || !(w2 >= 0)) throw std::invalid_argument("LossConfig: weights must be >= 0");
    if (!(kl_epsilon > 0 && kl_epsilon <= 1e-6)) throw std::invalid_argument("LossConfig: kl_epsilon must be in (0, 1e-6]");
  }
};

namespace detail {

template <typename Scalar>
void check_landmark_pair(Var<Scalar> a, Var<Scalar> b, Index k, const char* op) {
  if (a.shape() != b.shape() || a.shape().size() != 2 || a.shape()[1] != 2 || k < 1 || a.shape()[0] % k != 0) {
    throw std::invalid_argument(std::string(op) + ": landmark shapes differ (" + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()) + ")");
  }
}

}  // namespace detail

namespace detail {

/// Per-sample mean over 2K components of |v - gt|, shape [B, 1].
template <typename Scalar>
Var<Scalar> per_sample_l1(Var<Scalar> v, Var<Scalar> v_gt, Index k) {
  Tape<Scalar>& tape = *v.tape;
  const Index batch = v.shape()[0] / k;
  Var<Scalar> per_component = reshape(abs(sub(v, v_gt)), Shape{batch, 2 * k});
  Var<Scalar> averaging = tape.constant(Tensor<Scalar>::filled(Shape{2 * k, 1}, Scalar(1) / static_cast<Scalar>(2 * k)));
  return matmul(per_component, averaging);
}

}  // namespace detail

/// Batch mean over samples of [mean over 2K components |v - gt| - m]_+.
/// v, gt: [B*K, 2].
template <typename Scalar>
Var<Scalar> global_loss(Var<Scalar> v_global, Var<Scalar> v_gt, Index k, double margin) {
  detail::check_landmark_pair(v_global, v_gt, k, "global_loss");
  Tape<Scalar>& tape = *v_global.tape;
  Var<Scalar> per_sample = detail::per_sample_l1(v_global, v_gt, k);
  return mean(hinge(sub(per_sample, tape.constant(Tensor<Scalar>::scalar(static_cast<Scalar>(margin))))));
}

/// Mean over all 2K components (and the batch) of |v - gt|. Reduced per
/// sample first so that global_loss with m = 0 matches it bit for bit.
template <typename Scalar>
Var<Scalar> local_loss(Var<Scalar> v_local, Var<Scalar> v_gt, Index k) {
  detail::check_landmark_pair(v_local, v_gt, k, "local_loss");
  return mean(detail::per_sample_l1(v_local, v_gt, k));
}

/// sum_i p_i log((p_i + eps) / (q_i + eps)).
inline double kl_divergence(const Eigen::ArrayXd& p, const Eigen::ArrayXd& q, double eps = 1e-8) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: length mismatch");
  return (p * ((p + eps) / (q + eps)).log()).sum();
}

/// Elementwise KL terms p (log(p + eps) - log(q + eps)), summed.
template <typename Scalar>
Var<Scalar> kl_divergence(Var<Scalar> p, Var<Scalar> q, double eps) {
  if (p.shape() != q.shape()) throw std::invalid_argument("kl_divergence: shape mismatch");
  Tape<Scalar>& tape = *p.tape;
  Var<Scalar> e = tape.constant(Tensor<Scalar>::scalar(static_cast<Scalar>(eps)));
  return sum(mul(p, sub(log(add(p, e)), log(add(q, e)))));
}

/// Jensen-Shannon consistency between student and teacher activation maps
/// [B, C, H, W]: channel softmax per site, KL of each to their mean, summed
/// over sites and normalized by 2 B C H W. The teacher map is detached.
template <typename Scalar>
Var<Scalar> js_loss(Var<Scalar> a_student, Var<Scalar> a_teacher, double eps) {
  if (a_student.shape() != a_teacher.shape()) {
    throw std::invalid_argument("js_loss: shape mismatch " + shape_string(a_student.shape()) + " vs " +
                                shape_string(a_teacher.shape()));
  }
  if (a_student.shape().size() != 4) throw std::invalid_argument("js_loss: activation maps must be [B,C,H,W]");
  Var<Scalar> p_s = channel_softmax(a_student, 1);
  Var<Scalar> p_t = channel_softmax(detach(a_teacher), 1);
  Var<Scalar> m = scale(add(p_s, p_t), Scalar(0.5));
  const Scalar omega = static_cast<Scalar>(a_student.size());
  return scale(add(kl_divergence(p_s, m, eps), kl_divergence(p_t, m, eps)), Scalar(1) / (Scalar(2) * omega));
}

/// L_global + w1 L_local, local term on the final cascade output.
template <typename Scalar>
Var<Scalar> supervised_total(const DagOutputs<Scalar>& out, Var<Scalar> v_gt, Index k, const LossConfig& cfg) {
  Var<Scalar> g = global_loss(out.v_global, v_gt, k, cfg.margin);
  Var<Scalar> l = local_loss(out.v_local(), v_gt, k);
  return add(g, scale(l, static_cast<Scalar>(cfg.w1)));
}

/// Teacher final vertices as a gradient-free pseudo ground truth.
template <typename Scalar>
Var<Scalar> pseudo_gt_from_teacher(Tape<Scalar>& student_tape, const DagOutputs<Scalar>& teacher_out) {
  return student_tape.constant(teacher_out.v_local().value());
}

/// L'_global + w1 L'_local + w2 L_js against the teacher's outputs, which may
/// live on another tape; only their values are read.
template <typename Scalar>
Var<Scalar> unlabeled_total(const DagOutputs<Scalar>& student, const DagOutputs<Scalar>& teacher, Index k,
                            const LossConfig& cfg) {
  Tape<Scalar>& tape = *student.fmap.tape;
  Var<Scalar> pseudo = pseudo_gt_from_teacher(tape, teacher);
  Var<Scalar> total = supervised_total(student, pseudo, k, cfg);
  if (cfg.w2 > 0) {
    Var<Scalar> a_t = tape.constant(teacher.fmap.value());
    total = add(total, scale(js_loss(student.fmap, a_t, cfg.kl_epsilon), static_cast<Scalar>(cfg.w2)));
  }
  return total;
}

}  // namespace fsdag
