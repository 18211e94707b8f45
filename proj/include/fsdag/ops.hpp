#pragma once

#include "fsdag/tape.hpp"
#include "fsdag/tensor.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

// Primitive differentiable ops. Every op takes and returns Vars on a single
// tape; gradients of the inputs are written back by the recorded closure.

namespace fsdag {

namespace detail {

template <typename Scalar>
Tape<Scalar>& same_tape(Var<Scalar> a, Var<Scalar> b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
  return *a.tape;
}

enum class Broadcast { kNone, kScalar, kRow };

template <typename Scalar>
Broadcast broadcast_mode(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (b.rank() == 0) return Broadcast::kScalar;
  if (b.rank() == 1 && a.rank() >= 1 && b.dim(0) == a.shape().back()) return Broadcast::kRow;
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                              shape_string(b.shape()));
}

template <typename Scalar>
void note_sign_regions(Tape<Scalar>& tape, const typename Tensor<Scalar>::Array& x) {
  if (!tape.tracking_regions()) return;
  for (Index i = 0; i < x.size(); ++i) tape.note_region(x[i] > 0 ? 1 : 0, std::abs(static_cast<double>(x[i])));
}

}  // namespace detail

/// Elementwise sum. `b` may also be a rank-0 scalar or a bias vector matching
/// the last dimension of `a`.
template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& tape = detail::same_tape(a, b, "add");
  const Tensor<Scalar>& av = a.value();
  const Tensor<Scalar>& bv = b.value();
  const auto mode = detail::broadcast_mode(av, bv, "add");
  Tensor<Scalar> out = av;
  Index cols = bv.size();
  Index rows = av.size() / std::max<Index>(cols, 1);
  switch (mode) {
    case detail::Broadcast::kNone: out.values() += bv.values(); break;
    case detail::Broadcast::kScalar: out.values() += bv[0]; break;
    case detail::Broadcast::kRow: out.matrix(rows, cols).rowwise() += bv.matrix(1, cols).row(0); break;
  }
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(),
                     [&tape, a, b, mode, rows, cols](const Tensor<Scalar>& g) {
                       tape.accumulate(a, g.values());
                       if (!b.requires_grad()) return;
                       switch (mode) {
                         case detail::Broadcast::kNone: tape.accumulate(b, g.values()); break;
                         case detail::Broadcast::kScalar: tape.grad_buffer(b)[0] += g.values().sum(); break;
                         case detail::Broadcast::kRow:
                           tape.grad_buffer(b).matrix(1, cols).row(0) += g.matrix(rows, cols).colwise().sum();
                           break;
                       }
                     });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& tape = detail::same_tape(a, b, "sub");
  const Tensor<Scalar>& av = a.value();
  const Tensor<Scalar>& bv = b.value();
  const auto mode = detail::broadcast_mode(av, bv, "sub");
  if (mode == detail::Broadcast::kRow) throw std::invalid_argument("sub: row broadcast not supported");
  Tensor<Scalar> out = av;
  if (mode == detail::Broadcast::kNone) {
    out.values() -= bv.values();
  } else {
    out.values() -= bv[0];
  }
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(),
                     [&tape, a, b, mode](const Tensor<Scalar>& g) {
                       tape.accumulate(a, g.values());
                       if (!b.requires_grad()) return;
                       if (mode == detail::Broadcast::kNone) {
                         tape.accumulate(b, -g.values());
                       } else {
                         tape.grad_buffer(b)[0] -= g.values().sum();
                       }
                     });
}

/// Elementwise product; `b` may be a rank-0 scalar.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& tape = detail::same_tape(a, b, "mul");
  const Tensor<Scalar>& av = a.value();
  const Tensor<Scalar>& bv = b.value();
  const auto mode = detail::broadcast_mode(av, bv, "mul");
  if (mode == detail::Broadcast::kRow) throw std::invalid_argument("mul: row broadcast not supported");
  Tensor<Scalar> out = av;
  if (mode == detail::Broadcast::kNone) {
    out.values() *= bv.values();
  } else {
    out.values() *= bv[0];
  }
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(),
                     [&tape, a, b, mode](const Tensor<Scalar>& g) {
                       const auto& av = a.value().values();
                       const auto& bv = b.value().values();
                       if (mode == detail::Broadcast::kNone) {
                         if (a.requires_grad()) tape.accumulate(a, g.values() * bv);
                         if (b.requires_grad()) tape.accumulate(b, g.values() * av);
                       } else {
                         if (a.requires_grad()) tape.accumulate(a, g.values() * bv[0]);
                         if (b.requires_grad()) tape.grad_buffer(b)[0] += (g.values() * av).sum();
                       }
                     });
}

/// Multiplication by a fixed constant.
template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  Tape<Scalar>& tape = *a.tape;
  Tensor<Scalar> out = a.value();
  out.values() *= s;
  return tape.record(std::move(out), a.requires_grad(),
                     [&tape, a, s](const Tensor<Scalar>& g) { tape.accumulate(a, g.values() * s); });
}

/// [m,k] x [k,n] -> [m,n].
template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& tape = detail::same_tape(a, b, "matmul");
  const Tensor<Scalar>& av = a.value();
  const Tensor<Scalar>& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_string(av.shape()) + " and " +
                                shape_string(bv.shape()));
  }
  const Index m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor<Scalar> out(Shape{m, n});
  out.matrix(m, n).noalias() = av.matrix(m, k) * bv.matrix(k, n);
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(),
                     [&tape, a, b, m, k, n](const Tensor<Scalar>& g) {
                       if (a.requires_grad()) {
                         tape.grad_buffer(a).matrix(m, k).noalias() += g.matrix(m, n) * b.value().matrix(k, n).transpose();
                       }
                       if (b.requires_grad()) {
                         tape.grad_buffer(b).matrix(k, n).noalias() += a.value().matrix(m, k).transpose() * g.matrix(m, n);
                       }
                     });
}

namespace detail {

// Unfolds 3x3 zero-padded patches of one C x H x W image into a
// (C*9) x (Hout*Wout) matrix.
template <typename Scalar>
void im2col(const Scalar* img, Index channels, Index height, Index width, Index stride, Index out_h, Index out_w,
            Scalar* cols) {
  const Index plane = out_h * out_w;
  for (Index c = 0; c < channels; ++c) {
    const Scalar* src = img + c * height * width;
    for (Index ky = 0; ky < 3; ++ky) {
      for (Index kx = 0; kx < 3; ++kx) {
        Scalar* dst = cols + ((c * 3 + ky) * 3 + kx) * plane;
        for (Index oy = 0; oy < out_h; ++oy) {
          const Index iy = oy * stride + ky - 1;
          Scalar* row = dst + oy * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(row, row + out_w, Scalar(0));
            continue;
          }
          for (Index ox = 0; ox < out_w; ++ox) {
            const Index ix = ox * stride + kx - 1;
            row[ox] = (ix >= 0 && ix < width) ? src[iy * width + ix] : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const Scalar* cols, Index channels, Index height, Index width, Index stride, Index out_h, Index out_w,
            Scalar* img) {
  const Index plane = out_h * out_w;
  for (Index c = 0; c < channels; ++c) {
    Scalar* dst = img + c * height * width;
    for (Index ky = 0; ky < 3; ++ky) {
      for (Index kx = 0; kx < 3; ++kx) {
        const Scalar* src = cols + ((c * 3 + ky) * 3 + kx) * plane;
        for (Index oy = 0; oy < out_h; ++oy) {
          const Index iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= height) continue;
          for (Index ox = 0; ox < out_w; ++ox) {
            const Index ix = ox * stride + kx - 1;
            if (ix >= 0 && ix < width) dst[iy * width + ix] += src[oy * out_w + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 3x3 convolution with zero padding 1.
/// x: [B, Cin, H, W], weight: [Cout, Cin, 3, 3], bias: [Cout] -> [B, Cout, H', W']
/// with H' = (H - 1) / stride + 1.
template <typename Scalar>
Var<Scalar> conv2d(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias, Index stride) {
  Tape<Scalar>& tape = detail::same_tape(x, weight, "conv2d");
  detail::same_tape(x, bias, "conv2d");
  const Tensor<Scalar>& xv = x.value();
  const Tensor<Scalar>& wv = weight.value();
  const Tensor<Scalar>& bv = bias.value();
  if (stride != 1 && stride != 2) throw std::invalid_argument("conv2d: stride must be 1 or 2");
  if (xv.rank() != 4 || wv.rank() != 4 || wv.dim(2) != 3 || wv.dim(3) != 3 || wv.dim(1) != xv.dim(1) ||
      bv.rank() != 1 || bv.dim(0) != wv.dim(0)) {
    throw std::invalid_argument("conv2d: incompatible shapes x=" + shape_string(xv.shape()) +
                                " w=" + shape_string(wv.shape()) + " b=" + shape_string(bv.shape()));
  }
  const Index batch = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), w = xv.dim(3), cout = wv.dim(0);
  if (h < 1 || w < 1) throw std::invalid_argument("conv2d: empty spatial extent");
  const Index oh = (h - 1) / stride + 1, ow = (w - 1) / stride + 1;
  const Index kdim = cin * 9, plane = oh * ow;
  using RowMatrix = typename Tensor<Scalar>::RowMatrix;
  const bool needs_grad = x.requires_grad() || weight.requires_grad() || bias.requires_grad();
  auto cols = std::make_shared<std::vector<RowMatrix>>(static_cast<std::size_t>(batch));

  Tensor<Scalar> out(Shape{batch, cout, oh, ow});
  const auto wm = wv.matrix(cout, kdim);
  RowMatrix scratch(kdim, plane);
  for (Index bi = 0; bi < batch; ++bi) {
    RowMatrix& col = needs_grad ? (*cols)[static_cast<std::size_t>(bi)] : scratch;
    col.resize(kdim, plane);
    detail::im2col(xv.data() + bi * cin * h * w, cin, h, w, stride, oh, ow, col.data());
    auto om = Eigen::Map<RowMatrix>(out.data() + bi * cout * plane, cout, plane);
    om.noalias() = wm * col;
    om.colwise() += bv.values().matrix();
  }
  return tape.record(std::move(out), needs_grad,
                     [&tape, x, weight, bias, cols, batch, cin, h, w, cout, oh, ow, kdim, plane, stride](
                         const Tensor<Scalar>& g) {
                       const auto wm = weight.value().matrix(cout, kdim);
                       RowMatrix dcol(kdim, plane);
                       for (Index bi = 0; bi < batch; ++bi) {
                         const auto gm = Eigen::Map<const RowMatrix>(g.data() + bi * cout * plane, cout, plane);
                         const RowMatrix& col = (*cols)[static_cast<std::size_t>(bi)];
                         if (weight.requires_grad()) tape.grad_buffer(weight).matrix(cout, kdim).noalias() += gm * col.transpose();
                         if (bias.requires_grad()) tape.grad_buffer(bias).values().matrix() += gm.rowwise().sum();
                         if (x.requires_grad()) {
                           dcol.noalias() = wm.transpose() * gm;
                           detail::col2im(dcol.data(), cin, h, w, stride, oh, ow,
                                          tape.grad_buffer(x).data() + bi * cin * h * w);
                         }
                       }
                     });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  Tape<Scalar>& tape = *x.tape;
  const auto& xv = x.value().values();
  detail::note_sign_regions(tape, xv);
  Tensor<Scalar> out(x.shape(), xv.max(Scalar(0)));
  return tape.record(std::move(out), x.requires_grad(), [&tape, x](const Tensor<Scalar>& g) {
    tape.accumulate(x, (x.value().values() > Scalar(0)).select(g.values(), Scalar(0)));
  });
}

/// max(x, 0), used as the margin hinge.
template <typename Scalar>
Var<Scalar> hinge(Var<Scalar> x) {
  return relu(x);
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> x) {
  Tape<Scalar>& tape = *x.tape;
  Tensor<Scalar> out(x.shape(), x.value().values().tanh());
  const Index id = tape.size();
  return tape.record(std::move(out), x.requires_grad(), [&tape, x, id](const Tensor<Scalar>& g) {
    const auto& y = tape.value(Var<Scalar>{&tape, id}).values();
    tape.accumulate(x, g.values() * (Scalar(1) - y * y));
  });
}

template <typename Scalar>
Var<Scalar> abs(Var<Scalar> x) {
  Tape<Scalar>& tape = *x.tape;
  const auto& xv = x.value().values();
  detail::note_sign_regions(tape, xv);
  Tensor<Scalar> out(x.shape(), xv.abs());
  return tape.record(std::move(out), x.requires_grad(), [&tape, x](const Tensor<Scalar>& g) {
    const auto& v = x.value().values();
    tape.accumulate(x, g.values() * ((v > Scalar(0)).template cast<Scalar>() - (v < Scalar(0)).template cast<Scalar>()));
  });
}

/// Natural log; every input must be strictly positive.
template <typename Scalar>
Var<Scalar> log(Var<Scalar> x) {
  Tape<Scalar>& tape = *x.tape;
  const auto& xv = x.value().values();
  if (!(xv > Scalar(0)).all()) throw std::domain_error("log: non-positive input");
  Tensor<Scalar> out(x.shape(), xv.log());
  return tape.record(std::move(out), x.requires_grad(), [&tape, x](const Tensor<Scalar>& g) {
    tape.accumulate(x, g.values() / x.value().values());
  });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  Tape<Scalar>& tape = *x.tape;
  return tape.record(Tensor<Scalar>::scalar(x.value().values().sum()), x.requires_grad(),
                     [&tape, x](const Tensor<Scalar>& g) {
                       tape.grad_buffer(x).values() += g[0];
                     });
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> x) {
  Tape<Scalar>& tape = *x.tape;
  const Index n = x.size();
  if (n == 0) throw std::invalid_argument("mean: empty tensor");
  return tape.record(Tensor<Scalar>::scalar(x.value().values().sum() / static_cast<Scalar>(n)), x.requires_grad(),
                     [&tape, x, n](const Tensor<Scalar>& g) {
                       tape.grad_buffer(x).values() += g[0] / static_cast<Scalar>(n);
                     });
}

/// Softmax along `axis` with max subtraction.
template <typename Scalar>
Var<Scalar> channel_softmax(Var<Scalar> x, Index axis = 0) {
  Tape<Scalar>& tape = *x.tape;
  const Tensor<Scalar>& xv = x.value();
  if (xv.empty()) throw std::invalid_argument("channel_softmax: empty tensor");
  if (axis < 0 || axis >= xv.rank()) throw std::invalid_argument("channel_softmax: axis out of range");
  Index outer = 1, inner = 1;
  for (Index i = 0; i < axis; ++i) outer *= xv.dim(i);
  for (Index i = axis + 1; i < xv.rank(); ++i) inner *= xv.dim(i);
  const Index channels = xv.dim(axis);
  Tensor<Scalar> out(xv.shape());
  for (Index o = 0; o < outer; ++o) {
    const Scalar* src = xv.data() + o * channels * inner;
    Scalar* dst = out.data() + o * channels * inner;
    for (Index i = 0; i < inner; ++i) {
      Scalar mx = src[i];
      for (Index c = 1; c < channels; ++c) mx = std::max(mx, src[c * inner + i]);
      Scalar total = 0;
      for (Index c = 0; c < channels; ++c) {
        const Scalar e = std::exp(src[c * inner + i] - mx);
        dst[c * inner + i] = e;
        total += e;
      }
      for (Index c = 0; c < channels; ++c) dst[c * inner + i] /= total;
    }
  }
  const Index id = tape.size();
  return tape.record(std::move(out), x.requires_grad(), [&tape, x, id, outer, inner, channels](const Tensor<Scalar>& g) {
    const Tensor<Scalar>& y = tape.value(Var<Scalar>{&tape, id});
    Tensor<Scalar>& gx = tape.grad_buffer(x);
    for (Index o = 0; o < outer; ++o) {
      const Index base = o * channels * inner;
      for (Index i = 0; i < inner; ++i) {
        Scalar dot = 0;
        for (Index c = 0; c < channels; ++c) dot += g[base + c * inner + i] * y[base + c * inner + i];
        for (Index c = 0; c < channels; ++c) {
          const Index k = base + c * inner + i;
          gx[k] += y[k] * (g[k] - dot);
        }
      }
    }
  });
}

/// Bilinear interpolation of a feature map at continuous pixel positions.
///
/// fmap: [C, H, W] or [B, C, H, W]; points: [N, 2] holding (x, y) pixel
/// coordinates with N a multiple of B (points are split evenly over the
/// batch, in order). Result: [N, C]. Points are clamped to [0, W-1] x [0, H-1];
/// a clamped coordinate receives zero gradient.
template <typename Scalar>
Var<Scalar> bilinear_sample(Var<Scalar> fmap, Var<Scalar> points) {
  Tape<Scalar>& tape = detail::same_tape(fmap, points, "bilinear_sample");
  const Tensor<Scalar>& fv = fmap.value();
  const Tensor<Scalar>& pv = points.value();
  if (fv.rank() != 3 && fv.rank() != 4) throw std::invalid_argument("bilinear_sample: fmap must be [C,H,W] or [B,C,H,W]");
  const Index batch = fv.rank() == 4 ? fv.dim(0) : 1;
  const Index channels = fv.dim(fv.rank() - 3), height = fv.dim(fv.rank() - 2), width = fv.dim(fv.rank() - 1);
  if (height < 1 || width < 1) throw std::invalid_argument("bilinear_sample: H and W must be >= 1");
  if (pv.rank() != 2 || pv.dim(1) != 2) throw std::invalid_argument("bilinear_sample: points must be [N,2]");
  const Index n = pv.dim(0);
  if (batch == 0 || n % batch != 0) throw std::invalid_argument("bilinear_sample: point count not divisible by batch");
  const Index per_batch = n / batch;

  struct Cell {
    Index x0, y0, x1, y1;
    Scalar fx, fy;
    bool in_x, in_y;
  };
  auto cells = std::make_shared<std::vector<Cell>>(static_cast<std::size_t>(n));
  auto locate = [](Scalar p, Index extent, Index& lo, Index& hi, Scalar& frac, bool& inside) {
    const Scalar top = static_cast<Scalar>(extent - 1);
    inside = p >= Scalar(0) && p <= top;
    const Scalar c = std::clamp(p, Scalar(0), top);
    lo = std::min(static_cast<Index>(std::floor(c)), std::max<Index>(extent - 2, 0));
    hi = std::min(lo + 1, extent - 1);
    frac = extent > 1 ? c - static_cast<Scalar>(lo) : Scalar(0);
  };

  Tensor<Scalar> out(Shape{n, channels});
  const Index plane = height * width;
  for (Index i = 0; i < n; ++i) {
    Cell& cell = (*cells)[static_cast<std::size_t>(i)];
    const Scalar px = pv[2 * i], py = pv[2 * i + 1];
    locate(px, width, cell.x0, cell.x1, cell.fx, cell.in_x);
    locate(py, height, cell.y0, cell.y1, cell.fy, cell.in_y);
    if (tape.tracking_regions()) {
      for (const auto& [p, extent, lo, inside] :
           {std::tuple{px, width, cell.x0, cell.in_x}, std::tuple{py, height, cell.y0, cell.in_y}}) {
        const double top = static_cast<double>(extent - 1);
        const double pd = static_cast<double>(p);
        double dist = std::min(std::abs(pd), std::abs(pd - top));
        if (inside && extent > 1) dist = std::min(dist, std::abs(pd - std::round(pd)));
        tape.note_region(inside ? lo : (pd < 0 ? -1 : -2), dist);
      }
    }
    const Scalar* base = fv.data() + (i / per_batch) * channels * plane;
    for (Index c = 0; c < channels; ++c) {
      const Scalar* f = base + c * plane;
      const Scalar top = (1 - cell.fx) * f[cell.y0 * width + cell.x0] + cell.fx * f[cell.y0 * width + cell.x1];
      const Scalar bot = (1 - cell.fx) * f[cell.y1 * width + cell.x0] + cell.fx * f[cell.y1 * width + cell.x1];
      out[i * channels + c] = (1 - cell.fy) * top + cell.fy * bot;
    }
  }
  return tape.record(std::move(out), fmap.requires_grad() || points.requires_grad(),
                     [&tape, fmap, points, cells, channels, width, plane, per_batch, n](const Tensor<Scalar>& g) {
                       const Tensor<Scalar>& fv = fmap.value();
                       Tensor<Scalar>* gf = fmap.requires_grad() ? &tape.grad_buffer(fmap) : nullptr;
                       Tensor<Scalar>* gp = points.requires_grad() ? &tape.grad_buffer(points) : nullptr;
                       for (Index i = 0; i < n; ++i) {
                         const Cell& cell = (*cells)[static_cast<std::size_t>(i)];
                         const Index offset = (i / per_batch) * channels * plane;
                         const Index i00 = cell.y0 * width + cell.x0, i01 = cell.y0 * width + cell.x1;
                         const Index i10 = cell.y1 * width + cell.x0, i11 = cell.y1 * width + cell.x1;
                         Scalar dx = 0, dy = 0;
                         for (Index c = 0; c < channels; ++c) {
                           const Scalar go = g[i * channels + c];
                           const Index co = offset + c * plane;
                           if (gf) {
                             (*gf)[co + i00] += go * (1 - cell.fx) * (1 - cell.fy);
                             (*gf)[co + i01] += go * cell.fx * (1 - cell.fy);
                             (*gf)[co + i10] += go * (1 - cell.fx) * cell.fy;
                             (*gf)[co + i11] += go * cell.fx * cell.fy;
                           }
                           if (gp) {
                             const Scalar v00 = fv[co + i00], v01 = fv[co + i01], v10 = fv[co + i10], v11 = fv[co + i11];
                             dx += go * ((1 - cell.fy) * (v01 - v00) + cell.fy * (v11 - v10));
                             dy += go * ((1 - cell.fx) * (v10 - v00) + cell.fx * (v11 - v01));
                           }
                         }
                         if (gp) {
                           if (cell.in_x && cell.x1 != cell.x0) (*gp)[2 * i] += dx;
                           if (cell.in_y && cell.y1 != cell.y0) (*gp)[2 * i + 1] += dy;
                         }
                       }
                     });
}

/// Concatenates rank-2 tensors along axis 0 (rows) or 1 (columns).
template <typename Scalar>
Var<Scalar> concat(const std::vector<Var<Scalar>>& parts, Index axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  Tape<Scalar>& tape = *parts.front().tape;
  const Index other = 1 - axis;
  const Index fixed = parts.front().value().rank() == 2 ? parts.front().value().dim(other) : -1;
  Index total = 0;
  bool needs_grad = false;
  for (const auto& p : parts) {
    if (p.tape != &tape) throw std::invalid_argument("concat: operands on different tapes");
    if (p.value().rank() != 2 || p.value().dim(other) != fixed) throw std::invalid_argument("concat: shape mismatch");
    total += p.value().dim(axis);
    needs_grad = needs_grad || p.requires_grad();
  }
  const Index rows = axis == 0 ? total : fixed;
  const Index cols = axis == 0 ? fixed : total;
  Tensor<Scalar> out(Shape{rows, cols});
  auto om = out.matrix(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    const Index r = p.value().dim(0), c = p.value().dim(1);
    if (axis == 0) {
      om.block(at, 0, r, c) = p.value().matrix(r, c);
      at += r;
    } else {
      om.block(0, at, r, c) = p.value().matrix(r, c);
      at += c;
    }
  }
  return tape.record(std::move(out), needs_grad, [&tape, parts, axis, rows, cols](const Tensor<Scalar>& g) {
    const auto gm = g.matrix(rows, cols);
    Index at = 0;
    for (const auto& p : parts) {
      const Index r = p.value().dim(0), c = p.value().dim(1);
      if (p.requires_grad()) {
        tape.grad_buffer(p).matrix(r, c) += axis == 0 ? gm.block(at, 0, r, c) : gm.block(0, at, r, c);
      }
      at += axis == 0 ? r : c;
    }
  });
}

template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> x, Shape shape) {
  Tape<Scalar>& tape = *x.tape;
  Tensor<Scalar> out = x.value().reshaped(std::move(shape));
  return tape.record(std::move(out), x.requires_grad(),
                     [&tape, x](const Tensor<Scalar>& g) { tape.accumulate(x, g.values()); });
}

/// Copy of `x` with no gradient path.
template <typename Scalar>
Var<Scalar> detach(Var<Scalar> x) {
  return x.tape->constant(x.value());
}

}  // namespace fsdag
