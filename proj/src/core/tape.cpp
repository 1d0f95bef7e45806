//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "unimomo/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "unimomo/kernels.hpp"

namespace unimomo {
namespace {

const kernels::Backend& K() { return kernels::active(); }

double stable_sigmoid(double x) {
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  // log(1 + e^x) without overflow for large |x|.
  if (x > 0.0)
    return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

Value Tape::push(Tensor value, bool needs_grad,
                 std::function<void(Tape&)> fn) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.backprop = std::move(fn);
  nodes_.push_back(std::move(n));
  return Value{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(Value v) {
  detail::require(v.valid() && static_cast<std::size_t>(v.id) < nodes_.size(),
                  "Tape: invalid value handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Value v) const {
  detail::require(v.valid() && static_cast<std::size_t>(v.id) < nodes_.size(),
                  "Tape: invalid value handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Tensor& Tape::grad_buf(Value v) {
  Node& n = node(v);
  if (n.grad.size() == 0)
    n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

const Tensor& Tape::val(Value v) const { return node(v).value; }

const Tensor& Tape::grad(Value v) const {
  const Node& n = node(v);
  detail::require(n.grad.size() != 0,
                  "Tape::grad: no gradient recorded for this value");
  return n.grad;
}

// ---------------------------------------------------------------- leaves --

Value Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

Value Tape::leaf(Tensor t, bool needs_grad) {
  return push(std::move(t), needs_grad, nullptr);
}

Value Tape::param(Param& p) {
  Value v = push(p.value, true, nullptr);
  Param* pp = &p;
  node(v).param = pp;
  node(v).backprop = [id = v.id, pp](Tape& t) {
    const Tensor& g = t.nodes_[id].grad;
    detail::require(pp->grad.same_shape(g), "param backward: shape mismatch");
    K().axpy(g.size(), 1.0, g.data(), pp->grad.data());
  };
  return v;
}

// ----------------------------------------------------------- elementwise --

Value Tape::add(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  detail::require(ta.same_shape(tb), "add: shape mismatch");
  Tensor out(ta.rows(), ta.cols());
  K().add(ta.size(), ta.data(), tb.data(), out.data());
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, b](Tape& t) {
      const Tensor& g = t.node(v).grad;
      if (t.node(a).needs_grad)
        K().axpy(g.size(), 1.0, g.data(), t.grad_buf(a).data());
      if (t.node(b).needs_grad)
        K().axpy(g.size(), 1.0, g.data(), t.grad_buf(b).data());
    };
  }
  return v;
}

Value Tape::sub(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  detail::require(ta.same_shape(tb), "sub: shape mismatch");
  Tensor out(ta.rows(), ta.cols());
  K().sub(ta.size(), ta.data(), tb.data(), out.data());
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, b](Tape& t) {
      const Tensor& g = t.node(v).grad;
      if (t.node(a).needs_grad)
        K().axpy(g.size(), 1.0, g.data(), t.grad_buf(a).data());
      if (t.node(b).needs_grad)
        K().axpy(g.size(), -1.0, g.data(), t.grad_buf(b).data());
    };
  }
  return v;
}

Value Tape::mul(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  detail::require(ta.same_shape(tb), "mul: shape mismatch");
  Tensor out(ta.rows(), ta.cols());
  K().mul(ta.size(), ta.data(), tb.data(), out.data());
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, b](Tape& t) {
      const Tensor& g = t.node(v).grad;
      if (t.node(a).needs_grad)
        K().mulacc(g.size(), g.data(), t.val(b).data(), t.grad_buf(a).data());
      if (t.node(b).needs_grad)
        K().mulacc(g.size(), g.data(), t.val(a).data(), t.grad_buf(b).data());
    };
  }
  return v;
}

Value Tape::scale(Value a, double c) {
  Tensor out = val(a);
  K().scale(out.size(), c, out.data());
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, c](Tape& t) {
      const Tensor& g = t.node(v).grad;
      K().axpy(g.size(), c, g.data(), t.grad_buf(a).data());
    };
  }
  return v;
}

Value Tape::add_scalar(Value a, double c) {
  Tensor out = val(a);
  for (double& x : out.vec())
    x += c;
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      K().axpy(g.size(), 1.0, g.data(), t.grad_buf(a).data());
    };
  }
  return v;
}

Value Tape::square(Value a) { return mul(a, a); }

Value Tape::log(Value a) {
  Tensor out = val(a);
  for (double& x : out.vec())
    x = std::log(x);
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& in = t.val(a);
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.vec()[i] += g.vec()[i] / in.vec()[i];
    };
  }
  return v;
}

Value Tape::exp(Value a) {
  Tensor out = val(a);
  for (double& x : out.vec())
    x = std::exp(x);
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      K().mulacc(g.size(), g.data(), t.val(v).data(), t.grad_buf(a).data());
    };
  }
  return v;
}

Value Tape::sqrt(Value a) {
  Tensor out = val(a);
  for (double& x : out.vec())
    x = std::sqrt(x);
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& y = t.val(v);
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.vec()[i] += g.vec()[i] / (2.0 * y.vec()[i]);
    };
  }
  return v;
}

Value Tape::reciprocal(Value a) {
  Tensor out = val(a);
  for (double& x : out.vec())
    x = 1.0 / x;
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& y = t.val(v);
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.vec()[i] -= g.vec()[i] * y.vec()[i] * y.vec()[i];
    };
  }
  return v;
}

Value Tape::silu(Value a) {
  Tensor out = val(a);
  for (double& x : out.vec())
    x = x * stable_sigmoid(x);
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& in = t.val(a);
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = stable_sigmoid(in.vec()[i]);
        ga.vec()[i] += g.vec()[i] * s * (1.0 + in.vec()[i] * (1.0 - s));
      }
    };
  }
  return v;
}

Value Tape::sigmoid(Value a) {
  Tensor out = val(a);
  for (double& x : out.vec())
    x = stable_sigmoid(x);
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& y = t.val(v);
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.vec()[i] += g.vec()[i] * y.vec()[i] * (1.0 - y.vec()[i]);
    };
  }
  return v;
}

Value Tape::softplus(Value a) {
  Tensor out = val(a);
  for (double& x : out.vec())
    x = stable_softplus(x);
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& in = t.val(a);
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.vec()[i] += g.vec()[i] * stable_sigmoid(in.vec()[i]);
    };
  }
  return v;
}

Value Tape::abs(Value a) {
  Tensor out = val(a);
  for (double& x : out.vec())
    x = std::fabs(x);
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& in = t.val(a);
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = in.vec()[i];
        if (x != 0.0) ga.vec()[i] += g.vec()[i] * (x > 0.0 ? 1.0 : -1.0);
      }
    };
  }
  return v;
}

// ------------------------------------------------------------ broadcasts --

Value Tape::add_rowvec(Value a, Value r) {
  const Tensor& ta = val(a);
  const Tensor& tr = val(r);
  detail::require(tr.rows() == 1 && tr.cols() == ta.cols(),
                  "add_rowvec: need a (1,n) row vector");
  Tensor out = ta;
  for (std::size_t i = 0; i < out.rows(); ++i)
    K().axpy(out.cols(), 1.0, tr.data(), out.row_ptr(i));
  const bool ng = node(a).needs_grad || node(r).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, r](Tape& t) {
      const Tensor& g = t.node(v).grad;
      if (t.node(a).needs_grad)
        K().axpy(g.size(), 1.0, g.data(), t.grad_buf(a).data());
      if (t.node(r).needs_grad) {
        Tensor& gr = t.grad_buf(r);
        for (std::size_t i = 0; i < g.rows(); ++i)
          K().axpy(g.cols(), 1.0, g.row_ptr(i), gr.data());
      }
    };
  }
  return v;
}

Value Tape::mul_colvec(Value a, Value c) {
  const Tensor& ta = val(a);
  const Tensor& tc = val(c);
  detail::require(tc.cols() == 1 && tc.rows() == ta.rows(),
                  "mul_colvec: need a (m,1) column vector");
  Tensor out = ta;
  for (std::size_t i = 0; i < out.rows(); ++i)
    K().scale(out.cols(), tc(i, 0), out.row_ptr(i));
  const bool ng = node(a).needs_grad || node(c).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, c](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& ta2 = t.val(a);
      const Tensor& tc2 = t.val(c);
      if (t.node(a).needs_grad) {
        Tensor& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < g.rows(); ++i)
          K().axpy(g.cols(), tc2(i, 0), g.row_ptr(i), ga.row_ptr(i));
      }
      if (t.node(c).needs_grad) {
        Tensor& gc = t.grad_buf(c);
        for (std::size_t i = 0; i < g.rows(); ++i)
          gc(i, 0) += K().dot(g.cols(), g.row_ptr(i), ta2.row_ptr(i));
      }
    };
  }
  return v;
}

Value Tape::repeat_cols(Value a, std::size_t r) {
  detail::require(r >= 1, "repeat_cols: r must be >= 1");
  const Tensor& ta = val(a);
  Tensor out(ta.rows(), ta.cols() * r);
  for (std::size_t i = 0; i < ta.rows(); ++i)
    for (std::size_t j = 0; j < ta.cols(); ++j)
      for (std::size_t t = 0; t < r; ++t)
        out(i, j * r + t) = ta(i, j);
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, r](Tape& t) {
      const Tensor& g = t.node(v).grad;
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < ga.rows(); ++i)
        for (std::size_t j = 0; j < ga.cols(); ++j)
          for (std::size_t k = 0; k < r; ++k)
            ga(i, j) += g(i, j * r + k);
    };
  }
  return v;
}

// --------------------------------------------------------- linear algebra --

Value Tape::matmul(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  detail::require(ta.cols() == tb.rows(), "matmul: inner dimension mismatch");
  Tensor out(ta.rows(), tb.cols());
  K().gemm_nn(ta.rows(), tb.cols(), ta.cols(), ta.data(), tb.data(),
              out.data());
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, b](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& ta2 = t.val(a);
      const Tensor& tb2 = t.val(b);
      if (t.node(a).needs_grad) {
        // dA += dC B^T : (m,n) x (k,n)^T
        K().gemm_nt(ta2.rows(), ta2.cols(), g.cols(), g.data(), tb2.data(),
                    t.grad_buf(a).data());
      }
      if (t.node(b).needs_grad) {
        // dB += A^T dC : (m,k)^T x (m,n)
        K().gemm_tn(tb2.rows(), tb2.cols(), ta2.rows(), ta2.data(), g.data(),
                    t.grad_buf(b).data());
      }
    };
  }
  return v;
}

Value Tape::linear(Value x, Value w, Value bias) {
  Value y = matmul(x, w);
  if (bias.valid())
    y = add_rowvec(y, bias);
  return y;
}

// --------------------------------------------------------- shape/indexing --

Value Tape::concat_cols(const std::vector<Value>& parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t m = val(parts[0]).rows();
  std::size_t total = 0;
  bool ng = false;
  for (Value p : parts) {
    detail::require(val(p).rows() == m, "concat_cols: row count mismatch");
    total += val(p).cols();
    ng = ng || node(p).needs_grad;
  }
  Tensor out(m, total);
  std::size_t off = 0;
  for (Value p : parts) {
    const Tensor& tp = val(p);
    for (std::size_t i = 0; i < m; ++i)
      std::copy(tp.row_ptr(i), tp.row_ptr(i) + tp.cols(),
                out.row_ptr(i) + off);
    off += tp.cols();
  }
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    std::vector<Value> ins = parts;
    node(v).backprop = [v, ins](Tape& t) {
      const Tensor& g = t.node(v).grad;
      std::size_t off2 = 0;
      for (Value p : ins) {
        const std::size_t c = t.val(p).cols();
        if (t.node(p).needs_grad) {
          Tensor& gp = t.grad_buf(p);
          for (std::size_t i = 0; i < g.rows(); ++i)
            K().axpy(c, 1.0, g.row_ptr(i) + off2, gp.row_ptr(i));
        }
        off2 += c;
      }
    };
  }
  return v;
}

Value Tape::concat_rows(const std::vector<Value>& parts) {
  detail::require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t n = val(parts[0]).cols();
  std::size_t total = 0;
  bool ng = false;
  for (Value p : parts) {
    detail::require(val(p).cols() == n, "concat_rows: column count mismatch");
    total += val(p).rows();
    ng = ng || node(p).needs_grad;
  }
  Tensor out(total, n);
  std::size_t off = 0;
  for (Value p : parts) {
    const Tensor& tp = val(p);
    std::copy(tp.vec().begin(), tp.vec().end(), out.vec().begin() + off * n);
    off += tp.rows();
  }
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    std::vector<Value> ins = parts;
    node(v).backprop = [v, ins](Tape& t) {
      const Tensor& g = t.node(v).grad;
      std::size_t off2 = 0;
      for (Value p : ins) {
        const std::size_t r = t.val(p).rows();
        if (t.node(p).needs_grad) {
          Tensor& gp = t.grad_buf(p);
          K().axpy(r * g.cols(), 1.0, g.vec().data() + off2 * g.cols(),
                   gp.vec().data());
        }
        off2 += r;
      }
    };
  }
  return v;
}

Value Tape::slice_cols(Value a, std::size_t lo, std::size_t hi) {
  const Tensor& ta = val(a);
  detail::require(lo < hi && hi <= ta.cols(), "slice_cols: bad column range");
  Tensor out(ta.rows(), hi - lo);
  for (std::size_t i = 0; i < ta.rows(); ++i)
    std::copy(ta.row_ptr(i) + lo, ta.row_ptr(i) + hi, out.row_ptr(i));
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, lo](Tape& t) {
      const Tensor& g = t.node(v).grad;
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < g.rows(); ++i)
        K().axpy(g.cols(), 1.0, g.row_ptr(i), ga.row_ptr(i) + lo);
    };
  }
  return v;
}

Value Tape::gather_rows(Value a, std::vector<std::size_t> idx) {
  const Tensor& ta = val(a);
  for (std::size_t i : idx)
    detail::require(i < ta.rows(), "gather_rows: index out of range");
  Tensor out(idx.size(), ta.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy(ta.row_ptr(idx[i]), ta.row_ptr(idx[i]) + ta.cols(),
              out.row_ptr(i));
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, idx = std::move(idx)](Tape& t) {
      const Tensor& g = t.node(v).grad;
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < idx.size(); ++i)
        K().axpy(g.cols(), 1.0, g.row_ptr(i), ga.row_ptr(idx[i]));
    };
  }
  return v;
}

Value Tape::segment_sum(Value a, std::vector<std::size_t> seg,
                        std::size_t n_seg) {
  const Tensor& ta = val(a);
  detail::require(seg.size() == ta.rows(), "segment_sum: segment size");
  for (std::size_t s : seg)
    detail::require(s < n_seg, "segment_sum: segment id out of range");
  Tensor out(n_seg, ta.cols());
  for (std::size_t i = 0; i < ta.rows(); ++i)
    K().axpy(ta.cols(), 1.0, ta.row_ptr(i), out.row_ptr(seg[i]));
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, seg = std::move(seg)](Tape& t) {
      const Tensor& g = t.node(v).grad;
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < ga.rows(); ++i)
        K().axpy(g.cols(), 1.0, g.row_ptr(seg[i]), ga.row_ptr(i));
    };
  }
  return v;
}

Value Tape::segment_mean(Value a, std::vector<std::size_t> seg,
                         std::size_t n_seg) {
  std::vector<double> inv_count(n_seg, 0.0);
  for (std::size_t s : seg) {
    detail::require(s < n_seg, "segment_mean: segment id out of range");
    inv_count[s] += 1.0;
  }
  // Empty segments yield zero rows.
  for (double& c : inv_count)
    c = c > 0.0 ? 1.0 / c : 0.0;
  Value sums = segment_sum(a, std::move(seg), n_seg);
  return mul_colvec(sums, constant(Tensor::column(std::move(inv_count))));
}

// ------------------------------------------------------------- reductions --

Value Tape::row_sum(Value a) {
  const Tensor& ta = val(a);
  Tensor out(ta.rows(), 1);
  for (std::size_t i = 0; i < ta.rows(); ++i)
    out(i, 0) = K().sum(ta.cols(), ta.row_ptr(i));
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < ga.rows(); ++i) {
        const double gi = g(i, 0);
        for (std::size_t j = 0; j < ga.cols(); ++j)
          ga(i, j) += gi;
      }
    };
  }
  return v;
}

Value Tape::row_dot(Value a, Value b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  detail::require(ta.same_shape(tb), "row_dot: shape mismatch");
  Tensor out(ta.rows(), 1);
  for (std::size_t i = 0; i < ta.rows(); ++i)
    out(i, 0) = K().dot(ta.cols(), ta.row_ptr(i), tb.row_ptr(i));
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, b](Tape& t) {
      const Tensor& g = t.node(v).grad;
      if (t.node(a).needs_grad) {
        Tensor& ga = t.grad_buf(a);
        const Tensor& tb2 = t.val(b);
        for (std::size_t i = 0; i < ga.rows(); ++i)
          K().axpy(ga.cols(), g(i, 0), tb2.row_ptr(i), ga.row_ptr(i));
      }
      if (t.node(b).needs_grad) {
        Tensor& gb = t.grad_buf(b);
        const Tensor& ta2 = t.val(a);
        for (std::size_t i = 0; i < gb.rows(); ++i)
          K().axpy(gb.cols(), g(i, 0), ta2.row_ptr(i), gb.row_ptr(i));
      }
    };
  }
  return v;
}

Value Tape::safe_norm_rows(Value a, double eps) {
  const Tensor& ta = val(a);
  Tensor out(ta.rows(), 1);
  for (std::size_t i = 0; i < ta.rows(); ++i)
    out(i, 0) =
        std::sqrt(K().dot(ta.cols(), ta.row_ptr(i), ta.row_ptr(i)) + eps);
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& y = t.val(v);
      const Tensor& in = t.val(a);
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < ga.rows(); ++i)
        K().axpy(ga.cols(), g(i, 0) / y(i, 0), in.row_ptr(i), ga.row_ptr(i));
    };
  }
  return v;
}

Value Tape::normalize_rows(Value a, double eps) {
  return mul_colvec(a, reciprocal(safe_norm_rows(a, eps)));
}

Value Tape::sum_all(Value a) {
  const Tensor& ta = val(a);
  Tensor out = Tensor::scalar(K().sum(ta.size(), ta.data()));
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const double g = t.node(v).grad.item();
      Tensor& ga = t.grad_buf(a);
      for (double& x : ga.vec())
        x += g;
    };
  }
  return v;
}

Value Tape::mean_all(Value a) {
  const std::size_t n = val(a).size();
  detail::require(n > 0, "mean_all: empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

// ------------------------------------------------------------- structured --

Value Tape::softmax_rows(Value a) {
  const Tensor& ta = val(a);
  Tensor out(ta.rows(), ta.cols());
  for (std::size_t i = 0; i < ta.rows(); ++i) {
    const double* x = ta.row_ptr(i);
    double* y = out.row_ptr(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ta.cols(); ++j)
      mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < ta.cols(); ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < ta.cols(); ++j)
      y[j] /= z;
  }
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& y = t.val(v);
      Tensor& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        const double dot = K().dot(g.cols(), g.row_ptr(i), y.row_ptr(i));
        for (std::size_t j = 0; j < g.cols(); ++j)
          ga(i, j) += y(i, j) * (g(i, j) - dot);
      }
    };
  }
  return v;
}

Value Tape::segment_softmax(Value a, std::vector<std::size_t> seg,
                            std::size_t n_seg) {
  const Tensor& ta = val(a);
  detail::require(seg.size() == ta.rows(), "segment_softmax: segment size");
  const std::size_t cols = ta.cols();
  Tensor out(ta.rows(), cols);
  {
    // Column-wise softmax within each segment, computed stably.
    Tensor mx(n_seg, cols, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < ta.rows(); ++i) {
      detail::require(seg[i] < n_seg, "segment_softmax: segment out of range");
      for (std::size_t j = 0; j < cols; ++j)
        mx(seg[i], j) = std::max(mx(seg[i], j), ta(i, j));
    }
    Tensor z(n_seg, cols, 0.0);
    for (std::size_t i = 0; i < ta.rows(); ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        out(i, j) = std::exp(ta(i, j) - mx(seg[i], j));
        z(seg[i], j) += out(i, j);
      }
    for (std::size_t i = 0; i < ta.rows(); ++i)
      for (std::size_t j = 0; j < cols; ++j)
        out(i, j) /= z(seg[i], j);
  }
  const bool ng = node(a).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, a, seg = std::move(seg), n_seg](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& y = t.val(v);
      Tensor& ga = t.grad_buf(a);
      Tensor dot(n_seg, g.cols(), 0.0);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
          dot(seg[i], j) += g(i, j) * y(i, j);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
          ga(i, j) += y(i, j) * (g(i, j) - dot(seg[i], j));
    };
  }
  return v;
}

Value Tape::layer_norm(Value x, Value gamma, Value beta, double eps) {
  const Tensor& tx = val(x);
  const Tensor& tg = val(gamma);
  const Tensor& tb = val(beta);
  const std::size_t n = tx.cols();
  detail::require(tg.rows() == 1 && tg.cols() == n, "layer_norm: gamma shape");
  detail::require(tb.rows() == 1 && tb.cols() == n, "layer_norm: beta shape");
  detail::require(n > 0, "layer_norm: empty rows");

  Tensor out(tx.rows(), n);
  Tensor yhat(tx.rows(), n);   // normalized input, kept for backward
  Tensor inv_sd(tx.rows(), 1);
  for (std::size_t i = 0; i < tx.rows(); ++i) {
    const double* xi = tx.row_ptr(i);
    const double mean = K().sum(n, xi) / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_sd(i, 0) = inv;
    for (std::size_t j = 0; j < n; ++j) {
      yhat(i, j) = (xi[j] - mean) * inv;
      out(i, j) = yhat(i, j) * tg(0, j) + tb(0, j);
    }
  }
  const bool ng =
      node(x).needs_grad || node(gamma).needs_grad || node(beta).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, x, gamma, beta, yhat = std::move(yhat),
                        inv_sd = std::move(inv_sd)](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& tg2 = t.val(gamma);
      const std::size_t n2 = g.cols();
      if (t.node(beta).needs_grad) {
        Tensor& gb = t.grad_buf(beta);
        for (std::size_t i = 0; i < g.rows(); ++i)
          K().axpy(n2, 1.0, g.row_ptr(i), gb.data());
      }
      if (t.node(gamma).needs_grad) {
        Tensor& gg = t.grad_buf(gamma);
        for (std::size_t i = 0; i < g.rows(); ++i)
          K().mulacc(n2, g.row_ptr(i), yhat.row_ptr(i), gg.data());
      }
      if (t.node(x).needs_grad) {
        Tensor& gx = t.grad_buf(x);
        std::vector<double> h(n2);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          K().mul(n2, g.row_ptr(i), tg2.data(), h.data());
          const double mean_h = K().sum(n2, h.data()) / n2;
          const double mean_hy = K().dot(n2, h.data(), yhat.row_ptr(i)) / n2;
          const double inv = inv_sd(i, 0);
          for (std::size_t j = 0; j < n2; ++j)
            gx(i, j) += (h[j] - mean_h - yhat(i, j) * mean_hy) * inv;
        }
      }
    };
  }
  return v;
}

Value Tape::rbf(Value d, std::size_t n_rbf, double cutoff) {
  const Tensor& td = val(d);
  detail::require(td.cols() == 1, "rbf: distances must be (m,1)");
  detail::require(n_rbf >= 2, "rbf: need at least two basis functions");
  detail::require(cutoff > 0.0, "rbf: cutoff must be positive");
  const double spacing = cutoff / static_cast<double>(n_rbf - 1);
  const double inv_two_g2 = 1.0 / (2.0 * spacing * spacing);
  Tensor out(td.rows(), n_rbf);
  for (std::size_t i = 0; i < td.rows(); ++i)
    for (std::size_t k = 0; k < n_rbf; ++k) {
      const double delta = td(i, 0) - spacing * static_cast<double>(k);
      out(i, k) = std::exp(-delta * delta * inv_two_g2);
    }
  const bool ng = node(d).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, d, n_rbf, spacing](Tape& t) {
      const Tensor& g = t.node(v).grad;
      const Tensor& y = t.val(v);
      const Tensor& td2 = t.val(d);
      Tensor& gd = t.grad_buf(d);
      const double inv_g2 = 1.0 / (spacing * spacing);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n_rbf; ++k) {
          const double delta = td2(i, 0) - spacing * static_cast<double>(k);
          acc += g(i, k) * y(i, k) * (-delta * inv_g2);
        }
        gd(i, 0) += acc;
      }
    };
  }
  return v;
}

Value Tape::cross_entropy_rows(Value logits, std::vector<int> labels) {
  const Tensor& tl = val(logits);
  detail::require(labels.size() == tl.rows(), "cross_entropy: label count");
  const std::size_t c = tl.cols();
  Tensor out(tl.rows(), 1);
  Tensor probs(tl.rows(), c);
  for (std::size_t i = 0; i < tl.rows(); ++i) {
    const int label = labels[i];
    if (label < 0) {
      out(i, 0) = 0.0;
      continue;
    }
    detail::require(static_cast<std::size_t>(label) < c,
                    "cross_entropy: label out of range");
    const double* x = tl.row_ptr(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs(i, j) = std::exp(x[j] - mx);
      z += probs(i, j);
    }
    for (std::size_t j = 0; j < c; ++j)
      probs(i, j) /= z;
    out(i, 0) = std::log(z) + mx - x[label];
  }
  const bool ng = node(logits).needs_grad;
  Value v = push(std::move(out), ng, nullptr);
  if (ng) {
    node(v).backprop = [v, logits, labels = std::move(labels),
                        probs = std::move(probs)](Tape& t) {
      const Tensor& g = t.node(v).grad;
      Tensor& gl = t.grad_buf(logits);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        const int label = labels[i];
        if (label < 0)
          continue;
        const double gi = g(i, 0);
        K().axpy(gl.cols(), gi, probs.row_ptr(i), gl.row_ptr(i));
        gl(i, static_cast<std::size_t>(label)) -= gi;
      }
    };
  }
  return v;
}

// -------------------------------------------------------------- execution --

void Tape::backward(Value loss) {
  detail::require(!ran_backward_, "Tape::backward: may only run once");
  ran_backward_ = true;
  Node& ln = node(loss);
  detail::require(ln.value.rows() == 1 && ln.value.cols() == 1,
                  "Tape::backward: loss must be a (1,1) scalar");
  detail::require(ln.needs_grad,
                  "Tape::backward: loss does not depend on any parameter");
  grad_buf(loss).vec()[0] = 1.0;
  for (std::size_t i = nodes_.size(); i > 0; --i) {
    Node& n = nodes_[i - 1];
    // Nodes never reached from the loss have no gradient buffer.
    if (!n.needs_grad || n.grad.size() == 0 || !n.backprop)
      continue;
    n.backprop(*this);
  }
}

}  // namespace unimomo
