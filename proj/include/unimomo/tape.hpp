//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_TAPE_HPP_
#define UNIMOMO_TAPE_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "unimomo/params.hpp"
#include "unimomo/tensor.hpp"

namespace unimomo {

// Handle to a node on a Tape. Only valid for the tape that produced it.
struct Value {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over Tensor-valued expressions. A Tape records one
// forward computation; backward(loss) then fills gradients for every node
// that (transitively) depends on a differentiable leaf. Parameters registered
// via param() additionally receive their gradient in Param::grad, so the same
// parameters can be reused across many tapes (one per training step).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ---- Leaves ----
  Value constant(Tensor t);                 // never differentiated
  Value leaf(Tensor t, bool needs_grad);    // grad readable via grad()
  Value param(Param& p);                    // grad accumulated into p.grad

  // ---- Elementwise (shapes must match) ----
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value scale(Value a, double c);
  Value add_scalar(Value a, double c);
  Value square(Value a);
  Value log(Value a);
  Value exp(Value a);
  Value sqrt(Value a);
  Value reciprocal(Value a);
  Value silu(Value a);
  Value sigmoid(Value a);
  Value softplus(Value a);
  Value abs(Value a);                       // subgradient 0 at the kink

  // ---- Broadcasts ----
  Value add_rowvec(Value a, Value r);       // (m,n) + (1,n)
  Value mul_colvec(Value a, Value c);       // (m,n) * (m,1)
  Value repeat_cols(Value a, std::size_t r);  // out[i, j*r+t] = a[i, j]

  // ---- Linear algebra ----
  Value matmul(Value a, Value b);           // (m,k) x (k,n)
  // x W (+ row-broadcast bias when bias.valid()).
  Value linear(Value x, Value w, Value bias = {});

  // ---- Shape / indexing ----
  Value concat_cols(const std::vector<Value>& parts);
  Value concat_rows(const std::vector<Value>& parts);
  Value slice_cols(Value a, std::size_t lo, std::size_t hi);
  Value gather_rows(Value a, std::vector<std::size_t> idx);
  Value segment_sum(Value a, std::vector<std::size_t> seg, std::size_t n_seg);
  Value segment_mean(Value a, std::vector<std::size_t> seg, std::size_t n_seg);

  // ---- Reductions ----
  Value row_sum(Value a);                   // (m,n) -> (m,1)
  Value row_dot(Value a, Value b);          // (m,1)
  Value safe_norm_rows(Value a, double eps);  // sqrt(rowsum(a^2) + eps)
  Value normalize_rows(Value a, double eps);
  Value sum_all(Value a);                   // (1,1)
  Value mean_all(Value a);

  // ---- Structured ----
  Value softmax_rows(Value a);
  Value segment_softmax(Value a, std::vector<std::size_t> seg,
                        std::size_t n_seg);
  Value layer_norm(Value x, Value gamma, Value beta, double eps = 1e-5);
  // (m,1) distances -> (m,n_rbf) Gaussian radial basis; centers evenly spaced
  // on [0, cutoff], width = center spacing.
  Value rbf(Value d, std::size_t n_rbf, double cutoff);
  // Per-row softmax cross entropy: (m,C) logits + labels -> (m,1) losses.
  // label -1 means "ignore": zero loss, zero gradient.
  Value cross_entropy_rows(Value logits, std::vector<int> labels);

  // ---- Execution ----
  void backward(Value loss);                // loss must be (1,1)
  const Tensor& val(Value v) const;
  // Gradient w.r.t. node v; zeros unless v needs grad and backward() ran.
  const Tensor& grad(Value v) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;               // sized lazily during backward
    bool needs_grad = false;
    Param* param = nullptr;    // set for param leaves
    std::function<void(Tape&)> backprop;  // may be empty for leaves
  };

  Value push(Tensor value, bool needs_grad, std::function<void(Tape&)> fn);
  Node& node(Value v);
  const Node& node(Value v) const;
  Tensor& grad_buf(Value v);   // allocates zeros on first touch

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace unimomo

#endif  // UNIMOMO_TAPE_HPP_
