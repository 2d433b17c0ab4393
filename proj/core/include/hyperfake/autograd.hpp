// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tape-free reverse-mode automatic differentiation over Tensor.
//
// A Var is a shared handle onto a graph node. Operations on Vars whose inputs
// require gradients record a backward closure on the result; operations on
// constants record nothing, so inference allocates no graph. Calling
// backward() on a scalar Var topologically orders the reachable nodes and
// accumulates gradients into every node that requires them.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "hyperfake/tensor.hpp"

namespace hyperfake::ag {

class Var {
 public:
  struct Node;

  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const;
  // Direct write access for optimizers and checkpoint loading. Never use this
  // on a non-leaf node that is part of a live graph.
  Tensor& mutable_value();
  const Shape& shape() const { return value().shape(); }

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  const Tensor& grad() const;
  void zero_grad();

  // Seeds d(self)/d(self) = 1; self must hold exactly one element.
  void backward() const;
  void backward(const Tensor& seed) const;

  // Same value, no history.
  Var detach() const;

  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Var make_op(Tensor, std::vector<Var>,
                     std::function<void(const Tensor&)>);

  std::shared_ptr<Node> node_;
};

struct Var::Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Tensor&)> backward;

  Tensor& grad_buffer();
};

// Builds a result node. The closure receives d(loss)/d(result) and must
// accumulate into the parents that require gradients. If no parent requires
// gradients the closure is dropped and the result is a constant.
Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(const Tensor&)> backward);

// Adds `delta` into the parent's gradient if it participates in the graph.
void accumulate(const Var& parent, const Tensor& delta);
bool needs_grad(const Var& v);

// ---- elementwise -----------------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var silu(const Var& a);
Var gelu(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }

// ---- reductions ------------------------------------------------------------
Var sum(const Var& a);
Var mean(const Var& a);

// ---- layout ----------------------------------------------------------------
Var reshape(const Var& a, Shape shape);
Var transpose(const Var& a);  // rank 2
Var narrow(const Var& a, std::size_t axis, std::size_t start, std::size_t length);
Var concat(std::span<const Var> parts, std::size_t axis);
Var stack(std::span<const Var> parts);  // new leading axis

// ---- linear algebra --------------------------------------------------------
Var matmul(const Var& a, const Var& b);  // (m×k)·(k×n)

// Softmax over the last axis.
Var softmax_last(const Var& a);

// (m×n) + broadcast row vector b[n].
Var add_row_bias(const Var& a, const Var& b);

// ---- image ops: channel axis is rank-3 (C×H×W or N×C×H×W) ------------------
Var add_channel_bias(const Var& x, const Var& bias);
Var mul_channel(const Var& x, const Var& scale);
// x: N×C×H×W, gate: N×C.
Var channel_gate(const Var& x, const Var& gate);
// N×C×H×W → N×C.
Var global_avg_pool(const Var& x);

// Applies out = rows · plane · colsᵀ independently to every trailing H×W
// plane. `rows` is (H'×H) and `cols` is (W'×W); both are constants. Pooling
// and bilinear resampling are expressed through this.
Var spatial_map(const Var& x, const Tensor& rows, const Tensor& cols);

// x: N×C×H×W, weight: O×C×KH×KW. No bias.
Var conv2d(const Var& x, const Var& weight, std::size_t stride, std::size_t pad);

// Per-pixel normalization across the channel axis of N×C×H×W.
Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta,
                        double eps = 1e-5);

// Batch normalization with batch statistics (training mode). Writes the
// per-channel batch mean and biased variance into the out-params.
Var batch_norm_train(const Var& x, const Var& gamma, const Var& beta,
                     double eps, Tensor* batch_mean, Tensor* batch_var);

// Mean over samples of max(z,0) − z·y + log1p(exp(−|z|)). z: [N]; labels are
// constants in {0,1}.
Var bce_with_logits(const Var& logits, std::span<const int> labels);

// ---- constant interpolation matrices ---------------------------------------
// Half-pixel-centre bilinear weights (align_corners = false, edge clamped).
Tensor bilinear_matrix(std::size_t in_size, std::size_t out_size);
// Non-overlapping mean over `factor` consecutive samples.
Tensor avg_pool_matrix(std::size_t in_size, std::size_t factor);
// Adaptive average pooling bins [floor(i·n/m), ceil((i+1)·n/m)).
Tensor adaptive_pool_matrix(std::size_t in_size, std::size_t out_size);

}  // namespace hyperfake::ag
