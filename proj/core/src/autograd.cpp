// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "hyperfake/error.hpp"

namespace hyperfake::ag {
namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

CMapR cmap(const Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return CMapR(t.data().data() + offset, static_cast<Eigen::Index>(rows),
               static_cast<Eigen::Index>(cols));
}
MapR map(Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return MapR(t.data().data() + offset, static_cast<Eigen::Index>(rows),
              static_cast<Eigen::Index>(cols));
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                     " vs " + to_string(b.shape()));
  }
}

void require_rank(const Var& a, std::size_t rank, const char* op) {
  if (a.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got " + to_string(a.shape()));
  }
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Splits a shape around `axis` into (outer, axis extent, inner).
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};
AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// Layout helper for ops with a channel axis at rank-3.
struct ImageLayout {
  std::size_t batch = 1, channels = 0, plane = 0;
};
ImageLayout image_layout(const Shape& shape, const char* op) {
  if (shape.size() != 3 && shape.size() != 4) {
    throw ShapeError(std::string(op) + ": expected C×H×W or N×C×H×W, got " +
                     to_string(shape));
  }
  ImageLayout l;
  const std::size_t r = shape.size();
  l.batch = r == 4 ? shape[0] : 1;
  l.channels = shape[r - 3];
  l.plane = shape[r - 2] * shape[r - 1];
  return l;
}

}  // namespace

// ---- Var ------------------------------------------------------------------

Tensor& Var::Node::grad_buffer() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::value() const { return node_->value; }
Tensor& Var::mutable_value() { return node_->value; }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }
void Var::set_requires_grad(bool flag) { node_->requires_grad = flag; }
bool Var::has_grad() const { return node_->grad.shape() == node_->value.shape(); }

const Tensor& Var::grad() const {
  if (!has_grad()) node_->grad = Tensor(node_->value.shape());
  return node_->grad;
}

void Var::zero_grad() { node_->grad = Tensor(); }

Var Var::detach() const { return Var(node_->value, false); }

void Var::backward() const {
  if (value().size() != 1) {
    throw ShapeError("backward() without a seed needs a scalar, got " +
                     to_string(shape()));
  }
  backward(Tensor(shape(), 1.0));
}

void Var::backward(const Tensor& seed) const {
  if (!requires_grad()) return;
  if (seed.shape() != shape()) throw ShapeError("backward seed shape mismatch");

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  Tensor& g = node_->grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.shape() == n->value.shape()) n->backward(n->grad);
  }
}

Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(const Tensor&)> backward) {
  auto node = std::make_shared<Var::Node>();
  node->value = std::move(value);
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const Var& p) { return p.requires_grad(); });
  if (any) {
    node->requires_grad = true;
    node->backward = std::move(backward);
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
  }
  return Var(std::move(node));
}

bool needs_grad(const Var& v) { return v.requires_grad(); }

void accumulate(const Var& parent, const Tensor& delta) {
  if (!parent.requires_grad()) return;
  Tensor& g = parent.node()->grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

// ---- elementwise ----------------------------------------------------------

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_op(std::move(out), {a, b}, [a, b](const Tensor& g) {
    accumulate(a, g);
    accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_op(std::move(out), {a, b}, [a, b](const Tensor& g) {
    accumulate(a, g);
    if (needs_grad(b)) {
      Tensor neg = g;
      for (double& v : neg.data()) v = -v;
      accumulate(b, neg);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_op(std::move(out), {a, b}, [a, b](const Tensor& g) {
    if (needs_grad(a)) {
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= b.value()[i];
      accumulate(a, d);
    }
    if (needs_grad(b)) {
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= a.value()[i];
      accumulate(b, d);
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return make_op(std::move(out), {a}, [a, factor](const Tensor& g) {
    Tensor d = g;
    for (double& v : d.data()) v *= factor;
    accumulate(a, d);
  });
}

namespace {
template <typename Fwd, typename Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  Tensor out = a.value();
  for (double& v : out.data()) v = fwd(v);
  return make_op(std::move(out), {a}, [a, deriv](const Tensor& g) {
    Tensor d = g;
    const auto& x = a.value();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= deriv(x[i]);
    accumulate(a, d);
  });
}
}  // namespace

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
  return unary(a, stable_sigmoid, [](double x) {
    const double s = stable_sigmoid(x);
    return s * (1.0 - s);
  });
}

Var silu(const Var& a) {
  return unary(
      a, [](double x) { return x * stable_sigmoid(x); },
      [](double x) {
        const double s = stable_sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var gelu(const Var& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [inv_sqrt_2pi](double x) {
        return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
               x * std::exp(-0.5 * x * x) * inv_sqrt_2pi;
      });
}

// ---- reductions -------------------------------------------------------------

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return make_op(Tensor({1}, s), {a}, [a](const Tensor& g) {
    accumulate(a, Tensor(a.shape(), g[0]));
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

// ---- layout ----------------------------------------------------------------

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return make_op(std::move(out), {a}, [a](const Tensor& g) {
    accumulate(a, g.reshaped(a.shape()));
  });
}

Var transpose(const Var& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out({n, m});
  map(out, n, m) = cmap(a.value(), m, n).transpose();
  return make_op(std::move(out), {a}, [a, m, n](const Tensor& g) {
    Tensor d({m, n});
    map(d, m, n) = cmap(g, n, m).transpose();
    accumulate(a, d);
  });
}

Var narrow(const Var& a, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& in = a.shape();
  if (axis >= in.size() || start + length > in[axis]) {
    throw ShapeError("narrow out of range on " + to_string(in));
  }
  const AxisSplit s = split_axis(in, axis);
  Shape out_shape = in;
  out_shape[axis] = length;
  Tensor out(out_shape);
  const std::size_t block = length * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o) {
    const double* src = a.value().data().data() + (o * s.extent + start) * s.inner;
    std::copy(src, src + block, out.data().data() + o * block);
  }
  return make_op(std::move(out), {a}, [a, s, start, block](const Tensor& g) {
    if (!needs_grad(a)) return;
    Tensor& ga = a.node()->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      double* dst = ga.data().data() + (o * s.extent + start) * s.inner;
      const double* src = g.data().data() + o * block;
      for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
    }
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  Shape out_shape = parts[0].shape();
  if (axis >= out_shape.size()) throw ShapeError("concat axis out of range");
  out_shape[axis] = 0;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != out_shape.size()) throw ShapeError("concat rank mismatch");
    offsets.push_back(out_shape[axis]);
    out_shape[axis] += probe[axis];
    probe[axis] = 0;
    Shape ref = parts[0].shape();
    ref[axis] = 0;
    if (probe != ref) throw ShapeError("concat shape mismatch " + to_string(p.shape()));
  }
  const AxisSplit s = split_axis(out_shape, axis);
  Tensor out(out_shape);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t ext = parts[k].shape()[axis];
    const std::size_t block = ext * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o) {
      const double* src = parts[k].value().data().data() + o * block;
      std::copy(src, src + block,
                out.data().data() + (o * s.extent + offsets[k]) * s.inner);
    }
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return make_op(std::move(out), ps, [ps, offsets, s, axis](const Tensor& g) {
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (!needs_grad(ps[k])) continue;
      const std::size_t block = ps[k].shape()[axis] * s.inner;
      Tensor& gp = ps[k].node()->grad_buffer();
      for (std::size_t o = 0; o < s.outer; ++o) {
        const double* src = g.data().data() + (o * s.extent + offsets[k]) * s.inner;
        double* dst = gp.data().data() + o * block;
        for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
      }
    }
  });
}

Var stack(std::span<const Var> parts) {
  std::vector<Var> lifted;
  lifted.reserve(parts.size());
  for (const Var& p : parts) {
    Shape s = p.shape();
    s.insert(s.begin(), 1);
    lifted.push_back(reshape(p, std::move(s)));
  }
  return concat(lifted, 0);
}

// ---- linear algebra --------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: " + to_string(a.shape()) + " · " + to_string(b.shape()));
  }
  Tensor out({m, n});
  map(out, m, n).noalias() = cmap(a.value(), m, k) * cmap(b.value(), k, n);
  return make_op(std::move(out), {a, b}, [a, b, m, k, n](const Tensor& g) {
    if (needs_grad(a)) {
      Tensor d({m, k});
      map(d, m, k).noalias() = cmap(g, m, n) * cmap(b.value(), k, n).transpose();
      accumulate(a, d);
    }
    if (needs_grad(b)) {
      Tensor d({k, n});
      map(d, k, n).noalias() = cmap(a.value(), m, k).transpose() * cmap(g, m, n);
      accumulate(b, d);
    }
  });
}

Var softmax_last(const Var& a) {
  if (a.shape().empty()) throw ShapeError("softmax of a scalar");
  const std::size_t n = a.shape().back();
  const std::size_t rows = a.value().size() / n;
  Tensor out = a.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data().data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= total;
  }
  Tensor y = out;
  return make_op(std::move(out), {a}, [a, y = std::move(y), rows, n](const Tensor& g) {
    Tensor d(a.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = y.data().data() + r * n;
      const double* gr = g.data().data() + r * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
      double* dr = d.data().data() + r * n;
      for (std::size_t j = 0; j < n; ++j) dr[j] = yr[j] * (gr[j] - dot);
    }
    accumulate(a, d);
  });
}

Var add_row_bias(const Var& a, const Var& b) {
  require_rank(a, 2, "add_row_bias");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (b.value().size() != n) throw ShapeError("add_row_bias: bias length mismatch");
  Tensor out = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b.value()[j];
  return make_op(std::move(out), {a, b}, [a, b, m, n](const Tensor& g) {
    accumulate(a, g);
    if (needs_grad(b)) {
      Tensor d(b.shape());
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d[j] += g[i * n + j];
      accumulate(b, d);
    }
  });
}

// ---- image ops ---------------------------------------------------------------

Var add_channel_bias(const Var& x, const Var& bias) {
  const ImageLayout l = image_layout(x.shape(), "add_channel_bias");
  if (bias.value().size() != l.channels) throw ShapeError("channel bias length mismatch");
  Tensor out = x.value();
  for (std::size_t n = 0; n < l.batch; ++n)
    for (std::size_t c = 0; c < l.channels; ++c) {
      double* p = out.data().data() + (n * l.channels + c) * l.plane;
      for (std::size_t i = 0; i < l.plane; ++i) p[i] += bias.value()[c];
    }
  return make_op(std::move(out), {x, bias}, [x, bias, l](const Tensor& g) {
    accumulate(x, g);
    if (needs_grad(bias)) {
      Tensor d(bias.shape());
      for (std::size_t n = 0; n < l.batch; ++n)
        for (std::size_t c = 0; c < l.channels; ++c) {
          const double* p = g.data().data() + (n * l.channels + c) * l.plane;
          double s = 0.0;
          for (std::size_t i = 0; i < l.plane; ++i) s += p[i];
          d[c] += s;
        }
      accumulate(bias, d);
    }
  });
}

Var mul_channel(const Var& x, const Var& scale_by) {
  const ImageLayout l = image_layout(x.shape(), "mul_channel");
  if (scale_by.value().size() != l.channels) throw ShapeError("channel scale length mismatch");
  Tensor out = x.value();
  for (std::size_t n = 0; n < l.batch; ++n)
    for (std::size_t c = 0; c < l.channels; ++c) {
      double* p = out.data().data() + (n * l.channels + c) * l.plane;
      for (std::size_t i = 0; i < l.plane; ++i) p[i] *= scale_by.value()[c];
    }
  return make_op(std::move(out), {x, scale_by}, [x, scale_by, l](const Tensor& g) {
    if (needs_grad(x)) {
      Tensor d = g;
      for (std::size_t n = 0; n < l.batch; ++n)
        for (std::size_t c = 0; c < l.channels; ++c) {
          double* p = d.data().data() + (n * l.channels + c) * l.plane;
          for (std::size_t i = 0; i < l.plane; ++i) p[i] *= scale_by.value()[c];
        }
      accumulate(x, d);
    }
    if (needs_grad(scale_by)) {
      Tensor d(scale_by.shape());
      for (std::size_t n = 0; n < l.batch; ++n)
        for (std::size_t c = 0; c < l.channels; ++c) {
          const std::size_t off = (n * l.channels + c) * l.plane;
          double s = 0.0;
          for (std::size_t i = 0; i < l.plane; ++i) s += g[off + i] * x.value()[off + i];
          d[c] += s;
        }
      accumulate(scale_by, d);
    }
  });
}

Var channel_gate(const Var& x, const Var& gate) {
  require_rank(x, 4, "channel_gate");
  const ImageLayout l = image_layout(x.shape(), "channel_gate");
  if (gate.shape() != Shape{l.batch, l.channels}) {
    throw ShapeError("channel_gate: gate must be N×C, got " + to_string(gate.shape()));
  }
  Tensor out = x.value();
  for (std::size_t nc = 0; nc < l.batch * l.channels; ++nc) {
    double* p = out.data().data() + nc * l.plane;
    for (std::size_t i = 0; i < l.plane; ++i) p[i] *= gate.value()[nc];
  }
  return make_op(std::move(out), {x, gate}, [x, gate, l](const Tensor& g) {
    if (needs_grad(x)) {
      Tensor d = g;
      for (std::size_t nc = 0; nc < l.batch * l.channels; ++nc) {
        double* p = d.data().data() + nc * l.plane;
        for (std::size_t i = 0; i < l.plane; ++i) p[i] *= gate.value()[nc];
      }
      accumulate(x, d);
    }
    if (needs_grad(gate)) {
      Tensor d(gate.shape());
      for (std::size_t nc = 0; nc < l.batch * l.channels; ++nc) {
        const std::size_t off = nc * l.plane;
        double s = 0.0;
        for (std::size_t i = 0; i < l.plane; ++i) s += g[off + i] * x.value()[off + i];
        d[nc] = s;
      }
      accumulate(gate, d);
    }
  });
}

Var global_avg_pool(const Var& x) {
  require_rank(x, 4, "global_avg_pool");
  const ImageLayout l = image_layout(x.shape(), "global_avg_pool");
  Tensor out({l.batch, l.channels});
  for (std::size_t nc = 0; nc < l.batch * l.channels; ++nc) {
    const double* p = x.value().data().data() + nc * l.plane;
    double s = 0.0;
    for (std::size_t i = 0; i < l.plane; ++i) s += p[i];
    out[nc] = s / static_cast<double>(l.plane);
  }
  return make_op(std::move(out), {x}, [x, l](const Tensor& g) {
    Tensor d(x.shape());
    for (std::size_t nc = 0; nc < l.batch * l.channels; ++nc) {
      double* p = d.data().data() + nc * l.plane;
      const double v = g[nc] / static_cast<double>(l.plane);
      for (std::size_t i = 0; i < l.plane; ++i) p[i] = v;
    }
    accumulate(x, d);
  });
}

Var spatial_map(const Var& x, const Tensor& rows, const Tensor& cols) {
  const Shape& in = x.shape();
  if (in.size() < 2) throw ShapeError("spatial_map needs rank ≥ 2");
  const std::size_t h = in[in.size() - 2], w = in[in.size() - 1];
  if (rows.rank() != 2 || cols.rank() != 2 || rows.dim(1) != h || cols.dim(1) != w) {
    throw ShapeError("spatial_map: interpolation matrices do not match " + to_string(in));
  }
  const std::size_t ho = rows.dim(0), wo = cols.dim(0);
  const std::size_t planes = x.value().size() / (h * w);
  Shape out_shape = in;
  out_shape[in.size() - 2] = ho;
  out_shape[in.size() - 1] = wo;
  Tensor out(out_shape);
  const auto R = cmap(rows, ho, h);
  const auto C = cmap(cols, wo, w);
  for (std::size_t p = 0; p < planes; ++p) {
    map(out, ho, wo, p * ho * wo).noalias() =
        R * cmap(x.value(), h, w, p * h * w) * C.transpose();
  }
  return make_op(std::move(out), {x}, [x, rows, cols, planes, h, w, ho, wo](const Tensor& g) {
    Tensor d(x.shape());
    const auto R = cmap(rows, ho, h);
    const auto C = cmap(cols, wo, w);
    for (std::size_t p = 0; p < planes; ++p) {
      map(d, h, w, p * h * w).noalias() = R.transpose() * cmap(g, ho, wo, p * ho * wo) * C;
    }
    accumulate(x, d);
  });
}

namespace {

struct ConvGeometry {
  std::size_t n, c, h, w, o, kh, kw, stride, pad, ho, wo;
  std::size_t patch() const { return c * kh * kw; }
  std::size_t pixels() const { return ho * wo; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

// Unfolds sample `n` into a (C·KH·KW)×(HO·WO) column matrix.
void im2col(const ConvGeometry& g, const double* x, double* cols) {
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.pixels();
        for (std::size_t oi = 0; oi < g.ho; ++oi) {
          const long ii = static_cast<long>(oi * g.stride + ki) - static_cast<long>(g.pad);
          for (std::size_t oj = 0; oj < g.wo; ++oj) {
            const long jj = static_cast<long>(oj * g.stride + kj) - static_cast<long>(g.pad);
            const bool inside = ii >= 0 && jj >= 0 && ii < static_cast<long>(g.h) &&
                                jj < static_cast<long>(g.w);
            row[oi * g.wo + oj] = inside ? x[(c * g.h + ii) * g.w + jj] : 0.0;
          }
        }
      }
}

void col2im(const ConvGeometry& g, const double* cols, double* dx) {
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.pixels();
        for (std::size_t oi = 0; oi < g.ho; ++oi) {
          const long ii = static_cast<long>(oi * g.stride + ki) - static_cast<long>(g.pad);
          if (ii < 0 || ii >= static_cast<long>(g.h)) continue;
          for (std::size_t oj = 0; oj < g.wo; ++oj) {
            const long jj = static_cast<long>(oj * g.stride + kj) - static_cast<long>(g.pad);
            if (jj < 0 || jj >= static_cast<long>(g.w)) continue;
            dx[(c * g.h + ii) * g.w + jj] += row[oi * g.wo + oj];
          }
        }
      }
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, std::size_t stride, std::size_t pad) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d weight");
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[1] != xs[1]) {
    throw ShapeError("conv2d: weight " + to_string(ws) + " incompatible with input " +
                     to_string(xs));
  }
  if (stride == 0 || xs[2] + 2 * pad < ws[2] || xs[3] + 2 * pad < ws[3]) {
    throw ShapeError("conv2d: kernel larger than padded input " + to_string(xs));
  }
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], stride, pad, 0, 0};
  g.ho = (g.h + 2 * pad - g.kh) / stride + 1;
  g.wo = (g.w + 2 * pad - g.kw) / stride + 1;

  Tensor out({g.n, g.o, g.ho, g.wo});
  const auto W = cmap(weight.value(), g.o, g.patch());
  auto cols = std::make_shared<std::vector<double>>();
  if (!g.pointwise()) cols->resize(g.n * g.patch() * g.pixels());
  for (std::size_t n = 0; n < g.n; ++n) {
    const double* xn = x.value().data().data() + n * g.c * g.h * g.w;
    const double* src = xn;
    if (!g.pointwise()) {
      double* cn = cols->data() + n * g.patch() * g.pixels();
      im2col(g, xn, cn);
      src = cn;
    }
    const CMapR in(src, static_cast<Eigen::Index>(g.patch()),
                   static_cast<Eigen::Index>(g.pixels()));
    map(out, g.o, g.pixels(), n * g.o * g.pixels()).noalias() = W * in;
  }
  return make_op(std::move(out), {x, weight}, [x, weight, g, cols](const Tensor& gout) {
    const auto W = cmap(weight.value(), g.o, g.patch());
    Tensor dw(weight.shape());
    Tensor dx(x.shape());
    std::vector<double> dcols(g.patch() * g.pixels());
    for (std::size_t n = 0; n < g.n; ++n) {
      const auto gn = cmap(gout, g.o, g.pixels(), n * g.o * g.pixels());
      const double* src = g.pointwise() ? x.value().data().data() + n * g.c * g.pixels()
                                        : cols->data() + n * g.patch() * g.pixels();
      const CMapR in(src, static_cast<Eigen::Index>(g.patch()),
                     static_cast<Eigen::Index>(g.pixels()));
      if (needs_grad(weight)) map(dw, g.o, g.patch()).noalias() += gn * in.transpose();
      if (needs_grad(x)) {
        if (g.pointwise()) {
          map(dx, g.c, g.pixels(), n * g.c * g.pixels()).noalias() = W.transpose() * gn;
        } else {
          MapR dc(dcols.data(), static_cast<Eigen::Index>(g.patch()),
                  static_cast<Eigen::Index>(g.pixels()));
          dc.noalias() = W.transpose() * gn;
          col2im(g, dcols.data(), dx.data().data() + n * g.c * g.h * g.w);
        }
      }
    }
    accumulate(weight, dw);
    accumulate(x, dx);
  });
}

Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta, double eps) {
  require_rank(x, 4, "layer_norm_channels");
  const ImageLayout l = image_layout(x.shape(), "layer_norm_channels");
  if (gamma.value().size() != l.channels || beta.value().size() != l.channels) {
    throw ShapeError("layer_norm_channels: affine length mismatch");
  }
  Tensor xhat(x.shape());
  Tensor inv_std({l.batch, l.plane});
  Tensor out(x.shape());
  const auto& xv = x.value();
  for (std::size_t n = 0; n < l.batch; ++n)
    for (std::size_t p = 0; p < l.plane; ++p) {
      const std::size_t base = n * l.channels * l.plane + p;
      double mu = 0.0;
      for (std::size_t c = 0; c < l.channels; ++c) mu += xv[base + c * l.plane];
      mu /= static_cast<double>(l.channels);
      double var = 0.0;
      for (std::size_t c = 0; c < l.channels; ++c) {
        const double d = xv[base + c * l.plane] - mu;
        var += d * d;
      }
      var /= static_cast<double>(l.channels);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[n * l.plane + p] = is;
      for (std::size_t c = 0; c < l.channels; ++c) {
        const std::size_t i = base + c * l.plane;
        xhat[i] = (xv[i] - mu) * is;
        out[i] = xhat[i] * gamma.value()[c] + beta.value()[c];
      }
    }
  return make_op(std::move(out), {x, gamma, beta},
                 [x, gamma, beta, l, xhat = std::move(xhat),
                  inv_std = std::move(inv_std)](const Tensor& g) {
    Tensor dgamma(gamma.shape()), dbeta(beta.shape()), dx(x.shape());
    const double inv_c = 1.0 / static_cast<double>(l.channels);
    for (std::size_t n = 0; n < l.batch; ++n)
      for (std::size_t p = 0; p < l.plane; ++p) {
        const std::size_t base = n * l.channels * l.plane + p;
        double mean_d = 0.0, mean_dx = 0.0;
        for (std::size_t c = 0; c < l.channels; ++c) {
          const std::size_t i = base + c * l.plane;
          dgamma[c] += g[i] * xhat[i];
          dbeta[c] += g[i];
          const double dxh = g[i] * gamma.value()[c];
          mean_d += dxh;
          mean_dx += dxh * xhat[i];
        }
        mean_d *= inv_c;
        mean_dx *= inv_c;
        const double is = inv_std[n * l.plane + p];
        for (std::size_t c = 0; c < l.channels; ++c) {
          const std::size_t i = base + c * l.plane;
          const double dxh = g[i] * gamma.value()[c];
          dx[i] = is * (dxh - mean_d - xhat[i] * mean_dx);
        }
      }
    accumulate(gamma, dgamma);
    accumulate(beta, dbeta);
    accumulate(x, dx);
  });
}

Var batch_norm_train(const Var& x, const Var& gamma, const Var& beta, double eps,
                     Tensor* batch_mean, Tensor* batch_var) {
  require_rank(x, 4, "batch_norm_train");
  const ImageLayout l = image_layout(x.shape(), "batch_norm_train");
  if (gamma.value().size() != l.channels || beta.value().size() != l.channels) {
    throw ShapeError("batch_norm_train: affine length mismatch");
  }
  const double count = static_cast<double>(l.batch * l.plane);
  Tensor mu({l.channels}), var({l.channels}), inv_std({l.channels});
  const auto& xv = x.value();
  for (std::size_t c = 0; c < l.channels; ++c) {
    double s = 0.0;
    for (std::size_t n = 0; n < l.batch; ++n) {
      const double* p = xv.data().data() + (n * l.channels + c) * l.plane;
      for (std::size_t i = 0; i < l.plane; ++i) s += p[i];
    }
    mu[c] = s / count;
    double v = 0.0;
    for (std::size_t n = 0; n < l.batch; ++n) {
      const double* p = xv.data().data() + (n * l.channels + c) * l.plane;
      for (std::size_t i = 0; i < l.plane; ++i) v += (p[i] - mu[c]) * (p[i] - mu[c]);
    }
    var[c] = v / count;
    inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  }
  if (batch_mean) *batch_mean = mu;
  if (batch_var) *batch_var = var;

  Tensor xhat(x.shape()), out(x.shape());
  for (std::size_t n = 0; n < l.batch; ++n)
    for (std::size_t c = 0; c < l.channels; ++c) {
      const std::size_t off = (n * l.channels + c) * l.plane;
      for (std::size_t i = 0; i < l.plane; ++i) {
        xhat[off + i] = (xv[off + i] - mu[c]) * inv_std[c];
        out[off + i] = xhat[off + i] * gamma.value()[c] + beta.value()[c];
      }
    }
  return make_op(std::move(out), {x, gamma, beta},
                 [x, gamma, beta, l, count, xhat = std::move(xhat),
                  inv_std = std::move(inv_std)](const Tensor& g) {
    Tensor dgamma(gamma.shape()), dbeta(beta.shape()), dx(x.shape());
    for (std::size_t c = 0; c < l.channels; ++c) {
      double sg = 0.0, sgx = 0.0;
      for (std::size_t n = 0; n < l.batch; ++n) {
        const std::size_t off = (n * l.channels + c) * l.plane;
        for (std::size_t i = 0; i < l.plane; ++i) {
          sg += g[off + i];
          sgx += g[off + i] * xhat[off + i];
        }
      }
      dgamma[c] = sgx;
      dbeta[c] = sg;
      const double gm = gamma.value()[c];
      const double mean_d = gm * sg / count, mean_dx = gm * sgx / count;
      for (std::size_t n = 0; n < l.batch; ++n) {
        const std::size_t off = (n * l.channels + c) * l.plane;
        for (std::size_t i = 0; i < l.plane; ++i) {
          dx[off + i] = inv_std[c] * (gm * g[off + i] - mean_d - xhat[off + i] * mean_dx);
        }
      }
    }
    accumulate(gamma, dgamma);
    accumulate(beta, dbeta);
    accumulate(x, dx);
  });
}

Var bce_with_logits(const Var& logits, std::span<const int> labels) {
  const std::size_t n = logits.value().size();
  if (n == 0) throw DomainError("bce_with_logits: empty batch");
  if (labels.size() != n) throw ShapeError("bce_with_logits: logits/labels length mismatch");
  std::vector<int> y(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0 && y[i] != 1) {
      throw ValidationError("bce_with_logits: label " + std::to_string(y[i]) +
                            " outside {0,1}");
    }
    const double z = logits.value()[i];
    total += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return make_op(Tensor({1}, total / static_cast<double>(n)), {logits},
                 [logits, y = std::move(y), n](const Tensor& g) {
    Tensor d(logits.shape());
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = g[0] * (stable_sigmoid(logits.value()[i]) - y[i]) / static_cast<double>(n);
    }
    accumulate(logits, d);
  });
}

// ---- interpolation matrices -------------------------------------------------

Tensor bilinear_matrix(std::size_t in_size, std::size_t out_size) {
  Tensor m({out_size, in_size});
  const double ratio = static_cast<double>(in_size) / static_cast<double>(out_size);
  for (std::size_t i = 0; i < out_size; ++i) {
    double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const std::size_t lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in_size - 1);
    const double frac = src - static_cast<double>(lo);
    m.at(i, lo) += 1.0 - frac;
    m.at(i, hi) += frac;
  }
  return m;
}

Tensor avg_pool_matrix(std::size_t in_size, std::size_t factor) {
  if (factor == 0 || in_size % factor != 0) {
    throw ShapeError("pool factor " + std::to_string(factor) + " does not divide " +
                     std::to_string(in_size));
  }
  const std::size_t out_size = in_size / factor;
  Tensor m({out_size, in_size});
  for (std::size_t i = 0; i < out_size; ++i)
    for (std::size_t k = 0; k < factor; ++k) m.at(i, i * factor + k) = 1.0 / factor;
  return m;
}

Tensor adaptive_pool_matrix(std::size_t in_size, std::size_t out_size) {
  if (out_size == 0 || out_size > in_size) {
    throw ShapeError("adaptive pool to " + std::to_string(out_size) + " from " +
                     std::to_string(in_size));
  }
  Tensor m({out_size, in_size});
  for (std::size_t i = 0; i < out_size; ++i) {
    const std::size_t start = (i * in_size) / out_size;
    const std::size_t end = ((i + 1) * in_size + out_size - 1) / out_size;
    for (std::size_t k = start; k < end; ++k) m.at(i, k) = 1.0 / static_cast<double>(end - start);
  }
  return m;
}

}  // namespace hyperfake::ag
