// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#include "paxnet/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "paxnet/error.hpp"

namespace paxnet {

namespace {

thread_local bool g_grad_enabled = true;
std::atomic<std::uint64_t> g_next_seq{1};

std::int64_t shape_size(const Shape& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape");
    n *= d;
  }
  return n;
}

void ensure_finite(const char* op, const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x))
      throw NumericError(std::string(op) + ": non-finite value produced");
  }
}

std::vector<double>& grad_buffer(detail::TensorNode& n) {
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// Central factory: drops the tape when gradients are disabled or no input
// needs them.
Tensor make_op(Shape shape, std::vector<double> value,
               std::vector<Tensor> inputs,
               std::function<void(detail::TensorNode&)> backward,
               const char* op_name) {
  ensure_finite(op_name, value);
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->seq = g_next_seq.fetch_add(1, std::memory_order_relaxed);
  bool needs_grad = false;
  if (g_grad_enabled) {
    for (const Tensor& t : inputs)
      needs_grad = needs_grad || (t.defined() && t.requires_grad());
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (const Tensor& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// --- Tensor basics ----------------------------------------------------------

Tensor Tensor::constant(Shape shape, std::vector<double> data) {
  if (shape_size(shape) != static_cast<std::int64_t>(data.size()))
    throw ShapeError("constant: data length does not match shape");
  ensure_finite("constant", data);
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->seq = g_next_seq.fetch_add(1, std::memory_order_relaxed);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::zeros(const Shape& shape) {
  return constant(shape, std::vector<double>(
                             static_cast<std::size_t>(shape_size(shape)), 0.0));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> data) {
  Tensor t = constant(std::move(shape), std::move(data));
  t.node_->requires_grad = true;
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) throw ShapeError("use of undefined tensor");
  return node_->shape;
}

std::int64_t Tensor::size() const {
  return static_cast<std::int64_t>(values().size());
}

std::int64_t Tensor::rows() const {
  const Shape& s = shape();
  return s.empty() ? 1 : s[0];
}

std::int64_t Tensor::cols() const {
  const Shape& s = shape();
  return s.size() >= 2 ? s[1] : 1;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

const std::vector<double>& Tensor::values() const {
  if (!node_) throw ShapeError("use of undefined tensor");
  return node_->value;
}

std::vector<double>& Tensor::mutable_values() {
  if (!node_) throw ShapeError("use of undefined tensor");
  return node_->value;
}

std::vector<double> Tensor::grad() const {
  if (!node_) throw ShapeError("use of undefined tensor");
  if (node_->grad.size() != node_->value.size())
    return std::vector<double>(node_->value.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor is not a single element");
  return values()[0];
}

// --- ops --------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows())
    shape_fail("matmul", a, b);
  const std::int64_t n = a.rows(), k = a.cols(), m = b.cols();
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(static_cast<std::size_t>(n * m), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t p = 0; p < k; ++p) {
      const double x = av[static_cast<std::size_t>(i * k + p)];
      if (x == 0.0) continue;
      const std::size_t brow = static_cast<std::size_t>(p * m);
      const std::size_t orow = static_cast<std::size_t>(i * m);
      for (std::int64_t j = 0; j < m; ++j)
        out[orow + static_cast<std::size_t>(j)] +=
            x * bv[brow + static_cast<std::size_t>(j)];
    }
  }
  return make_op(
      {n, m}, std::move(out), {a, b},
      [n, k, m](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const auto& g = self.grad;
        if (pa.requires_grad) {
          auto& ga = grad_buffer(pa);
          for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::int64_t j = 0; j < m; ++j)
                acc += g[static_cast<std::size_t>(i * m + j)] *
                       pb.value[static_cast<std::size_t>(p * m + j)];
              ga[static_cast<std::size_t>(i * k + p)] += acc;
            }
        }
        if (pb.requires_grad) {
          auto& gb = grad_buffer(pb);
          for (std::int64_t p = 0; p < k; ++p)
            for (std::int64_t j = 0; j < m; ++j) {
              double acc = 0.0;
              for (std::int64_t i = 0; i < n; ++i)
                acc += pa.value[static_cast<std::size_t>(i * k + p)] *
                       g[static_cast<std::size_t>(i * m + j)];
              gb[static_cast<std::size_t>(p * m + j)] += acc;
            }
        }
      },
      "matmul");
}

namespace {

Tensor binary_same_shape(const Tensor& a, const Tensor& b, const char* name,
                         double (*fwd)(double, double),
                         void (*bwd)(double ga, double av, double bv,
                                     double* da, double* db)) {
  if (a.shape() != b.shape()) shape_fail(name, a, b);
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], bv[i]);
  return make_op(
      a.shape(), std::move(out), {a, b},
      [bwd](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const bool need_a = pa.requires_grad;
        const bool need_b = pb.requires_grad;
        std::vector<double>* ga = need_a ? &grad_buffer(pa) : nullptr;
        std::vector<double>* gb = need_b ? &grad_buffer(pb) : nullptr;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          double da = 0.0, db = 0.0;
          bwd(self.grad[i], pa.value[i], pb.value[i], &da, &db);
          if (need_a) (*ga)[i] += da;
          if (need_b) (*gb)[i] += db;
        }
      },
      name);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double g, double, double, double* da, double* db) {
        *da = g;
        *db = g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double g, double, double, double* da, double* db) {
        *da = g;
        *db = -g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_same_shape(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double g, double x, double y, double* da, double* db) {
        *da = g * y;
        *db = g * x;
      });
}

Tensor scale(const Tensor& a, double c) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  return make_op(
      a.shape(), std::move(out), {a},
      [c](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        auto& ga = grad_buffer(pa);
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          ga[i] += self.grad[i] * c;
      },
      "scale");
}

Tensor add_rowwise(const Tensor& m, const Tensor& row) {
  if (m.shape().size() != 2 || row.shape().size() != 1 ||
      m.cols() != row.rows())
    shape_fail("add_rowwise", m, row);
  const std::int64_t n = m.rows(), k = m.cols();
  const auto& mv = m.values();
  const auto& rv = row.values();
  std::vector<double> out(mv.size());
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < k; ++j)
      out[static_cast<std::size_t>(i * k + j)] =
          mv[static_cast<std::size_t>(i * k + j)] +
          rv[static_cast<std::size_t>(j)];
  return make_op(
      {n, k}, std::move(out), {m, row},
      [n, k](detail::TensorNode& self) {
        auto& pm = *self.parents[0];
        auto& pr = *self.parents[1];
        if (pm.requires_grad) {
          auto& gm = grad_buffer(pm);
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            gm[i] += self.grad[i];
        }
        if (pr.requires_grad) {
          auto& gr = grad_buffer(pr);
          for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < k; ++j)
              gr[static_cast<std::size_t>(j)] +=
                  self.grad[static_cast<std::size_t>(i * k + j)];
        }
      },
      "add_rowwise");
}

namespace {

// Shared by concat_cols/concat_rows: checks ranks and the invariant axis.
void check_concat(const std::vector<Tensor>& parts, const char* name,
                  bool cols) {
  if (parts.empty()) throw ShapeError(std::string(name) + ": no inputs");
  for (const Tensor& t : parts) {
    if (t.shape().size() != 2)
      throw ShapeError(std::string(name) + ": inputs must be rank 2");
    const std::int64_t fixed = cols ? t.rows() : t.cols();
    const std::int64_t fixed0 = cols ? parts[0].rows() : parts[0].cols();
    if (fixed != fixed0) shape_fail(name, parts[0], t);
  }
}

}  // namespace

Tensor concat_cols(const std::vector<Tensor>& parts) {
  check_concat(parts, "concat_cols", true);
  const std::int64_t n = parts[0].rows();
  std::int64_t total = 0;
  for (const Tensor& t : parts) total += t.cols();
  std::vector<double> out(static_cast<std::size_t>(n * total));
  std::int64_t offset = 0;
  for (const Tensor& t : parts) {
    const std::int64_t k = t.cols();
    const auto& v = t.values();
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < k; ++j)
        out[static_cast<std::size_t>(i * total + offset + j)] =
            v[static_cast<std::size_t>(i * k + j)];
    offset += k;
  }
  std::vector<std::int64_t> widths;
  for (const Tensor& t : parts) widths.push_back(t.cols());
  return make_op(
      {n, total}, std::move(out), parts,
      [n, total, widths](detail::TensorNode& self) {
        std::int64_t offset = 0;
        for (std::size_t p = 0; p < self.parents.size(); ++p) {
          auto& parent = *self.parents[p];
          const std::int64_t k = widths[p];
          if (parent.requires_grad) {
            auto& g = grad_buffer(parent);
            for (std::int64_t i = 0; i < n; ++i)
              for (std::int64_t j = 0; j < k; ++j)
                g[static_cast<std::size_t>(i * k + j)] +=
                    self.grad[static_cast<std::size_t>(i * total + offset +
                                                       j)];
          }
          offset += k;
        }
      },
      "concat_cols");
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  check_concat(parts, "concat_rows", false);
  const std::int64_t k = parts[0].cols();
  std::int64_t total = 0;
  for (const Tensor& t : parts) total += t.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total * k));
  for (const Tensor& t : parts)
    out.insert(out.end(), t.values().begin(), t.values().end());
  std::vector<std::int64_t> heights;
  for (const Tensor& t : parts) heights.push_back(t.rows());
  return make_op(
      {total, k}, std::move(out), parts,
      [k, heights](detail::TensorNode& self) {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < self.parents.size(); ++p) {
          auto& parent = *self.parents[p];
          const std::size_t len =
              static_cast<std::size_t>(heights[p] * k);
          if (parent.requires_grad) {
            auto& g = grad_buffer(parent);
            for (std::size_t i = 0; i < len; ++i)
              g[i] += self.grad[offset + i];
          }
          offset += len;
        }
      },
      "concat_rows");
}

Tensor gather_rows(const Tensor& a, std::vector<std::int32_t> index) {
  if (a.shape().size() != 2)
    throw ShapeError("gather_rows: input must be rank 2");
  const std::int64_t n = a.rows(), k = a.cols();
  for (std::int32_t i : index) {
    if (i < 0 || i >= n)
      throw IndexError("gather_rows: row index " + std::to_string(i) +
                       " outside [0, " + std::to_string(n) + ")");
  }
  const auto& av = a.values();
  const auto m = static_cast<std::int64_t>(index.size());
  std::vector<double> out(static_cast<std::size_t>(m * k));
  for (std::int64_t r = 0; r < m; ++r) {
    const auto src = static_cast<std::size_t>(index[static_cast<std::size_t>(r)]) *
                     static_cast<std::size_t>(k);
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(src),
                static_cast<std::ptrdiff_t>(k),
                out.begin() + static_cast<std::ptrdiff_t>(r * k));
  }
  return make_op(
      {m, k}, std::move(out), {a},
      [k, index = std::move(index)](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        auto& ga = grad_buffer(pa);
        for (std::size_t r = 0; r < index.size(); ++r) {
          const std::size_t dst =
              static_cast<std::size_t>(index[r]) * static_cast<std::size_t>(k);
          const std::size_t src = r * static_cast<std::size_t>(k);
          for (std::int64_t j = 0; j < k; ++j)
            ga[dst + static_cast<std::size_t>(j)] +=
                self.grad[src + static_cast<std::size_t>(j)];
        }
      },
      "gather_rows");
}

namespace {

void check_segments(const std::vector<std::int32_t>& segments,
                    std::int64_t rows, std::int64_t num_segments,
                    const char* op) {
  if (static_cast<std::int64_t>(segments.size()) != rows)
    throw ShapeError(std::string(op) + ": segment list length " +
                     std::to_string(segments.size()) +
                     " does not match row count " + std::to_string(rows));
  for (std::int32_t s : segments) {
    if (s < 0 || s >= num_segments)
      throw IndexError(std::string(op) + ": segment id " + std::to_string(s) +
                       " outside [0, " + std::to_string(num_segments) + ")");
  }
}

}  // namespace

Tensor segment_sum(const Tensor& values, std::vector<std::int32_t> segments,
                   std::int64_t num_segments) {
  if (values.shape().size() != 2)
    throw ShapeError("segment_sum: input must be rank 2");
  const std::int64_t m = values.rows(), k = values.cols();
  check_segments(segments, m, num_segments, "segment_sum");
  const auto& v = values.values();
  std::vector<double> out(static_cast<std::size_t>(num_segments * k), 0.0);
  for (std::int64_t r = 0; r < m; ++r) {
    const std::size_t dst =
        static_cast<std::size_t>(segments[static_cast<std::size_t>(r)]) *
        static_cast<std::size_t>(k);
    const std::size_t src = static_cast<std::size_t>(r * k);
    for (std::int64_t j = 0; j < k; ++j)
      out[dst + static_cast<std::size_t>(j)] +=
          v[src + static_cast<std::size_t>(j)];
  }
  return make_op(
      {num_segments, k}, std::move(out), {values},
      [k, segments = std::move(segments)](detail::TensorNode& self) {
        auto& pv = *self.parents[0];
        if (!pv.requires_grad) return;
        auto& gv = grad_buffer(pv);
        for (std::size_t r = 0; r < segments.size(); ++r) {
          const std::size_t src =
              static_cast<std::size_t>(segments[r]) *
              static_cast<std::size_t>(k);
          const std::size_t dst = r * static_cast<std::size_t>(k);
          for (std::int64_t j = 0; j < k; ++j)
            gv[dst + static_cast<std::size_t>(j)] +=
                self.grad[src + static_cast<std::size_t>(j)];
        }
      },
      "segment_sum");
}

Tensor segment_softmax(const Tensor& values,
                       std::vector<std::int32_t> segments,
                       std::int64_t num_segments) {
  if (values.shape().size() != 2)
    throw ShapeError("segment_softmax: input must be rank 2");
  const std::int64_t m = values.rows(), k = values.cols();
  check_segments(segments, m, num_segments, "segment_softmax");
  const auto& v = values.values();

  // Max-shifted exponentials, normalized per (segment, column).
  std::vector<double> seg_max(
      static_cast<std::size_t>(num_segments * k),
      -std::numeric_limits<double>::infinity());
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t j = 0; j < k; ++j) {
      auto& mx = seg_max[static_cast<std::size_t>(segments[static_cast<std::size_t>(r)] * k + j)];
      mx = std::max(mx, v[static_cast<std::size_t>(r * k + j)]);
    }
  std::vector<double> out(v.size());
  std::vector<double> seg_sum(static_cast<std::size_t>(num_segments * k), 0.0);
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t j = 0; j < k; ++j) {
      const auto idx = static_cast<std::size_t>(r * k + j);
      const auto sidx = static_cast<std::size_t>(
          segments[static_cast<std::size_t>(r)] * k + j);
      out[idx] = std::exp(v[idx] - seg_max[sidx]);
      seg_sum[sidx] += out[idx];
    }
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t j = 0; j < k; ++j) {
      const auto idx = static_cast<std::size_t>(r * k + j);
      const auto sidx = static_cast<std::size_t>(
          segments[static_cast<std::size_t>(r)] * k + j);
      out[idx] /= seg_sum[sidx];
    }

  std::vector<double> softmax_copy = out;
  return make_op(
      {m, k}, std::move(out), {values},
      [k, num_segments, segments = std::move(segments),
       sm = std::move(softmax_copy)](detail::TensorNode& self) {
        auto& pv = *self.parents[0];
        if (!pv.requires_grad) return;
        auto& gv = grad_buffer(pv);
        // d x_r = s_r * (g_r - sum_{r' in segment} g_{r'} s_{r'})
        std::vector<double> seg_dot(
            static_cast<std::size_t>(num_segments * k), 0.0);
        for (std::size_t r = 0; r < segments.size(); ++r)
          for (std::int64_t j = 0; j < k; ++j) {
            const auto idx = r * static_cast<std::size_t>(k) +
                             static_cast<std::size_t>(j);
            seg_dot[static_cast<std::size_t>(segments[r] * k + j)] +=
                self.grad[idx] * sm[idx];
          }
        for (std::size_t r = 0; r < segments.size(); ++r)
          for (std::int64_t j = 0; j < k; ++j) {
            const auto idx = r * static_cast<std::size_t>(k) +
                             static_cast<std::size_t>(j);
            gv[idx] += sm[idx] *
                       (self.grad[idx] -
                        seg_dot[static_cast<std::size_t>(segments[r] * k + j)]);
          }
      },
      "segment_softmax");
}

Tensor swish(const Tensor& a) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * sigmoid(av[i]);
  return make_op(
      a.shape(), std::move(out), {a},
      [](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        auto& ga = grad_buffer(pa);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double s = sigmoid(pa.value[i]);
          ga[i] += self.grad[i] * (s * (1.0 + pa.value[i] * (1.0 - s)));
        }
      },
      "swish");
}

Tensor leaky_relu(const Tensor& a, double negative_slope) {
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i)
    out[i] = av[i] > 0.0 ? av[i] : negative_slope * av[i];
  return make_op(
      a.shape(), std::move(out), {a},
      [negative_slope](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        auto& ga = grad_buffer(pa);
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          ga[i] += self.grad[i] *
                   (pa.value[i] > 0.0 ? 1.0 : negative_slope);
      },
      "leaky_relu");
}

Tensor mean_all(const Tensor& a) {
  const auto& av = a.values();
  if (av.empty()) throw DomainError("mean_all: empty tensor");
  const double inv = 1.0 / static_cast<double>(av.size());
  const double m = std::accumulate(av.begin(), av.end(), 0.0) * inv;
  return make_op(
      {1}, {m}, {a},
      [inv](detail::TensorNode& self) {
        auto& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        auto& ga = grad_buffer(pa);
        const double g = self.grad[0] * inv;
        for (double& x : ga) x += g;
      },
      "mean_all");
}

Tensor smooth_l1(const Tensor& pred, double target, double beta) {
  if (pred.size() != 1) throw ShapeError("smooth_l1: pred must be scalar");
  if (!(beta > 0.0)) throw DomainError("smooth_l1: beta must be positive");
  const double x = pred.values()[0] - target;
  const double loss =
      std::abs(x) < beta ? 0.5 * x * x / beta : std::abs(x) - 0.5 * beta;
  return make_op(
      {1}, {loss}, {pred},
      [x, beta](detail::TensorNode& self) {
        auto& pp = *self.parents[0];
        if (!pp.requires_grad) return;
        auto& gp = grad_buffer(pp);
        const double d = std::abs(x) < beta ? x / beta : (x > 0.0 ? 1.0 : -1.0);
        gp[0] += self.grad[0] * d;
      },
      "smooth_l1");
}

// --- backward ----------------------------------------------------------------

void backward(const Tensor& root, double seed) {
  if (!root.defined()) throw ShapeError("backward: undefined tensor");
  if (root.size() != 1) throw ShapeError("backward: root must be scalar");
  detail::TensorNode* root_node = root.node();
  if (!root_node->requires_grad) return;  // constant function: nothing to do

  // Creation order is a topological order (parents precede children), so a
  // sort by descending seq gives a valid reverse sweep.
  std::vector<detail::TensorNode*> tape;
  std::vector<detail::TensorNode*> stack{root_node};
  std::unordered_map<detail::TensorNode*, bool> seen;
  seen[root_node] = true;
  while (!stack.empty()) {
    detail::TensorNode* n = stack.back();
    stack.pop_back();
    tape.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && !seen[p.get()]) {
        seen[p.get()] = true;
        stack.push_back(p.get());
      }
    }
  }
  std::sort(tape.begin(), tape.end(),
            [](const detail::TensorNode* a, const detail::TensorNode* b) {
              return a->seq > b->seq;
            });

  grad_buffer(*root_node)[0] += seed;
  for (detail::TensorNode* n : tape) {
    if (n->backward) {
      grad_buffer(*n);
      n->backward(*n);
    }
  }
}

// --- ParamStore ----------------------------------------------------------------

Tensor& ParamStore::create(const std::string& name, Shape shape,
                           std::vector<double> data) {
  if (contains(name))
    throw ConfigError("parameter '" + name + "' already exists");
  names_.push_back(name);
  auto [it, _] = tensors_.emplace(
      name, Tensor::parameter(std::move(shape), std::move(data)));
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  const auto it = tensors_.find(name);
  if (it == tensors_.end())
    throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end())
    throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

bool ParamStore::contains(const std::string& name) const {
  return tensors_.find(name) != tensors_.end();
}

std::int64_t ParamStore::total_elements() const {
  std::int64_t n = 0;
  for (const std::string& name : names_) n += at(name).size();
  return n;
}

void ParamStore::zero_grad() {
  for (const std::string& name : names_) at(name).zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const std::string& name : names_) {
    const Tensor& t = at(name);
    out.create(name, t.shape(), t.values());
  }
  return out;
}

// --- Adam ------------------------------------------------------------------

AdamState::AdamState(const ParamStore& params, AdamConfig config)
    : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const std::string& name : params.names()) {
    const std::size_t n = params.at(name).values().size();
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

void AdamState::step(ParamStore& params) {
  if (m_.size() != params.size())
    throw ConfigError("adam state does not match parameter store");
  ++step_count_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t p = 0; p < params.names().size(); ++p) {
    Tensor& t = params.at(params.names()[p]);
    const std::vector<double> g = t.grad();
    auto& value = t.mutable_values();
    if (m_[p].size() != value.size())
      throw ConfigError("adam moment shape mismatch for '" +
                        params.names()[p] + "'");
    for (std::size_t i = 0; i < value.size(); ++i) {
      m_[p][i] = b1 * m_[p][i] + (1.0 - b1) * g[i];
      v_[p][i] = b2 * v_[p][i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m_[p][i] / bc1;
      const double vhat = v_[p][i] / bc2;
      value[i] -= config_.learning_rate * mhat /
                  (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

// --- grad_check ----------------------------------------------------------------

double grad_check(const std::function<Tensor()>& f, ParamStore& params,
                  double eps) {
  if (!(eps > 0.0)) throw DomainError("grad_check: eps must be positive");
  params.zero_grad();
  Tensor y = f();
  if (!std::isfinite(y.item())) throw NumericError("grad_check: f not finite");
  backward(y);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const std::string& name : params.names())
    analytic.push_back(params.at(name).grad());

  NoGradGuard no_grad;
  double worst = 0.0;
  for (std::size_t p = 0; p < params.names().size(); ++p) {
    Tensor& t = params.at(params.names()[p]);
    auto& value = t.mutable_values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double original = value[i];
      value[i] = original + eps;
      const double fp = f().item();
      value[i] = original - eps;
      const double fm = f().item();
      value[i] = original;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[p][i];
      const double rel = std::abs(a - numeric) /
                         std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  params.zero_grad();
  return worst;
}

}  // namespace paxnet
