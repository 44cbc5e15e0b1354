// Copyright 2026 PaxNet contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace paxnet {

using Shape = std::vector<std::int64_t>;

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first backward touch
  bool requires_grad = false;
  std::uint64_t seq = 0;  // creation order; doubles as a topological key
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward;
};

}  // namespace detail

// While disabled, ops do not record the tape; pure inference paths use this
// to skip gradient bookkeeping. Thread-local.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Dense row-major 64-bit tensor; a cheap handle onto a shared node in the
// computation tape. Values are immutable through the public API except for
// the optimizer path (mutable_values).
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> data);
  static Tensor scalar(double v);
  static Tensor zeros(const Shape& shape);
  // Leaf with requires_grad set; gradients accumulate across backward calls
  // until zero_grad.
  static Tensor parameter(Shape shape, std::vector<double> data);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::int64_t size() const;
  std::int64_t rows() const;  // shape[0] for rank >= 1, else 1
  std::int64_t cols() const;  // shape[1] for rank 2, else 1
  bool requires_grad() const;

  const std::vector<double>& values() const;
  std::vector<double>& mutable_values();
  // Gradient accumulated by backward(); zeros if never touched.
  std::vector<double> grad() const;
  void zero_grad();

  double item() const;  // value of a single-element tensor

  detail::TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor make_op(Shape shape, std::vector<double> value,
                        std::vector<Tensor> inputs,
                        std::function<void(detail::TensorNode&)> backward,
                        const char* op_name);
};

// --- ops (forward + recorded backward) ------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);           // [n,k] x [k,m]
Tensor add(const Tensor& a, const Tensor& b);              // same shape
Tensor sub(const Tensor& a, const Tensor& b);              // same shape
Tensor mul(const Tensor& a, const Tensor& b);              // elementwise
Tensor scale(const Tensor& a, double c);
Tensor add_rowwise(const Tensor& m, const Tensor& row);    // [n,k] + [k]
Tensor concat_cols(const std::vector<Tensor>& parts);      // along last axis
Tensor concat_rows(const std::vector<Tensor>& parts);      // stack rows
Tensor gather_rows(const Tensor& a, std::vector<std::int32_t> index);
// Scatter-add of rows into num_segments buckets; deterministic (row order).
Tensor segment_sum(const Tensor& values, std::vector<std::int32_t> segments,
                   std::int64_t num_segments);
// Per-segment, per-column softmax over rows.
Tensor segment_softmax(const Tensor& values,
                       std::vector<std::int32_t> segments,
                       std::int64_t num_segments);
Tensor swish(const Tensor& a);  // x * sigmoid(x)
Tensor leaky_relu(const Tensor& a, double negative_slope);
Tensor mean_all(const Tensor& a);  // scalar mean over all elements
// Huber-style loss against a fixed target: 0.5 x^2 / beta for |x| < beta,
// |x| - 0.5 beta otherwise, x = pred - target. pred must be scalar.
Tensor smooth_l1(const Tensor& pred, double target, double beta = 1.0);

// Reverse-mode sweep from a scalar root; accumulates into requires_grad
// leaves. May be called repeatedly to accumulate (e.g. over a batch).
void backward(const Tensor& root, double seed = 1.0);

// --- parameters ------------------------------------------------------------

// Named parameter tensors with deterministic (insertion) iteration order.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Shape shape,
                 std::vector<double> data);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::int64_t total_elements() const;

  void zero_grad();
  // Deep copy with fresh leaves (values only, no gradients).
  ParamStore clone() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Tensor> tensors_;
};

// --- optimizer ---------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Standard bias-corrected Adam over a ParamStore.
class AdamState {
 public:
  AdamState(const ParamStore& params, AdamConfig config);

  // Applies one update from the gradients currently accumulated on params.
  void step(ParamStore& params);

  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::int64_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Compares the reverse-mode gradient of every parameter element against
// central differences of f (a deterministic scalar-valued computation) and
// returns the worst relative error, |a - n| / max(1, |a|, |n|).
double grad_check(const std::function<Tensor()>& f, ParamStore& params,
                  double eps = 1e-5);

}  // namespace paxnet
