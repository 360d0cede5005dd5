// Copyright 2026 The ican Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ican/bbox.hpp"

namespace ican {

using Shape = std::vector<int>;

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized lazily, mirrors data
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

/// Dense N-dimensional array of 64-bit floats, row-major. A Tensor is a
/// cheap shared handle to its storage; values are treated as immutable once
/// an operation has produced them. mutable_data() exists for parameter
/// initialization and optimizer updates, which happen between tapes.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return node_->data.size(); }

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }

  /// Value of a one-element tensor.
  double value() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  /// Gradient accumulated by the last backward pass; zeros if untouched.
  std::span<const double> grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

  /// Shares storage with `other` (used for identity checks in tests).
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::TensorNode> node_;
  friend class Tape;
};

/// Records operations during a forward pass so backward() can replay their
/// gradient rules in reverse. Constructing a Tape makes it the active
/// recorder; destruction restores the previous one. Recording order is the
/// topological order of the graph, so the reverse sweep visits every
/// recorded operation exactly once.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  std::size_t size() const { return records_.size(); }

  /// Appends a gradient rule. `backprop` reads output->grad and accumulates
  /// into the inputs' grads.
  void record(const std::vector<Tensor>& inputs, const Tensor& output,
              std::function<void()> backprop);

  /// Reverse-mode sweep from a scalar loss. Seeds d(loss)/d(loss) = 1 and
  /// applies every recorded rule in reverse order. Parameters the loss does
  /// not reach keep zero gradients.
  void backward(const Tensor& loss);

  /// True if every record's inputs are either leaves or outputs of earlier
  /// records (exposed for tests).
  bool topologically_ordered() const;

 private:
  struct Record {
    std::vector<std::shared_ptr<detail::TensorNode>> inputs;
    std::shared_ptr<detail::TensorNode> output;
    std::function<void()> backprop;
  };
  std::vector<Record> records_;
  Tape* prev_ = nullptr;
};

// ---- Elementwise and scalar operations ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// ---- Linear algebra ----

/// C[m x n] = A[m x k] * B[k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// y[m] = A[m x k] * x[k].
Tensor matvec(const Tensor& a, const Tensor& x);
/// y[n] = A^T x for A[k x n], x[k].
Tensor matvec_t(const Tensor& a, const Tensor& x);

// ---- Shape ----

Tensor reshape(const Tensor& x, Shape shape);
/// Concatenation of 1-D tensors into one 1-D tensor.
Tensor concat(const std::vector<Tensor>& parts);
/// Sum of all entries, as a scalar tensor.
Tensor sum(const Tensor& x);

// ---- Spatial operations on [C x H x W] maps ----

/// Zero-padded 2-D convolution, weight [F x C x k x k], square kernel.
/// Output spatial size: (H + 2*pad - k) / stride + 1 (floor).
Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad);
/// Same, plus a per-output-channel bias [F].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
              int pad);

/// Numerically stable softmax over a 1-D tensor (max subtraction).
Tensor softmax(const Tensor& x);

/// Max pooling with square window `k` and stride `s`, floor output size.
Tensor max_pool2d(const Tensor& x, int k, int s);

/// Max ROI pooling: the box is scaled by `spatial_scale`, rounded onto the
/// feature grid (ties toward the lower index) and split into out x out bins;
/// each output cell is the max over its bin. Rejects boxes that project to
/// zero area.
Tensor roi_pool(const Tensor& fmap, const BBox& box, int out,
                double spatial_scale);

/// Per-channel spatial mean of a [C x H x W] map.
Tensor global_avg_pool(const Tensor& x);

// ---- Losses ----

/// Mean over entries of the binary cross entropy between sigmoid(logits)
/// and labels, computed in the logit domain.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> labels);
/// Same, restricted to the given entry indices.
Tensor bce_with_logits_masked(const Tensor& logits,
                              std::span<const double> labels,
                              std::span<const int> indices);

}  // namespace ican
