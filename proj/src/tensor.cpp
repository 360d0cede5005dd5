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

#include "ican/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ican {

namespace {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("Tensor: dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << " x ";
    os << s[i];
  }
  os << "]";
  return os.str();
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch: " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

Tape* g_active_tape = nullptr;

/// Marks the output and appends the rule when a tape is live and some input
/// participates in differentiation.
void maybe_record(std::vector<Tensor> inputs, Tensor& out,
                  std::function<void()> backprop) {
  bool any = false;
  for (const Tensor& t : inputs) any = any || t.requires_grad();
  if (!any) return;
  out.set_requires_grad(true);
  if (Tape* tape = Tape::active()) {
    tape->record(inputs, out, std::move(backprop));
  }
}

}  // namespace

// ---- Tensor ----

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<detail::TensorNode>();
  std::size_t count = numel(shape);
  n->shape = std::move(shape);
  n->data.assign(count, 0.0);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.node_->data.begin(), t.node_->data.end(), value);
  return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  if (numel(shape) != data.size()) {
    throw std::invalid_argument("Tensor: shape " + shape_str(shape) +
                                " does not match " + std::to_string(data.size()) +
                                " values");
  }
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

double Tensor::value() const {
  if (size() != 1) {
    throw std::invalid_argument("Tensor::value: tensor has " +
                                std::to_string(size()) + " elements");
  }
  return node_->data[0];
}

// ---- Tape ----

Tape::Tape() {
  prev_ = g_active_tape;
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(const std::vector<Tensor>& inputs, const Tensor& output,
                  std::function<void()> backprop) {
  Record r;
  r.inputs.reserve(inputs.size());
  for (const Tensor& t : inputs) r.inputs.push_back(t.node());
  r.output = output.node();
  r.backprop = std::move(backprop);
  records_.push_back(std::move(r));
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                std::to_string(loss.size()) + " elements");
  }
  bool reachable = false;
  for (const Record& r : records_) {
    if (r.output == loss.node()) {
      reachable = true;
      break;
    }
  }
  if (!reachable) {
    throw std::invalid_argument("backward: loss was not produced on this tape");
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    it->backprop();
  }
}

bool Tape::topologically_ordered() const {
  // An input is legal if it is not the output of any later record.
  for (std::size_t i = 0; i < records_.size(); ++i) {
    for (const auto& in : records_[i].inputs) {
      for (std::size_t j = i; j < records_.size(); ++j) {
        if (records_[j].output == in) return false;
      }
    }
  }
  return true;
}

// ---- Elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.mutable_data()[i] = a.data()[i] + b.data()[i];
  }
  auto an = a.node(), bn = b.node(), on = out.node();
  maybe_record({a, b}, out, [an, bn, on, n] {
    on->ensure_grad();
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) bn->grad[i] += on->grad[i];
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.mutable_data()[i] = a.data()[i] * b.data()[i];
  }
  auto an = a.node(), bn = b.node(), on = out.node();
  maybe_record({a, b}, out, [an, bn, on, n] {
    on->ensure_grad();
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i] * bn->data[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) bn->grad[i] += on->grad[i] * an->data[i];
    }
  });
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out.mutable_data()[i] = a.data()[i] + c;
  auto an = a.node(), on = out.node();
  maybe_record({a}, out, [an, on, n] {
    on->ensure_grad();
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i];
  });
  return out;
}

Tensor mul_scalar(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out.mutable_data()[i] = a.data()[i] * c;
  auto an = a.node(), on = out.node();
  maybe_record({a}, out, [an, on, n, c] {
    on->ensure_grad();
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i] * c;
  });
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.mutable_data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
  }
  auto xn = x.node(), on = out.node();
  maybe_record({x}, out, [xn, on, n] {
    on->ensure_grad();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      if (xn->data[i] > 0.0) xn->grad[i] += on->grad[i];
    }
  });
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    double v = x.data()[i];
    // Evaluate through exp(-|v|) so neither branch overflows.
    double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                        : std::exp(v) / (1.0 + std::exp(v));
    out.mutable_data()[i] = s;
  }
  auto xn = x.node(), on = out.node();
  maybe_record({x}, out, [xn, on, n] {
    on->ensure_grad();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      double s = on->data[i];
      xn->grad[i] += on->grad[i] * s * (1.0 - s);
    }
  });
  return out;
}

// ---- Linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw std::invalid_argument("matmul: expected rank-2 tensors, got " +
                                shape_str(a.shape()) + " and " +
                                shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1);
  const int k2 = b.dim(0), n = b.dim(1);
  if (k != k2) {
    throw std::invalid_argument("matmul: inner dimensions disagree: " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros({m, n});
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.mutable_data().data();
  for (int i = 0; i < m; ++i) {
    for (int t = 0; t < k; ++t) {
      double av = ad[i * k + t];
      for (int j = 0; j < n; ++j) od[i * n + j] += av * bd[t * n + j];
    }
  }
  auto an = a.node(), bn = b.node(), on = out.node();
  maybe_record({a, b}, out, [an, bn, on, m, k, n] {
    on->ensure_grad();
    if (an->requires_grad) {
      an->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double g = on->grad[static_cast<std::size_t>(i) * n + j];
          for (int t = 0; t < k; ++t)
            an->grad[static_cast<std::size_t>(i) * k + t] += g * bn->data[static_cast<std::size_t>(t) * n + j];
        }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double g = on->grad[static_cast<std::size_t>(i) * n + j];
          for (int t = 0; t < k; ++t)
            bn->grad[static_cast<std::size_t>(t) * n + j] += g * an->data[static_cast<std::size_t>(i) * k + t];
        }
    }
  });
  return out;
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  if (a.rank() != 2 || x.rank() != 1 || a.dim(1) != x.dim(0)) {
    throw std::invalid_argument("matvec: incompatible shapes " +
                                shape_str(a.shape()) + " and " +
                                shape_str(x.shape()));
  }
  const int m = a.dim(0), k = a.dim(1);
  Tensor out = Tensor::zeros({m});
  const double* ad = a.data().data();
  const double* xd = x.data().data();
  double* od = out.mutable_data().data();
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int t = 0; t < k; ++t) acc += ad[i * k + t] * xd[t];
    od[i] = acc;
  }
  auto an = a.node(), xn = x.node(), on = out.node();
  maybe_record({a, x}, out, [an, xn, on, m, k] {
    on->ensure_grad();
    if (an->requires_grad) {
      an->ensure_grad();
      for (int i = 0; i < m; ++i) {
        double g = on->grad[i];
        for (int t = 0; t < k; ++t)
          an->grad[static_cast<std::size_t>(i) * k + t] += g * xn->data[t];
      }
    }
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (int i = 0; i < m; ++i) {
        double g = on->grad[i];
        for (int t = 0; t < k; ++t)
          xn->grad[t] += g * an->data[static_cast<std::size_t>(i) * k + t];
      }
    }
  });
  return out;
}

Tensor matvec_t(const Tensor& a, const Tensor& x) {
  if (a.rank() != 2 || x.rank() != 1 || a.dim(0) != x.dim(0)) {
    throw std::invalid_argument("matvec_t: incompatible shapes " +
                                shape_str(a.shape()) + " and " +
                                shape_str(x.shape()));
  }
  const int k = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({n});
  const double* ad = a.data().data();
  const double* xd = x.data().data();
  double* od = out.mutable_data().data();
  for (int e = 0; e < k; ++e) {
    double xv = xd[e];
    for (int c = 0; c < n; ++c) od[c] += xv * ad[e * n + c];
  }
  auto an = a.node(), xn = x.node(), on = out.node();
  maybe_record({a, x}, out, [an, xn, on, k, n] {
    on->ensure_grad();
    if (an->requires_grad) {
      an->ensure_grad();
      for (int e = 0; e < k; ++e)
        for (int c = 0; c < n; ++c)
          an->grad[static_cast<std::size_t>(e) * n + c] += xn->data[e] * on->grad[c];
    }
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (int e = 0; e < k; ++e) {
        double acc = 0.0;
        for (int c = 0; c < n; ++c)
          acc += an->data[static_cast<std::size_t>(e) * n + c] * on->grad[c];
        xn->grad[e] += acc;
      }
    }
  });
  return out;
}

// ---- Shape ----

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw std::invalid_argument("reshape: cannot view " +
                                shape_str(x.shape()) + " as " +
                                shape_str(shape));
  }
  Tensor out = Tensor::from_data(std::move(shape),
                                 {x.data().begin(), x.data().end()});
  auto xn = x.node(), on = out.node();
  const std::size_t n = x.size();
  maybe_record({x}, out, [xn, on, n] {
    on->ensure_grad();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) xn->grad[i] += on->grad[i];
  });
  return out;
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 1) {
      throw std::invalid_argument("concat: expected 1-D parts, got " +
                                  shape_str(p.shape()));
    }
    total += p.size();
  }
  Tensor out = Tensor::zeros({static_cast<int>(total)});
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data().begin(), p.data().end(),
              out.mutable_data().begin() + static_cast<std::ptrdiff_t>(off));
    off += p.size();
  }
  std::vector<std::shared_ptr<detail::TensorNode>> nodes;
  std::vector<std::size_t> offsets;
  off = 0;
  for (const Tensor& p : parts) {
    nodes.push_back(p.node());
    offsets.push_back(off);
    off += p.size();
  }
  auto on = out.node();
  maybe_record(parts, out, [nodes, offsets, on] {
    on->ensure_grad();
    for (std::size_t pi = 0; pi < nodes.size(); ++pi) {
      auto& nd = nodes[pi];
      if (!nd->requires_grad) continue;
      nd->ensure_grad();
      for (std::size_t i = 0; i < nd->data.size(); ++i) {
        nd->grad[i] += on->grad[offsets[pi] + i];
      }
    }
  });
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::scalar(acc);
  auto xn = x.node(), on = out.node();
  const std::size_t n = x.size();
  maybe_record({x}, out, [xn, on, n] {
    on->ensure_grad();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) xn->grad[i] += on->grad[0];
  });
  return out;
}

// ---- Spatial ----

namespace {

void check_chw(const char* op, const Tensor& x) {
  if (x.rank() != 3) {
    throw std::invalid_argument(std::string(op) + ": expected [C x H x W], got " +
                                shape_str(x.shape()));
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad) {
  return conv2d(x, w, Tensor(), stride, pad);
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
              int pad) {
  check_chw("conv2d", x);
  if (w.rank() != 4 || w.dim(2) != w.dim(3)) {
    throw std::invalid_argument("conv2d: weight must be [F x C x k x k], got " +
                                shape_str(w.shape()));
  }
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int F = w.dim(0), k = w.dim(2);
  if (w.dim(1) != C) {
    throw std::invalid_argument("conv2d: input has " + std::to_string(C) +
                                " channels but weight expects " +
                                std::to_string(w.dim(1)));
  }
  if (stride < 1) {
    throw std::invalid_argument("conv2d: stride must be >= 1, got " +
                                std::to_string(stride));
  }
  if (pad < 0) throw std::invalid_argument("conv2d: pad must be >= 0");
  if (k > H + 2 * pad || k > W + 2 * pad) {
    throw std::invalid_argument("conv2d: kernel " + std::to_string(k) +
                                " exceeds padded input " +
                                std::to_string(H + 2 * pad) + " x " +
                                std::to_string(W + 2 * pad));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != F)) {
    throw std::invalid_argument("conv2d: bias must be [F]");
  }
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  Tensor out = Tensor::zeros({F, Ho, Wo});
  const double* xd = x.data().data();
  const double* wd = w.data().data();
  double* od = out.mutable_data().data();
  for (int f = 0; f < F; ++f) {
    const double b = bias.defined() ? bias.data()[f] : 0.0;
    for (int i = 0; i < Ho; ++i) {
      for (int j = 0; j < Wo; ++j) {
        double acc = b;
        for (int c = 0; c < C; ++c) {
          for (int u = 0; u < k; ++u) {
            int yy = i * stride - pad + u;
            if (yy < 0 || yy >= H) continue;
            for (int v = 0; v < k; ++v) {
              int xx = j * stride - pad + v;
              if (xx < 0 || xx >= W) continue;
              acc += xd[(c * H + yy) * W + xx] * wd[((f * C + c) * k + u) * k + v];
            }
          }
        }
        od[(f * Ho + i) * Wo + j] = acc;
      }
    }
  }
  std::vector<Tensor> inputs = {x, w};
  if (bias.defined()) inputs.push_back(bias);
  auto xn = x.node(), wn = w.node(), on = out.node();
  auto biasn = bias.defined() ? bias.node() : nullptr;
  maybe_record(inputs, out, [xn, wn, biasn, on, C, H, W, F, k, Ho, Wo, stride, pad] {
    on->ensure_grad();
    if (xn->requires_grad) xn->ensure_grad();
    if (wn->requires_grad) wn->ensure_grad();
    if (biasn && biasn->requires_grad) biasn->ensure_grad();
    for (int f = 0; f < F; ++f) {
      for (int i = 0; i < Ho; ++i) {
        for (int j = 0; j < Wo; ++j) {
          double g = on->grad[(static_cast<std::size_t>(f) * Ho + i) * Wo + j];
          if (g == 0.0) continue;
          if (biasn && biasn->requires_grad) biasn->grad[f] += g;
          for (int c = 0; c < C; ++c) {
            for (int u = 0; u < k; ++u) {
              int yy = i * stride - pad + u;
              if (yy < 0 || yy >= H) continue;
              for (int v = 0; v < k; ++v) {
                int xx = j * stride - pad + v;
                if (xx < 0 || xx >= W) continue;
                std::size_t xi = (static_cast<std::size_t>(c) * H + yy) * W + xx;
                std::size_t wi = ((static_cast<std::size_t>(f) * C + c) * k + u) * k + v;
                if (wn->requires_grad) wn->grad[wi] += g * xn->data[xi];
                if (xn->requires_grad) xn->grad[xi] += g * wn->data[wi];
              }
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1 || x.size() == 0) {
    throw std::invalid_argument("softmax: expected non-empty 1-D input, got " +
                                shape_str(x.shape()));
  }
  const std::size_t n = x.size();
  double mx = x.data()[0];
  for (double v : x.data()) mx = std::max(mx, v);
  Tensor out = Tensor::zeros(x.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = std::exp(x.data()[i] - mx);
    out.mutable_data()[i] = e;
    total += e;
  }
  for (std::size_t i = 0; i < n; ++i) out.mutable_data()[i] /= total;
  auto xn = x.node(), on = out.node();
  maybe_record({x}, out, [xn, on, n] {
    on->ensure_grad();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += on->grad[j] * on->data[j];
    for (std::size_t i = 0; i < n; ++i) {
      xn->grad[i] += on->data[i] * (on->grad[i] - dot);
    }
  });
  return out;
}

Tensor max_pool2d(const Tensor& x, int k, int s) {
  check_chw("max_pool2d", x);
  if (k < 1 || s < 1) throw std::invalid_argument("max_pool2d: k and s must be >= 1");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (k > H || k > W) {
    throw std::invalid_argument("max_pool2d: window exceeds input extent");
  }
  const int Ho = (H - k) / s + 1;
  const int Wo = (W - k) / s + 1;
  Tensor out = Tensor::zeros({C, Ho, Wo});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < Ho; ++i) {
      for (int j = 0; j < Wo; ++j) {
        double best = -1e308;
        std::size_t best_idx = 0;
        for (int u = 0; u < k; ++u) {
          for (int v = 0; v < k; ++v) {
            std::size_t xi = (static_cast<std::size_t>(c) * H + i * s + u) * W + j * s + v;
            if (x.data()[xi] > best) {
              best = x.data()[xi];
              best_idx = xi;
            }
          }
        }
        std::size_t oi = (static_cast<std::size_t>(c) * Ho + i) * Wo + j;
        out.mutable_data()[oi] = best;
        (*argmax)[oi] = best_idx;
      }
    }
  }
  auto xn = x.node(), on = out.node();
  maybe_record({x}, out, [xn, on, argmax] {
    on->ensure_grad();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t oi = 0; oi < on->data.size(); ++oi) {
      xn->grad[(*argmax)[oi]] += on->grad[oi];
    }
  });
  return out;
}

namespace {

// Rounds a projected box coordinate, half-ties toward the lower cell index.
int project_coord(double v, double scale) {
  return static_cast<int>(std::ceil(v * scale - 0.5));
}

}  // namespace

Tensor roi_pool(const Tensor& fmap, const BBox& box, int out,
                double spatial_scale) {
  check_chw("roi_pool", fmap);
  if (out < 1) throw std::invalid_argument("roi_pool: output size must be >= 1");
  const int C = fmap.dim(0), H = fmap.dim(1), W = fmap.dim(2);
  int px1 = std::clamp(project_coord(box.x1, spatial_scale), 0, W);
  int py1 = std::clamp(project_coord(box.y1, spatial_scale), 0, H);
  int px2 = std::clamp(project_coord(box.x2, spatial_scale), 0, W);
  int py2 = std::clamp(project_coord(box.y2, spatial_scale), 0, H);
  if (px2 <= px1 || py2 <= py1) {
    throw std::invalid_argument(
        "roi_pool: degenerate box after projection: [" + std::to_string(box.x1) +
        ", " + std::to_string(box.y1) + ", " + std::to_string(box.x2) + ", " +
        std::to_string(box.y2) + "] at scale " + std::to_string(spatial_scale));
  }
  const int bw = px2 - px1;
  const int bh = py2 - py1;
  Tensor result = Tensor::zeros({C, out, out});
  auto argmax = std::make_shared<std::vector<std::size_t>>(result.size());
  for (int c = 0; c < C; ++c) {
    for (int bi = 0; bi < out; ++bi) {
      int r0 = py1 + bi * bh / out;
      int r1 = py1 + (bi + 1) * bh / out;
      if (r1 <= r0) r1 = r0 + 1;  // narrow region: fall back to one cell
      r0 = std::min(r0, py2 - 1);
      r1 = std::min(r1, py2);
      for (int bj = 0; bj < out; ++bj) {
        int c0 = px1 + bj * bw / out;
        int c1 = px1 + (bj + 1) * bw / out;
        if (c1 <= c0) c1 = c0 + 1;
        c0 = std::min(c0, px2 - 1);
        c1 = std::min(c1, px2);
        double best = -1e308;
        std::size_t best_idx = 0;
        for (int yy = r0; yy < r1; ++yy) {
          for (int xx = c0; xx < c1; ++xx) {
            std::size_t xi = (static_cast<std::size_t>(c) * H + yy) * W + xx;
            if (fmap.data()[xi] > best) {
              best = fmap.data()[xi];
              best_idx = xi;
            }
          }
        }
        std::size_t oi = (static_cast<std::size_t>(c) * out + bi) * out + bj;
        result.mutable_data()[oi] = best;
        (*argmax)[oi] = best_idx;
      }
    }
  }
  auto xn = fmap.node(), on = result.node();
  maybe_record({fmap}, result, [xn, on, argmax] {
    on->ensure_grad();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t oi = 0; oi < on->data.size(); ++oi) {
      xn->grad[(*argmax)[oi]] += on->grad[oi];
    }
  });
  return result;
}

Tensor global_avg_pool(const Tensor& x) {
  check_chw("global_avg_pool", x);
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const double inv = 1.0 / (static_cast<double>(H) * W);
  Tensor out = Tensor::zeros({C});
  for (int c = 0; c < C; ++c) {
    double acc = 0.0;
    for (int i = 0; i < H * W; ++i) acc += x.data()[static_cast<std::size_t>(c) * H * W + i];
    out.mutable_data()[c] = acc * inv;
  }
  auto xn = x.node(), on = out.node();
  maybe_record({x}, out, [xn, on, C, H, W, inv] {
    on->ensure_grad();
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (int c = 0; c < C; ++c) {
      double g = on->grad[c] * inv;
      for (int i = 0; i < H * W; ++i) xn->grad[static_cast<std::size_t>(c) * H * W + i] += g;
    }
  });
  return out;
}

// ---- Losses ----

namespace {

double stable_bce_term(double z, double y) {
  // max(z, 0) - z*y + log(1 + exp(-|z|))
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid_value(double v) {
  return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                  : std::exp(v) / (1.0 + std::exp(v));
}

}  // namespace

Tensor bce_with_logits(const Tensor& logits, std::span<const double> labels) {
  if (logits.rank() != 1 || logits.size() != labels.size()) {
    throw std::invalid_argument("bce_with_logits: got " +
                                std::to_string(logits.size()) + " logits vs " +
                                std::to_string(labels.size()) + " labels");
  }
  std::vector<int> all(logits.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return bce_with_logits_masked(logits, labels, all);
}

Tensor bce_with_logits_masked(const Tensor& logits,
                              std::span<const double> labels,
                              std::span<const int> indices) {
  if (logits.rank() != 1 || logits.size() != labels.size()) {
    throw std::invalid_argument("bce_with_logits: got " +
                                std::to_string(logits.size()) + " logits vs " +
                                std::to_string(labels.size()) + " labels");
  }
  if (indices.empty()) {
    throw std::invalid_argument("bce_with_logits: empty index set");
  }
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= logits.size()) {
      throw std::invalid_argument("bce_with_logits: index out of range");
    }
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  double acc = 0.0;
  for (int i : indices) acc += stable_bce_term(logits.data()[i], labels[i]);
  Tensor out = Tensor::scalar(acc * inv);
  auto zn = logits.node(), on = out.node();
  std::vector<int> idx(indices.begin(), indices.end());
  std::vector<double> lab(labels.begin(), labels.end());
  maybe_record({logits}, out, [zn, on, idx, lab, inv] {
    on->ensure_grad();
    if (!zn->requires_grad) return;
    zn->ensure_grad();
    double g = on->grad[0] * inv;
    for (int i : idx) {
      zn->grad[i] += g * (sigmoid_value(zn->data[i]) - lab[i]);
    }
  });
  return out;
}

}  // namespace ican
