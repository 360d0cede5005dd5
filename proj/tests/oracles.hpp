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
//
// Reference implementations used only by tests. These stay deliberately
// naive so they can act as independent oracles for the library code.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ican/bbox.hpp"
#include "ican/rng.hpp"
#include "ican/tensor.hpp"

namespace ican::testing {

/// Entry-wise triple loop, no blocking, no reuse of library code.
inline std::vector<double> naive_matmul(const std::vector<double>& a,
                                        const std::vector<double>& b, int m,
                                        int k, int n) {
  std::vector<double> c(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) {
        acc += a[static_cast<std::size_t>(i) * k + t] * b[static_cast<std::size_t>(t) * n + j];
      }
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
  }
  return c;
}

/// Direct six-loop convolution with zero padding.
inline std::vector<double> naive_conv2d(const std::vector<double>& x,
                                        const std::vector<double>& w,
                                        const std::vector<double>& bias, int C,
                                        int H, int W, int F, int k, int stride,
                                        int pad, int* out_h, int* out_w) {
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  *out_h = Ho;
  *out_w = Wo;
  std::vector<double> y(static_cast<std::size_t>(F) * Ho * Wo, 0.0);
  for (int f = 0; f < F; ++f) {
    for (int i = 0; i < Ho; ++i) {
      for (int j = 0; j < Wo; ++j) {
        double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(f)];
        for (int c = 0; c < C; ++c) {
          for (int u = 0; u < k; ++u) {
            for (int v = 0; v < k; ++v) {
              int yy = i * stride - pad + u;
              int xx = j * stride - pad + v;
              if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
              acc += x[(static_cast<std::size_t>(c) * H + yy) * W + xx] *
                     w[((static_cast<std::size_t>(f) * C + c) * k + u) * k + v];
            }
          }
        }
        y[(static_cast<std::size_t>(f) * Ho + i) * Wo + j] = acc;
      }
    }
  }
  return y;
}

/// Threshold-sweep average precision: every ranking prefix contributes a
/// (recall, precision) point; the envelope is evaluated on the recall grid
/// j / num_gt by a literal max over qualifying prefixes.
inline double sweep_ap_oracle(const std::vector<char>& flags, long num_gt) {
  const std::size_t k = flags.size();
  std::vector<double> precision(k), recall(k);
  long tp = 0;
  for (std::size_t i = 0; i < k; ++i) {
    tp += flags[i] ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  double acc = 0.0;
  for (long j = 1; j <= num_gt; ++j) {
    double r = static_cast<double>(j) / static_cast<double>(num_gt);
    double best = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (recall[i] >= r) best = std::max(best, precision[i]);
    }
    acc += best;
  }
  return acc / static_cast<double>(num_gt);
}

/// Pixel-counting IoU on a fine grid (integer-coordinate boxes).
inline double rasterized_iou(const BBox& a, const BBox& b, int subdivisions = 4) {
  double x_lo = std::min(a.x1, b.x1), x_hi = std::max(a.x2, b.x2);
  double y_lo = std::min(a.y1, b.y1), y_hi = std::max(a.y2, b.y2);
  const int nx = static_cast<int>((x_hi - x_lo) * subdivisions + 0.5);
  const int ny = static_cast<int>((y_hi - y_lo) * subdivisions + 0.5);
  long in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < ny; ++i) {
    double y = y_lo + (i + 0.5) / subdivisions;
    for (int j = 0; j < nx; ++j) {
      double x = x_lo + (j + 0.5) / subdivisions;
      bool pa = x > a.x1 && x < a.x2 && y > a.y1 && y < a.y2;
      bool pb = x > b.x1 && x < b.x2 && y > b.y1 && y < b.y2;
      if (pa) ++in_a;
      if (pb) ++in_b;
      if (pa && pb) ++in_both;
    }
  }
  long uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

/// Central finite differences against tape gradients for every tensor in
/// `params`. `make_loss` must be a pure function of the current parameter
/// values. Returns the worst relative error |g_fd - g_ad| / max(1, |g_fd|).
inline double max_gradient_error(std::vector<Tensor> params,
                                 const std::function<Tensor()>& make_loss,
                                 double h = 1e-5) {
  for (Tensor& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    Tape tape;
    Tensor loss = make_loss();
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) {
    analytic.emplace_back(p.grad().begin(), p.grad().end());
  }
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double saved = p.mutable_data()[i];
      p.mutable_data()[i] = saved + h;
      double up = make_loss().value();
      p.mutable_data()[i] = saved - h;
      double down = make_loss().value();
      p.mutable_data()[i] = saved;
      double fd = (up - down) / (2.0 * h);
      double err = std::abs(fd - analytic[pi][i]) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace ican::testing
