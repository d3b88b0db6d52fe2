#include "footandball/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "footandball/parallel.hpp"
#include "gemm.hpp"

namespace fnb::kernels {
namespace {

// Upper bound on im2col band size, in elements.
constexpr std::size_t kMaxColumnElements = 1u << 19;

struct ConvGeometry {
  int in_c, out_c, k, h, w, kc;
  int band_rows;
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& input, const Tensor<T>& weights, std::size_t bias_len) {
  const Shape& xs = input.shape();
  const Shape& ws = weights.shape();
  if (ws.h != ws.w || (ws.h != 1 && ws.h != 3)) {
    throw ShapeError("conv2d: kernel must be 1x1 or 3x3, got weights " + ws.str());
  }
  if (ws.c != xs.c) {
    throw ShapeError("conv2d: input " + xs.str() + " has " + std::to_string(xs.c) +
                     " channels but weights " + ws.str() + " expect " + std::to_string(ws.c));
  }
  if (bias_len != static_cast<std::size_t>(ws.n)) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias_len) + " does not match weights " +
                     ws.str());
  }
  ConvGeometry g{xs.c, ws.n, ws.h, xs.h, xs.w, xs.c * ws.h * ws.w, 1};
  const std::size_t per_row = static_cast<std::size_t>(g.kc) * std::max(1, g.w);
  g.band_rows = static_cast<int>(std::clamp<std::size_t>(kMaxColumnElements / per_row, 1,
                                                         static_cast<std::size_t>(std::max(1, g.h))));
  return g;
}

// Unfolds rows [y0, y0 + rows) of one image into a (in_c*9) x (rows*w) matrix.
template <typename T>
void im2col3(const T* image, const ConvGeometry& g, int y0, int rows, T* col) {
  const int w = g.w;
  const std::size_t ld = static_cast<std::size_t>(rows) * w;
  for (int ic = 0; ic < g.in_c; ++ic) {
    const T* plane = image + static_cast<std::size_t>(ic) * g.h * w;
    for (int dy = 0; dy < 3; ++dy) {
      for (int dx = 0; dx < 3; ++dx) {
        T* dst_row = col + static_cast<std::size_t>(ic * 9 + dy * 3 + dx) * ld;
        for (int r = 0; r < rows; ++r) {
          const int yy = y0 + r + dy - 1;
          T* dst = dst_row + static_cast<std::size_t>(r) * w;
          if (yy < 0 || yy >= g.h) {
            std::fill(dst, dst + w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(yy) * w;
          if (dx == 1) {
            std::memcpy(dst, src, sizeof(T) * w);
          } else if (dx == 0) {
            dst[0] = T(0);
            if (w > 1) std::memcpy(dst + 1, src, sizeof(T) * (w - 1));
          } else {
            if (w > 1) std::memcpy(dst, src + 1, sizeof(T) * (w - 1));
            dst[w - 1] = T(0);
          }
        }
      }
    }
  }
}

// Scatter-adds a band column matrix back onto the image gradient.
template <typename T>
void col2im3_add(const T* col, const ConvGeometry& g, int y0, int rows, T* image) {
  const int w = g.w;
  const std::size_t ld = static_cast<std::size_t>(rows) * w;
  for (int ic = 0; ic < g.in_c; ++ic) {
    T* plane = image + static_cast<std::size_t>(ic) * g.h * w;
    for (int dy = 0; dy < 3; ++dy) {
      for (int dx = 0; dx < 3; ++dx) {
        const T* src_row = col + static_cast<std::size_t>(ic * 9 + dy * 3 + dx) * ld;
        for (int r = 0; r < rows; ++r) {
          const int yy = y0 + r + dy - 1;
          if (yy < 0 || yy >= g.h) continue;
          const T* src = src_row + static_cast<std::size_t>(r) * w;
          T* dst = plane + static_cast<std::size_t>(yy) * w;
          if (dx == 1) {
            for (int x = 0; x < w; ++x) dst[x] += src[x];
          } else if (dx == 0) {
            for (int x = 1; x < w; ++x) dst[x - 1] += src[x];
          } else {
            for (int x = 0; x + 1 < w; ++x) dst[x + 1] += src[x];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T> transpose(const T* a, int rows, int cols) {
  std::vector<T> t(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) t[static_cast<std::size_t>(c) * rows + r] = a[static_cast<std::size_t>(r) * cols + c];
  return t;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, std::span<const T> bias) {
  const ConvGeometry g = conv_geometry(input, weights, bias.size());
  const Shape& xs = input.shape();
  Tensor<T> out = Tensor<T>::empty(Shape{xs.n, g.out_c, g.h, g.w});
  const int hw = g.h * g.w;
  if (hw == 0 || xs.n == 0) return out;

  const int bands = (g.h + g.band_rows - 1) / g.band_rows;
  parallel_for(static_cast<std::size_t>(xs.n) * bands, [&](std::size_t task) {
    const int n = static_cast<int>(task / bands);
    const int y0 = static_cast<int>(task % bands) * g.band_rows;
    const int rows = std::min(g.band_rows, g.h - y0);
    T* dst = out.plane(n, 0) + static_cast<std::size_t>(y0) * g.w;
    if (g.k == 1) {
      detail::gemm_nn(g.out_c, rows * g.w, g.kc, weights.ptr(), g.kc,
                      input.plane(n, 0) + static_cast<std::size_t>(y0) * g.w, hw, dst, hw, false);
    } else {
      std::vector<T> col(static_cast<std::size_t>(g.kc) * rows * g.w);
      im2col3(input.plane(n, 0), g, y0, rows, col.data());
      detail::gemm_nn(g.out_c, rows * g.w, g.kc, weights.ptr(), g.kc, col.data(), rows * g.w, dst,
                      hw, false);
    }
    for (int o = 0; o < g.out_c; ++o) {
      T* row = dst + static_cast<std::size_t>(o) * hw;
      const T b = bias[o];
      for (int i = 0; i < rows * g.w; ++i) row[i] += b;
    }
  });
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                               const Tensor<T>& weights, bool want_input, bool want_params) {
  const ConvGeometry g = conv_geometry(input, weights, static_cast<std::size_t>(weights.shape().n));
  const Shape& xs = input.shape();
  const Shape expected{xs.n, g.out_c, g.h, g.w};
  if (grad_out.shape() != expected) {
    throw ShapeError("conv2d_backward: grad_out " + grad_out.shape().str() +
                     " does not match forward output " + expected.str());
  }
  Conv2dGrads<T> grads;
  const int hw = g.h * g.w;
  const std::size_t wsize = weights.numel();
  if (want_input) grads.input = Tensor<T>(xs);
  std::vector<T> partial;
  if (want_params) partial.assign(static_cast<std::size_t>(xs.n) * wsize, T(0));
  const std::vector<T> wt = transpose(weights.ptr(), g.out_c, g.kc);

  parallel_for(static_cast<std::size_t>(xs.n), [&](std::size_t task) {
    const int n = static_cast<int>(task);
    const T* gout = grad_out.plane(n, 0);
    T* gw = want_params ? partial.data() + task * wsize : nullptr;
    if (g.k == 1) {
      if (want_params) detail::gemm_nt(g.out_c, g.kc, hw, gout, hw, input.plane(n, 0), hw, gw, g.kc, true);
      if (want_input) {
        detail::gemm_nn(g.kc, hw, g.out_c, wt.data(), g.out_c, gout, hw, grads.input.plane(n, 0), hw,
                        false);
      }
      return;
    }
    std::vector<T> col(static_cast<std::size_t>(g.kc) * g.band_rows * g.w);
    for (int y0 = 0; y0 < g.h; y0 += g.band_rows) {
      const int rows = std::min(g.band_rows, g.h - y0);
      const int cols = rows * g.w;
      const T* gband = gout + static_cast<std::size_t>(y0) * g.w;
      if (want_params) {
        im2col3(input.plane(n, 0), g, y0, rows, col.data());
        detail::gemm_nt(g.out_c, g.kc, cols, gband, hw, col.data(), cols, gw, g.kc, true);
      }
      if (want_input) {
        detail::gemm_nn(g.kc, cols, g.out_c, wt.data(), g.out_c, gband, hw, col.data(), cols, false);
        col2im3_add(col.data(), g, y0, rows, grads.input.plane(n, 0));
      }
    }
  });

  if (want_params) {
    grads.weights = Tensor<T>(weights.shape());
    T* dst = grads.weights.ptr();
    for (int n = 0; n < xs.n; ++n) {
      const T* src = partial.data() + static_cast<std::size_t>(n) * wsize;
      for (std::size_t i = 0; i < wsize; ++i) dst[i] += src[i];
    }
    grads.bias.assign(g.out_c, T(0));
    for (int n = 0; n < xs.n; ++n) {
      for (int o = 0; o < g.out_c; ++o) {
        const T* p = grad_out.plane(n, o);
        T s = 0;
        for (int i = 0; i < hw; ++i) s += p[i];
        grads.bias[o] += s;
      }
    }
  }
  return grads;
}

template <typename T>
MaxPoolResult<T> maxpool2x2(const Tensor<T>& input) {
  const Shape& s = input.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ShapeError("maxpool2x2: spatial dims must be even, got " + s.str());
  }
  MaxPoolResult<T> r;
  r.output = Tensor<T>::empty(Shape{s.n, s.c, s.h / 2, s.w / 2});
  r.argmax.resize(r.output.numel());
  const int oh = s.h / 2, ow = s.w / 2;
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++o) {
          const std::size_t base = input.index(n, c, 2 * y, 2 * x);
          const std::size_t cand[4] = {base, base + 1, base + s.w, base + s.w + 1};
          std::size_t best = cand[0];
          for (int k = 1; k < 4; ++k) {
            if (input[cand[k]] > input[best]) best = cand[k];
          }
          r.output[o] = input[best];
          r.argmax[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2x2_backward(const Tensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                              const Shape& input_shape) {
  if (argmax.size() != grad_out.numel()) {
    throw ShapeError("maxpool2x2_backward: grad_out " + grad_out.shape().str() +
                     " does not match saved argmax");
  }
  Tensor<T> gin(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) gin[argmax[i]] += grad_out[i];
  return gin;
}

namespace {

constexpr int kLanes = 8;

// Sum of p[0..n) in double, with independent lanes so the loop vectorizes.
template <typename T>
double plane_sum(const T* p, std::size_t n) {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    for (int l = 0; l < kLanes; ++l) acc[l] += p[i + l];
  double s = 0;
  for (; i < n; ++i) s += p[i];
  for (double a : acc) s += a;
  return s;
}

template <typename T>
double plane_sq_dev(const T* p, std::size_t n, double mean) {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int l = 0; l < kLanes; ++l) {
      const double d = p[i + l] - mean;
      acc[l] += d * d;
    }
  }
  double s = 0;
  for (; i < n; ++i) s += (p[i] - mean) * (p[i] - mean);
  for (double a : acc) s += a;
  return s;
}

template <typename T>
void channel_moments(const Tensor<T>& input, int c, double& mean, double& var) {
  const Shape& s = input.shape();
  const std::size_t hw = s.plane();
  const double count = static_cast<double>(s.n) * hw;
  double sum = 0;
  for (int n = 0; n < s.n; ++n) sum += plane_sum(input.plane(n, c), hw);
  mean = sum / count;
  double sq = 0;
  for (int n = 0; n < s.n; ++n) sq += plane_sq_dev(input.plane(n, c), hw, mean);
  var = sq / count;
}

void check_channel_params(const Shape& s, std::size_t len, const char* what) {
  if (len != static_cast<std::size_t>(s.c)) {
    throw ShapeError(std::string("batchnorm: ") + what + " has " + std::to_string(len) +
                     " entries but input " + s.str() + " has " + std::to_string(s.c) + " channels");
  }
}

}  // namespace

template <typename T>
BatchNormTrainResult<T> batchnorm_train(const Tensor<T>& input, std::span<const T> gamma,
                                        std::span<const T> beta, std::span<T> running_mean,
                                        std::span<T> running_var, const BatchNormOptions& opt) {
  const Shape& s = input.shape();
  check_channel_params(s, gamma.size(), "gamma");
  check_channel_params(s, beta.size(), "beta");
  check_channel_params(s, running_mean.size(), "running_mean");
  check_channel_params(s, running_var.size(), "running_var");
  BatchNormTrainResult<T> r;
  r.output = Tensor<T>::empty(s);
  r.normalized = Tensor<T>::empty(s);
  r.inv_std.assign(s.c, 0.0);
  const std::size_t hw = s.plane();
  const double count = static_cast<double>(s.n) * hw;
  if (count == 0) return r;
  for (int c = 0; c < s.c; ++c) {
    double mean = 0, var = 0;
    channel_moments(input, c, mean, var);
    const double inv_std = 1.0 / std::sqrt(var + opt.eps);
    r.inv_std[c] = inv_std;
    const double gm = gamma[c], bt = beta[c];
    for (int n = 0; n < s.n; ++n) {
      const T* p = input.plane(n, c);
      T* xh = r.normalized.plane(n, c);
      T* y = r.output.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        const T v = static_cast<T>((p[i] - mean) * inv_std);
        xh[i] = v;
        y[i] = static_cast<T>(gm * v + bt);
      }
    }
    const double unbiased = count > 1 ? var * count / (count - 1) : var;
    running_mean[c] = static_cast<T>((1 - opt.momentum) * running_mean[c] + opt.momentum * mean);
    running_var[c] = static_cast<T>((1 - opt.momentum) * running_var[c] + opt.momentum * unbiased);
  }
  return r;
}

template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& input, std::span<const T> gamma, std::span<const T> beta,
                         std::span<const T> running_mean, std::span<const T> running_var,
                         const BatchNormOptions& opt) {
  const Shape& s = input.shape();
  check_channel_params(s, gamma.size(), "gamma");
  check_channel_params(s, beta.size(), "beta");
  check_channel_params(s, running_mean.size(), "running_mean");
  check_channel_params(s, running_var.size(), "running_var");
  Tensor<T> out(s);
  const std::size_t hw = s.plane();
  for (int c = 0; c < s.c; ++c) {
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + opt.eps);
    const T scale = static_cast<T>(gamma[c] * inv_std);
    const T shift = static_cast<T>(beta[c] - running_mean[c] * gamma[c] * inv_std);
    for (int n = 0; n < s.n; ++n) {
      const T* p = input.plane(n, c);
      T* y = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) y[i] = scale * p[i] + shift;
    }
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_train_backward(const Tensor<T>& grad_out, const Tensor<T>& normalized,
                                           const std::vector<double>& inv_std,
                                           std::span<const T> gamma) {
  const Shape& s = normalized.shape();
  require_same_shape(grad_out.shape(), s, "batchnorm_backward");
  BatchNormGrads<T> g;
  g.input = Tensor<T>(s);
  g.gamma.assign(s.c, T(0));
  g.beta.assign(s.c, T(0));
  const std::size_t hw = s.plane();
  const double count = static_cast<double>(s.n) * hw;
  if (count == 0) return g;
  for (int c = 0; c < s.c; ++c) {
    double sum_g = 0, sum_gx = 0;
    for (int n = 0; n < s.n; ++n) {
      const T* go = grad_out.plane(n, c);
      const T* xh = normalized.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        sum_g += go[i];
        sum_gx += static_cast<double>(go[i]) * xh[i];
      }
    }
    g.gamma[c] = static_cast<T>(sum_gx);
    g.beta[c] = static_cast<T>(sum_g);
    const double k = gamma[c] * inv_std[c] / count;
    for (int n = 0; n < s.n; ++n) {
      const T* go = grad_out.plane(n, c);
      const T* xh = normalized.plane(n, c);
      T* gi = g.input.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        gi[i] = static_cast<T>(k * (count * go[i] - sum_g - xh[i] * sum_gx));
      }
    }
  }
  return g;
}

template <typename T>
BatchNormGrads<T> batchnorm_eval_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                          std::span<const T> gamma,
                                          std::span<const T> running_mean,
                                          std::span<const T> running_var,
                                          const BatchNormOptions& opt) {
  const Shape& s = input.shape();
  require_same_shape(grad_out.shape(), s, "batchnorm_backward");
  BatchNormGrads<T> g;
  g.input = Tensor<T>(s);
  g.gamma.assign(s.c, T(0));
  g.beta.assign(s.c, T(0));
  const std::size_t hw = s.plane();
  for (int c = 0; c < s.c; ++c) {
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + opt.eps);
    double sum_g = 0, sum_gx = 0;
    for (int n = 0; n < s.n; ++n) {
      const T* go = grad_out.plane(n, c);
      const T* x = input.plane(n, c);
      T* gi = g.input.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        sum_g += go[i];
        sum_gx += static_cast<double>(go[i]) * (x[i] - running_mean[c]) * inv_std;
        gi[i] = static_cast<T>(go[i] * gamma[c] * inv_std);
      }
    }
    g.gamma[c] = static_cast<T>(sum_gx);
    g.beta[c] = static_cast<T>(sum_g);
  }
  return g;
}

template <typename T>
BatchNormReluTrainResult<T> batchnorm_relu_train(const Tensor<T>& input, std::span<const T> gamma,
                                                 std::span<const T> beta, std::span<T> running_mean,
                                                 std::span<T> running_var,
                                                 const BatchNormOptions& opt) {
  const Shape& s = input.shape();
  check_channel_params(s, gamma.size(), "gamma");
  check_channel_params(s, beta.size(), "beta");
  check_channel_params(s, running_mean.size(), "running_mean");
  check_channel_params(s, running_var.size(), "running_var");
  BatchNormReluTrainResult<T> r;
  r.output = Tensor<T>::empty(s);
  r.mean.assign(s.c, 0.0);
  r.inv_std.assign(s.c, 0.0);
  const std::size_t hw = s.plane();
  const double count = static_cast<double>(s.n) * hw;
  if (count == 0) return r;
  for (int c = 0; c < s.c; ++c) {
    double mean = 0, var = 0;
    channel_moments(input, c, mean, var);
    const double inv_std = 1.0 / std::sqrt(var + opt.eps);
    r.mean[c] = mean;
    r.inv_std[c] = inv_std;
    const T scale = static_cast<T>(gamma[c] * inv_std);
    const T shift = static_cast<T>(beta[c] - gamma[c] * inv_std * mean);
    for (int n = 0; n < s.n; ++n) {
      const T* p = input.plane(n, c);
      T* y = r.output.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        const T v = scale * p[i] + shift;
        y[i] = v > T(0) ? v : T(0);
      }
    }
    const double unbiased = count > 1 ? var * count / (count - 1) : var;
    running_mean[c] = static_cast<T>((1 - opt.momentum) * running_mean[c] + opt.momentum * mean);
    running_var[c] = static_cast<T>((1 - opt.momentum) * running_var[c] + opt.momentum * unbiased);
  }
  return r;
}

template <typename T>
BatchNormGrads<T> batchnorm_relu_train_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                                const Tensor<T>& output,
                                                const std::vector<double>& mean,
                                                const std::vector<double>& inv_std,
                                                std::span<const T> gamma) {
  const Shape& s = input.shape();
  require_same_shape(grad_out.shape(), s, "batchnorm_relu_backward");
  require_same_shape(output.shape(), s, "batchnorm_relu_backward");
  BatchNormGrads<T> g;
  g.input = Tensor<T>::empty(s);
  g.gamma.assign(s.c, T(0));
  g.beta.assign(s.c, T(0));
  const std::size_t hw = s.plane();
  const double count = static_cast<double>(s.n) * hw;
  if (count == 0) return g;
  for (int c = 0; c < s.c; ++c) {
    const T mu = static_cast<T>(mean[c]);
    const T is = static_cast<T>(inv_std[c]);
    // Masked gradient goes into g.input first, then is rewritten in place.
    double sum_g = 0, sum_gx = 0;
    for (int n = 0; n < s.n; ++n) {
      const T* go = grad_out.plane(n, c);
      const T* x = input.plane(n, c);
      const T* y = output.plane(n, c);
      T* gm = g.input.plane(n, c);
      double ag[kLanes] = {}, agx[kLanes] = {};
      std::size_t i = 0;
      for (; i + kLanes <= hw; i += kLanes) {
        for (int l = 0; l < kLanes; ++l) {
          const T v = y[i + l] > T(0) ? go[i + l] : T(0);
          gm[i + l] = v;
          ag[l] += v;
          agx[l] += static_cast<double>(v * ((x[i + l] - mu) * is));
        }
      }
      for (; i < hw; ++i) {
        const T v = y[i] > T(0) ? go[i] : T(0);
        gm[i] = v;
        sum_g += v;
        sum_gx += static_cast<double>(v * ((x[i] - mu) * is));
      }
      for (int l = 0; l < kLanes; ++l) {
        sum_g += ag[l];
        sum_gx += agx[l];
      }
    }
    g.gamma[c] = static_cast<T>(sum_gx);
    g.beta[c] = static_cast<T>(sum_g);
    const T k = static_cast<T>(gamma[c] * inv_std[c]);
    const T mg = static_cast<T>(sum_g / count);
    const T mgx = static_cast<T>(sum_gx / count);
    for (int n = 0; n < s.n; ++n) {
      const T* x = input.plane(n, c);
      T* gi = g.input.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) gi[i] = k * (gi[i] - mg - (x[i] - mu) * is * mgx);
    }
  }
  return g;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out = Tensor<T>::empty(input.shape());
  const std::size_t n = input.numel();
  const T* x = input.ptr();
  T* y = out.ptr();
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& output) {
  require_same_shape(grad_out.shape(), output.shape(), "relu_backward");
  Tensor<T> gin = Tensor<T>::empty(output.shape());
  const std::size_t n = output.numel();
  const T* y = output.ptr();
  const T* g = grad_out.ptr();
  T* d = gin.ptr();
  for (std::size_t i = 0; i < n; ++i) d[i] = y[i] > T(0) ? g[i] : T(0);
  return gin;
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
  Tensor<T> out = Tensor<T>::empty(input.shape());
  for (std::size_t i = 0; i < input.numel(); ++i) out[i] = stable_sigmoid(input[i]);
  return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_out, const Tensor<T>& output) {
  require_same_shape(grad_out.shape(), output.shape(), "sigmoid_backward");
  Tensor<T> gin(output.shape());
  for (std::size_t i = 0; i < output.numel(); ++i) {
    gin[i] = grad_out[i] * output[i] * (T(1) - output[i]);
  }
  return gin;
}

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& input) {
  const Shape& s = input.shape();
  Tensor<T> out = Tensor<T>::empty(Shape{s.n, s.c, s.h * 2, s.w * 2});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* src = input.plane(n, c);
      T* dst = out.plane(n, c);
      const int ow = s.w * 2;
      for (int y = 0; y < s.h; ++y) {
        T* r0 = dst + static_cast<std::size_t>(2 * y) * ow;
        for (int x = 0; x < s.w; ++x) {
          const T v = src[static_cast<std::size_t>(y) * s.w + x];
          r0[2 * x] = v;
          r0[2 * x + 1] = v;
        }
        std::memcpy(r0 + ow, r0, sizeof(T) * ow);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> upsample2x_backward(const Tensor<T>& grad_out) {
  const Shape& s = grad_out.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ShapeError("upsample2x_backward: odd gradient shape " + s.str());
  }
  Tensor<T> gin(Shape{s.n, s.c, s.h / 2, s.w / 2});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < s.h / 2; ++y) {
        for (int x = 0; x < s.w / 2; ++x) {
          gin.at(n, c, y, x) = grad_out.at(n, c, 2 * y, 2 * x) + grad_out.at(n, c, 2 * y, 2 * x + 1) +
                               grad_out.at(n, c, 2 * y + 1, 2 * x) +
                               grad_out.at(n, c, 2 * y + 1, 2 * x + 1);
        }
      }
    }
  }
  return gin;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out = Tensor<T>::empty(a.shape());
  const T* pa = a.ptr();
  const T* pb = b.ptr();
  T* d = out.ptr();
  for (std::size_t i = 0; i < a.numel(); ++i) d[i] = pa[i] + pb[i];
  return out;
}

#define FNB_INSTANTIATE_KERNELS(T)                                                                 \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, std::span<const T>);           \
  template Conv2dGrads<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                             bool, bool);                                          \
  template MaxPoolResult<T> maxpool2x2<T>(const Tensor<T>&);                                       \
  template Tensor<T> maxpool2x2_backward<T>(const Tensor<T>&, const std::vector<std::uint32_t>&,  \
                                            const Shape&);                                         \
  template BatchNormTrainResult<T> batchnorm_train<T>(const Tensor<T>&, std::span<const T>,        \
                                                      std::span<const T>, std::span<T>,            \
                                                      std::span<T>, const BatchNormOptions&);      \
  template Tensor<T> batchnorm_eval<T>(const Tensor<T>&, std::span<const T>, std::span<const T>,  \
                                       std::span<const T>, std::span<const T>,                     \
                                       const BatchNormOptions&);                                   \
  template BatchNormGrads<T> batchnorm_train_backward<T>(const Tensor<T>&, const Tensor<T>&,       \
                                                         const std::vector<double>&,               \
                                                         std::span<const T>);                      \
  template BatchNormGrads<T> batchnorm_eval_backward<T>(const Tensor<T>&, const Tensor<T>&,        \
                                                        std::span<const T>, std::span<const T>,    \
                                                        std::span<const T>,                        \
                                                        const BatchNormOptions&);                  \
  template BatchNormReluTrainResult<T> batchnorm_relu_train<T>(                                    \
      const Tensor<T>&, std::span<const T>, std::span<const T>, std::span<T>, std::span<T>,         \
      const BatchNormOptions&);                                                                    \
  template BatchNormGrads<T> batchnorm_relu_train_backward<T>(                                     \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const std::vector<double>&,            \
      const std::vector<double>&, std::span<const T>);                                             \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                    \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template T stable_sigmoid<T>(T);                                                                 \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                                 \
  template Tensor<T> sigmoid_backward<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> upsample2x<T>(const Tensor<T>&);                                              \
  template Tensor<T> upsample2x_backward<T>(const Tensor<T>&);                                     \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);

FNB_INSTANTIATE_KERNELS(float)
FNB_INSTANTIATE_KERNELS(double)

}  // namespace fnb::kernels
