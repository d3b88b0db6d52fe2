#pragma once

// Tape-free numeric kernels for the layer types used by the detector. Every
// forward has a matching backward; the autodiff layer (autodiff.hpp) wires
// them into a tape. All kernels allocate fresh outputs and never modify their
// inputs, except batchnorm_train which updates the running statistics passed
// by reference.

#include <cstdint>
#include <vector>

#include "footandball/tensor.hpp"

namespace fnb::kernels {

/// 'Same'-padded, stride-1 convolution. `weights` has shape
/// (out_c, in_c, k, k) with k in {1, 3}; `bias` has out_c entries.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, std::span<const T> bias);

template <typename T>
struct Conv2dGrads {
  Tensor<T> input;
  Tensor<T> weights;
  std::vector<T> bias;
};

/// Gradients of conv2d. Pieces whose flag is false are left empty.
template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                               const Tensor<T>& weights, bool want_input, bool want_params);

template <typename T>
struct MaxPoolResult {
  Tensor<T> output;
  /// Flat input index of the selected element for every output element.
  std::vector<std::uint32_t> argmax;
};

/// 2x2 / stride-2 max pooling. Ties pick the first element in row-major order.
template <typename T>
MaxPoolResult<T> maxpool2x2(const Tensor<T>& input);

template <typename T>
Tensor<T> maxpool2x2_backward(const Tensor<T>& grad_out, const std::vector<std::uint32_t>& argmax,
                              const Shape& input_shape);

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

template <typename T>
struct BatchNormTrainResult {
  Tensor<T> output;
  Tensor<T> normalized;         // x-hat
  std::vector<double> inv_std;  // per channel
};

/// Normalizes with per-channel batch statistics over (n, h, w) and folds them
/// into the running statistics: r <- (1 - m) r + m s. The running variance
/// uses the unbiased batch variance.
template <typename T>
BatchNormTrainResult<T> batchnorm_train(const Tensor<T>& input, std::span<const T> gamma,
                                        std::span<const T> beta, std::span<T> running_mean,
                                        std::span<T> running_var, const BatchNormOptions& opt);

template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& input, std::span<const T> gamma, std::span<const T> beta,
                         std::span<const T> running_mean, std::span<const T> running_var,
                         const BatchNormOptions& opt);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  std::vector<T> gamma;
  std::vector<T> beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_train_backward(const Tensor<T>& grad_out, const Tensor<T>& normalized,
                                           const std::vector<double>& inv_std,
                                           std::span<const T> gamma);

template <typename T>
BatchNormGrads<T> batchnorm_eval_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                          std::span<const T> gamma,
                                          std::span<const T> running_mean,
                                          std::span<const T> running_var,
                                          const BatchNormOptions& opt);

template <typename T>
struct BatchNormReluTrainResult {
  Tensor<T> output;
  std::vector<double> mean;     // per channel batch mean
  std::vector<double> inv_std;  // per channel
};

/// relu(batchnorm_train(x)) in one pass. The backward recomputes x-hat from
/// the saved input instead of keeping it.
template <typename T>
BatchNormReluTrainResult<T> batchnorm_relu_train(const Tensor<T>& input, std::span<const T> gamma,
                                                 std::span<const T> beta, std::span<T> running_mean,
                                                 std::span<T> running_var,
                                                 const BatchNormOptions& opt);

template <typename T>
BatchNormGrads<T> batchnorm_relu_train_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                                                const Tensor<T>& output,
                                                const std::vector<double>& mean,
                                                const std::vector<double>& inv_std,
                                                std::span<const T> gamma);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);
/// Uses the forward output as the mask (gradient 0 where output == 0).
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& output);

template <typename T>
T stable_sigmoid(T x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input);
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_out, const Tensor<T>& output);

/// Nearest-neighbour x2: every pixel becomes a 2x2 block.
template <typename T>
Tensor<T> upsample2x(const Tensor<T>& input);
template <typename T>
Tensor<T> upsample2x_backward(const Tensor<T>& grad_out);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace fnb::kernels
