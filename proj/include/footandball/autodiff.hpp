#pragma once

// Reverse-mode differentiation over whole-tensor ops. A Tape records each op
// executed on Vars that require gradients; backward() replays the records in
// reverse order exactly once. A non-recording tape gives a plain forward pass
// whose intermediates are freed as soon as their Vars go out of scope.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "footandball/kernels.hpp"
#include "footandball/tensor.hpp"

namespace fnb {

enum class Mode { kTrain, kEval };

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool has_grad = false;
  bool requires_grad = false;
  bool is_leaf = true;

  void accumulate(Tensor<T> g);
};

template <typename T>
class Tape;

/// Handle to a value on a tape (or a detached value). Cheap to copy.
template <typename T>
class Var {
 public:
  Var() = default;

  const Tensor<T>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && node_->has_grad; }
  /// Gradient accumulated by the last backward(); throws TapeError if none.
  const Tensor<T>& grad() const;
  bool valid() const { return static_cast<bool>(node_); }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  friend class Tape<T>;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}
  std::shared_ptr<Node<T>> node_;
};

/// Receives input gradients from a backward closure.
template <typename T>
class GradSink {
 public:
  explicit GradSink(const std::vector<std::shared_ptr<Node<T>>>& inputs) : inputs_(inputs) {}
  bool wants(std::size_t i) const { return inputs_[i]->requires_grad; }
  void add(std::size_t i, Tensor<T> g) {
    if (wants(i)) inputs_[i]->accumulate(std::move(g));
  }

 private:
  const std::vector<std::shared_ptr<Node<T>>>& inputs_;
};

template <typename T>
using BackwardFn =
    std::function<void(const Tensor<T>& grad_out, const Tensor<T>& output, GradSink<T>& sink)>;

template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  /// Leaf value owned by the tape graph. Leaves keep their gradient after
  /// backward().
  Var<T> leaf(Tensor<T> value, bool requires_grad = false);

  /// Creates an op output. The op is recorded only when the tape records and
  /// at least one input requires a gradient; `backward` may then be invoked
  /// once with the output gradient.
  Var<T> emit(std::string_view op, Tensor<T> value, const std::vector<Var<T>>& inputs,
              BackwardFn<T> backward);

  /// Seeds d(loss)/d(loss) = 1 and replays the tape. `loss` must be a
  /// single-element Var produced on this tape. A tape can be replayed once.
  void backward(const Var<T>& loss);

  std::size_t size() const { return records_.size(); }
  /// Records whose closure ran during the last backward().
  std::size_t visited() const { return visited_; }
  std::vector<std::string> op_names() const;

  /// Structural fingerprint of the discrete choices made during the forward
  /// pass (ReLU masks, max-pool winners). Only collected when enabled; used by
  /// finite-difference checks to detect perturbations that cross a kink.
  void set_track_kinks(bool on) { track_kinks_ = on; }
  bool tracking_kinks() const { return track_kinks_; }
  void mix_signature(std::uint64_t h) { signature_ = (signature_ ^ h) * 0x100000001b3ULL + 0x9e37; }
  std::uint64_t signature() const { return signature_; }

 private:
  struct Record {
    std::string op;
    std::vector<std::shared_ptr<Node<T>>> inputs;
    std::shared_ptr<Node<T>> output;
    BackwardFn<T> backward;
  };

  bool recording_;
  bool replayed_ = false;
  bool track_kinks_ = false;
  std::uint64_t signature_ = 0xcbf29ce484222325ULL;
  std::size_t visited_ = 0;
  std::vector<Record> records_;
};

/// Label of one confidence-map cell for the binary cross-entropy.
struct CellLabel {
  std::size_t index;  // flat NCHW index into the logit tensor
  bool positive;
};

/// Regression target of one bounding-box cell: channels 0..3 at (n, y, x).
struct RegressionCell {
  int n;
  int y;
  int x;
  std::array<double, 4> target;
};

namespace ops {

template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& weights, const Var<T>& bias);
template <typename T>
Var<T> maxpool2x2(Tape<T>& tape, const Var<T>& x);
/// Train mode updates `running_mean` / `running_var` in place.
template <typename T>
Var<T> batchnorm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                 std::span<T> running_mean, std::span<T> running_var, Mode mode,
                 const kernels::BatchNormOptions& opt = {});
/// relu(batchnorm(x)); fused single op in train mode.
template <typename T>
Var<T> batchnorm_relu(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                      std::span<T> running_mean, std::span<T> running_var, Mode mode,
                      const kernels::BatchNormOptions& opt = {});
template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x);
template <typename T>
Var<T> sigmoid(Tape<T>& tape, const Var<T>& x);
template <typename T>
Var<T> upsample2x(Tape<T>& tape, const Var<T>& x);
template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b);
/// Sum of all elements, as a single-element Var.
template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x);

/// -sum_{pos} log sigmoid(z) - sum_{neg} log(1 - sigmoid(z)), evaluated from
/// the logits in log-space.
template <typename T>
Var<T> bce_with_logits(Tape<T>& tape, const Var<T>& logits, const std::vector<CellLabel>& cells);

/// Sum over cells and the four channels of smooth-L1(pred - target).
template <typename T>
Var<T> smooth_l1(Tape<T>& tape, const Var<T>& pred, const std::vector<RegressionCell>& cells);

/// sum_i coeffs[i] * terms[i] over single-element Vars.
template <typename T>
Var<T> weighted_sum(Tape<T>& tape, const std::vector<Var<T>>& terms, const std::vector<double>& coeffs);

}  // namespace ops

/// log(1 + exp(x)) without overflow.
double softplus(double x);
/// Per-coordinate smooth-L1: 0.5 d^2 if |d| < 1 else |d| - 0.5.
double smooth_l1_value(double d);

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace fnb
