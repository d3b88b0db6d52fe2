#pragma once

// FootAndBall network: five bottom-up convolutional blocks, a top-down
// feature-pyramid path with 1x1 lateral reductions, and three heads (ball
// confidence at stride 4, player confidence and player boxes at stride 16).

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "footandball/autodiff.hpp"

namespace fnb {

inline constexpr int kBallStride = 4;
inline constexpr int kPlayerStride = 16;
inline constexpr int kInputAlignment = 32;

struct ModelConfig {
  int input_channels = 3;
  int lateral_channels = 32;
  int head_hidden_channels = 32;
  bool topdown_enabled = true;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class ParamKind { kTrainable, kBuffer };

struct ParamSpec {
  std::string name;
  int rank;  // 4 for conv weights, 1 for per-channel vectors
  Shape shape;
  ParamKind kind;
  int fan_in;  // conv weights only
};

/// Parameter layout in deterministic topological order.
std::vector<ParamSpec> parameter_layout(const ModelConfig& config);

/// Trainable scalar count implied by the layout.
std::size_t count_trainable(const ModelConfig& config);

/// Trainable scalar count of the default configuration.
inline constexpr std::size_t kDefaultParameterCount = 178246;

template <typename T>
struct NamedTensor {
  std::string name;
  int rank;
  ParamKind kind;
  Tensor<T> tensor;
};

/// Ordered, named parameter collection (trainable weights plus batch-norm
/// running statistics).
template <typename T>
class NetworkWeights {
 public:
  NetworkWeights() = default;
  NetworkWeights(ModelConfig config, std::vector<NamedTensor<T>> params);

  const ModelConfig& config() const { return config_; }
  std::vector<NamedTensor<T>>& params() { return params_; }
  const std::vector<NamedTensor<T>>& params() const { return params_; }

  std::size_t index_of(std::string_view name) const;
  Tensor<T>& get(std::string_view name) { return params_[index_of(name)].tensor; }
  const Tensor<T>& get(std::string_view name) const { return params_[index_of(name)].tensor; }

  std::size_t trainable_count() const;

  template <typename U>
  NetworkWeights<U> cast() const {
    std::vector<NamedTensor<U>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back({p.name, p.rank, p.kind, p.tensor.template cast<U>()});
    return NetworkWeights<U>(config_, std::move(out));
  }

  bool operator==(const NetworkWeights&) const;

 private:
  ModelConfig config_;
  std::vector<NamedTensor<T>> params_;
};

/// Conv weights ~ N(0, 2 / fan_in), biases 0, batch-norm gamma 1, beta 0,
/// running mean 0, running var 1. Deterministic per seed.
template <typename T>
NetworkWeights<T> build_network(const ModelConfig& config, std::uint64_t seed);

template <typename T>
struct NetworkOutputs {
  Var<T> ball_logits;   // (n, 1, H/4, W/4)
  Var<T> ball_map;      // sigmoid(ball_logits)
  Var<T> player_logits; // (n, 1, H/16, W/16)
  Var<T> player_map;
  Var<T> bbox;          // (n, 4, H/16, W/16)
};

/// One Var per entry of weights.params(); buffers get detached leaves.
template <typename T>
std::vector<Var<T>> bind_parameters(Tape<T>& tape, const NetworkWeights<T>& weights, bool requires_grad);

/// Single forward pass. `params` must come from bind_parameters (or be
/// aligned with weights.params()); in train mode the running statistics in
/// `weights` are updated with `bn.momentum`.
template <typename T>
NetworkOutputs<T> forward(Tape<T>& tape, NetworkWeights<T>& weights, const std::vector<Var<T>>& params,
                          const Var<T>& input, Mode mode, const kernels::BatchNormOptions& bn = {});

/// Tape-free inference convenience.
template <typename T>
NetworkOutputs<T> infer(NetworkWeights<T>& weights, const Tensor<T>& input);

/// Throws ShapeError unless H and W are positive multiples of 32.
void check_input_shape(const Shape& input, const ModelConfig& config);

// Weight file: "FNBW", u32 version, config block, u64 config digest,
// u32 tensor count, then per tensor: u32 name length, UTF-8 name, u32 rank,
// rank x u32 dims, raw little-endian float32 data.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

template <typename T>
std::size_t save_weights(const NetworkWeights<T>& weights, const std::filesystem::path& path);
template <typename T>
std::vector<std::uint8_t> serialize_weights(const NetworkWeights<T>& weights);
template <typename T>
NetworkWeights<T> load_weights(const std::filesystem::path& path);
template <typename T>
NetworkWeights<T> deserialize_weights(const std::vector<std::uint8_t>& bytes);

std::uint64_t config_digest(const ModelConfig& config);

}  // namespace fnb
