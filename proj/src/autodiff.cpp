#include "footandball/autodiff.hpp"

#include <cmath>

namespace fnb {

template <typename T>
void Node<T>::accumulate(Tensor<T> g) {
  require_same_shape(g.shape(), value.shape(), "gradient accumulation");
  if (!has_grad) {
    grad = std::move(g);
    has_grad = true;
    return;
  }
  T* dst = grad.ptr();
  const T* src = g.ptr();
  for (std::size_t i = 0; i < g.numel(); ++i) dst[i] += src[i];
}

template <typename T>
const Tensor<T>& Var<T>::grad() const {
  if (!node_ || !node_->has_grad) throw TapeError("no gradient recorded for this value");
  return node_->grad;
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->is_leaf = true;
  return Var<T>(std::move(node));
}

template <typename T>
Var<T> Tape<T>::emit(std::string_view op, Tensor<T> value, const std::vector<Var<T>>& inputs,
                     BackwardFn<T> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->is_leaf = false;
  bool needs = false;
  for (const auto& v : inputs) {
    if (!v.valid()) throw TapeError(std::string(op) + ": undefined input");
    needs = needs || v.requires_grad();
  }
  if (recording_ && needs) {
    if (replayed_) throw TapeError(std::string(op) + ": tape was already replayed");
    node->requires_grad = true;
    Record rec;
    rec.op = std::string(op);
    rec.inputs.reserve(inputs.size());
    for (const auto& v : inputs) rec.inputs.push_back(v.node());
    rec.output = node;
    rec.backward = std::move(backward);
    records_.push_back(std::move(rec));
  }
  return Var<T>(std::move(node));
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (!loss.valid()) throw TapeError("backward: undefined loss");
  if (loss.value().numel() != 1) {
    throw TapeError("backward: loss must be a single element, got " + loss.shape().str());
  }
  if (replayed_) throw TapeError("backward: tape was already replayed");
  replayed_ = true;
  visited_ = 0;
  if (!loss.requires_grad()) return;
  loss.node()->accumulate(Tensor<T>(loss.shape(), T(1)));
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    ++visited_;
    Node<T>& out = *it->output;
    if (!out.has_grad) continue;
    if (!it->backward) throw TapeError(it->op + ": missing saved state for backward");
    GradSink<T> sink(it->inputs);
    it->backward(out.grad, out.value, sink);
    // Intermediate gradients are not needed once propagated.
    if (!out.is_leaf) {
      out.grad = Tensor<T>();
      out.has_grad = false;
    }
    it->backward = nullptr;
  }
}

template <typename T>
std::vector<std::string> Tape<T>::op_names() const {
  std::vector<std::string> names;
  names.reserve(records_.size());
  for (const auto& r : records_) names.push_back(r.op);
  return names;
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double smooth_l1_value(double d) {
  const double a = std::fabs(d);
  return a < 1.0 ? 0.5 * d * d : a - 0.5;
}

namespace ops {
namespace {

std::uint64_t hash_bytes(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) h = (h ^ p[i]) * 0x100000001b3ULL;
  return h;
}

template <typename T>
std::span<const T> as_vector(const Var<T>& v) {
  return v.value().data();
}

}  // namespace

template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& weights, const Var<T>& bias) {
  Tensor<T> out = kernels::conv2d(x.value(), weights.value(), as_vector(bias));
  auto xn = x.node();
  auto wn = weights.node();
  return tape.emit("conv2d", std::move(out), {x, weights, bias},
                   [xn, wn](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                     const bool params = sink.wants(1) || sink.wants(2);
                     auto grads = kernels::conv2d_backward(g, xn->value, wn->value, sink.wants(0), params);
                     if (sink.wants(0)) sink.add(0, std::move(grads.input));
                     if (sink.wants(1)) sink.add(1, std::move(grads.weights));
                     if (sink.wants(2)) {
                       const int out_c = static_cast<int>(grads.bias.size());
                       sink.add(2, Tensor<T>(Shape{1, out_c, 1, 1}, std::move(grads.bias)));
                     }
                   });
}

template <typename T>
Var<T> maxpool2x2(Tape<T>& tape, const Var<T>& x) {
  auto r = kernels::maxpool2x2(x.value());
  if (tape.tracking_kinks()) {
    tape.mix_signature(hash_bytes(r.argmax.data(), r.argmax.size() * sizeof(std::uint32_t)));
  }
  const Shape in_shape = x.shape();
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(std::move(r.argmax));
  return tape.emit("maxpool2x2", std::move(r.output), {x},
                   [argmax, in_shape](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                     sink.add(0, kernels::maxpool2x2_backward(g, *argmax, in_shape));
                   });
}

template <typename T>
Var<T> batchnorm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                 std::span<T> running_mean, std::span<T> running_var, Mode mode,
                 const kernels::BatchNormOptions& opt) {
  auto to_tensor = [](std::vector<T> v) {
    const int c = static_cast<int>(v.size());
    return Tensor<T>(Shape{1, c, 1, 1}, std::move(v));
  };
  auto gn = gamma.node();
  if (mode == Mode::kTrain) {
    auto r = kernels::batchnorm_train(x.value(), as_vector(gamma), as_vector(beta), running_mean,
                                      running_var, opt);
    auto normalized = std::make_shared<Tensor<T>>(std::move(r.normalized));
    auto inv_std = std::make_shared<std::vector<double>>(std::move(r.inv_std));
    return tape.emit("batchnorm", std::move(r.output), {x, gamma, beta},
                     [normalized, inv_std, gn, to_tensor](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                       auto grads = kernels::batchnorm_train_backward<T>(g, *normalized, *inv_std,
                                                                      std::span<const T>(gn->value.data()));
                       sink.add(0, std::move(grads.input));
                       if (sink.wants(1)) sink.add(1, to_tensor(std::move(grads.gamma)));
                       if (sink.wants(2)) sink.add(2, to_tensor(std::move(grads.beta)));
                     });
  }
  Tensor<T> out = kernels::batchnorm_eval(x.value(), as_vector(gamma), as_vector(beta),
                                          std::span<const T>(running_mean),
                                          std::span<const T>(running_var), opt);
  auto xn = x.node();
  auto mean = std::make_shared<std::vector<T>>(running_mean.begin(), running_mean.end());
  auto var = std::make_shared<std::vector<T>>(running_var.begin(), running_var.end());
  return tape.emit("batchnorm", std::move(out), {x, gamma, beta},
                   [xn, gn, mean, var, opt, to_tensor](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                     auto grads = kernels::batchnorm_eval_backward(
                         g, xn->value, std::span<const T>(gn->value.data()),
                         std::span<const T>(*mean), std::span<const T>(*var), opt);
                     sink.add(0, std::move(grads.input));
                     if (sink.wants(1)) sink.add(1, to_tensor(std::move(grads.gamma)));
                     if (sink.wants(2)) sink.add(2, to_tensor(std::move(grads.beta)));
                   });
}

template <typename T>
Var<T> batchnorm_relu(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                      std::span<T> running_mean, std::span<T> running_var, Mode mode,
                      const kernels::BatchNormOptions& opt) {
  if (mode != Mode::kTrain) {
    return relu(tape, batchnorm(tape, x, gamma, beta, running_mean, running_var, mode, opt));
  }
  auto r = kernels::batchnorm_relu_train(x.value(), as_vector(gamma), as_vector(beta), running_mean,
                                         running_var, opt);
  if (tape.tracking_kinks()) {
    std::vector<unsigned char> mask(r.output.numel());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = r.output[i] > T(0);
    tape.mix_signature(hash_bytes(mask.data(), mask.size()));
  }
  auto xn = x.node();
  auto gn = gamma.node();
  auto mean = std::make_shared<std::vector<double>>(std::move(r.mean));
  auto inv_std = std::make_shared<std::vector<double>>(std::move(r.inv_std));
  return tape.emit("batchnorm_relu", std::move(r.output), {x, gamma, beta},
                   [xn, gn, mean, inv_std](const Tensor<T>& g, const Tensor<T>& y, GradSink<T>& sink) {
                     auto grads = kernels::batchnorm_relu_train_backward<T>(
                         g, xn->value, y, *mean, *inv_std, std::span<const T>(gn->value.data()));
                     sink.add(0, std::move(grads.input));
                     const int c = static_cast<int>(grads.gamma.size());
                     if (sink.wants(1)) sink.add(1, Tensor<T>(Shape{1, c, 1, 1}, std::move(grads.gamma)));
                     if (sink.wants(2)) sink.add(2, Tensor<T>(Shape{1, c, 1, 1}, std::move(grads.beta)));
                   });
}

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x) {
  Tensor<T> out = kernels::relu(x.value());
  if (tape.tracking_kinks()) {
    std::vector<unsigned char> mask(out.numel());
    for (std::size_t i = 0; i < out.numel(); ++i) mask[i] = x.value()[i] > T(0);
    tape.mix_signature(hash_bytes(mask.data(), mask.size()));
  }
  return tape.emit("relu", std::move(out), {x},
                   [](const Tensor<T>& g, const Tensor<T>& y, GradSink<T>& sink) {
                     sink.add(0, kernels::relu_backward(g, y));
                   });
}

template <typename T>
Var<T> sigmoid(Tape<T>& tape, const Var<T>& x) {
  Tensor<T> out = kernels::sigmoid(x.value());
  return tape.emit("sigmoid", std::move(out), {x},
                   [](const Tensor<T>& g, const Tensor<T>& y, GradSink<T>& sink) {
                     sink.add(0, kernels::sigmoid_backward(g, y));
                   });
}

template <typename T>
Var<T> upsample2x(Tape<T>& tape, const Var<T>& x) {
  return tape.emit("upsample2x", kernels::upsample2x(x.value()), {x},
                   [](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                     sink.add(0, kernels::upsample2x_backward(g));
                   });
}

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  return tape.emit("add", kernels::add(a.value(), b.value()), {a, b},
                   [](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                     sink.add(0, g);
                     sink.add(1, g);
                   });
}

template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x) {
  double s = 0;
  for (T v : x.value().data()) s += v;
  const Shape shape = x.shape();
  return tape.emit("sum", Tensor<T>::scalar(static_cast<T>(s)), {x},
                   [shape](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                     sink.add(0, Tensor<T>(shape, g[0]));
                   });
}

template <typename T>
Var<T> bce_with_logits(Tape<T>& tape, const Var<T>& logits, const std::vector<CellLabel>& cells) {
  const Tensor<T>& z = logits.value();
  double loss = 0;
  for (const auto& c : cells) {
    if (c.index >= z.numel()) throw ShapeError("bce_with_logits: cell index out of range");
    const double v = z[c.index];
    loss += c.positive ? softplus(-v) : softplus(v);
  }
  auto ln = logits.node();
  auto labels = std::make_shared<std::vector<CellLabel>>(cells);
  return tape.emit("bce_with_logits", Tensor<T>::scalar(static_cast<T>(loss)), {logits},
                   [ln, labels](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                     const Tensor<T>& zz = ln->value;
                     Tensor<T> gin(zz.shape());
                     const double scale = g[0];
                     for (const auto& c : *labels) {
                       const double p = kernels::stable_sigmoid(static_cast<double>(zz[c.index]));
                       gin[c.index] += static_cast<T>(scale * (c.positive ? p - 1.0 : p));
                     }
                     sink.add(0, std::move(gin));
                   });
}

template <typename T>
Var<T> smooth_l1(Tape<T>& tape, const Var<T>& pred, const std::vector<RegressionCell>& cells) {
  const Tensor<T>& p = pred.value();
  if (p.shape().c != 4) throw ShapeError("smooth_l1: expected 4 channels, got " + p.shape().str());
  double loss = 0;
  for (const auto& c : cells) {
    for (int k = 0; k < 4; ++k) loss += smooth_l1_value(p.at(c.n, k, c.y, c.x) - c.target[k]);
  }
  auto pn = pred.node();
  auto targets = std::make_shared<std::vector<RegressionCell>>(cells);
  return tape.emit("smooth_l1", Tensor<T>::scalar(static_cast<T>(loss)), {pred},
                   [pn, targets](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                     const Tensor<T>& pp = pn->value;
                     Tensor<T> gin(pp.shape());
                     const double scale = g[0];
                     for (const auto& c : *targets) {
                       for (int k = 0; k < 4; ++k) {
                         const double d = pp.at(c.n, k, c.y, c.x) - c.target[k];
                         const double dd = std::fabs(d) < 1.0 ? d : (d > 0 ? 1.0 : -1.0);
                         gin.at(c.n, k, c.y, c.x) += static_cast<T>(scale * dd);
                       }
                     }
                     sink.add(0, std::move(gin));
                   });
}

template <typename T>
Var<T> weighted_sum(Tape<T>& tape, const std::vector<Var<T>>& terms, const std::vector<double>& coeffs) {
  if (terms.size() != coeffs.size()) throw ShapeError("weighted_sum: term/coefficient count mismatch");
  double s = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].value().numel() != 1) throw ShapeError("weighted_sum: terms must be scalars");
    s += coeffs[i] * terms[i].value()[0];
  }
  return tape.emit("weighted_sum", Tensor<T>::scalar(static_cast<T>(s)), terms,
                   [coeffs](const Tensor<T>& g, const Tensor<T>&, GradSink<T>& sink) {
                     for (std::size_t i = 0; i < coeffs.size(); ++i) {
                       sink.add(i, Tensor<T>::scalar(static_cast<T>(g[0] * coeffs[i])));
                     }
                   });
}


#define FNB_INSTANTIATE_OPS(T)                                                                  \
  template Var<T> conv2d<T>(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);            \
  template Var<T> maxpool2x2<T>(Tape<T>&, const Var<T>&);                                       \
  template Var<T> batchnorm<T>(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&,           \
                               std::span<T>, std::span<T>, Mode,                                \
                               const kernels::BatchNormOptions&);                               \
  template Var<T> batchnorm_relu<T>(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&,      \
                                    std::span<T>, std::span<T>, Mode,                              \
                                    const kernels::BatchNormOptions&);                             \
  template Var<T> relu<T>(Tape<T>&, const Var<T>&);                                             \
  template Var<T> sigmoid<T>(Tape<T>&, const Var<T>&);                                          \
  template Var<T> upsample2x<T>(Tape<T>&, const Var<T>&);                                       \
  template Var<T> add<T>(Tape<T>&, const Var<T>&, const Var<T>&);                               \
  template Var<T> sum<T>(Tape<T>&, const Var<T>&);                                              \
  template Var<T> bce_with_logits<T>(Tape<T>&, const Var<T>&, const std::vector<CellLabel>&);   \
  template Var<T> smooth_l1<T>(Tape<T>&, const Var<T>&, const std::vector<RegressionCell>&);    \
  template Var<T> weighted_sum<T>(Tape<T>&, const std::vector<Var<T>>&, const std::vector<double>&);

FNB_INSTANTIATE_OPS(float)
FNB_INSTANTIATE_OPS(double)

}  // namespace ops


template struct Node<float>;
template struct Node<double>;
template class Var<float>;
template class Var<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace fnb
