#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "mimex/rng.hpp"
#include "mimex/tensor.hpp"

namespace mimex {

enum class Activation { relu, tanh, linear };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "?";
}

// Gradients of an MLP's parameters plus the gradient with respect to its
// input, laid out layer by layer to mirror the network.
struct MlpGradients {
  std::vector<Tensor> weight;  // same shapes as the layer weights
  std::vector<Tensor> bias;
  Tensor input;  // d(loss)/d(input), same shape as the forward input

  std::vector<double> flat() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < weight.size(); ++i) {
      out.insert(out.end(), weight[i].values().begin(), weight[i].values().end());
      out.insert(out.end(), bias[i].values().begin(), bias[i].values().end());
    }
    return out;
  }
};

// Fully connected network: a stack of affine layers each followed by an
// activation from {relu, tanh, linear}. Parameters are 64-bit reals; forward
// and backward are exact analytic maps, deterministic for fixed parameters.
class MlpNetwork {
 public:
  struct Layer {
    Tensor weight;  // (out, in)
    Tensor bias;    // (out)
    Activation act = Activation::linear;
  };

  MlpNetwork() = default;

  // Zero-initialized network; dims = {in, h1, ..., out}, one activation per layer.
  MlpNetwork(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts) {
    if (dims.size() < 2) throw ShapeError("mlp: need at least input and output dims");
    if (acts.size() != dims.size() - 1) {
      throw ShapeError("mlp: activation count must equal layer count");
    }
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      layers_.push_back({Tensor({dims[i + 1], dims[i]}), Tensor({dims[i + 1]}), acts[i]});
    }
  }

  // Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
  static MlpNetwork glorot(const std::vector<std::size_t>& dims,
                           const std::vector<Activation>& acts, Rng& rng) {
    MlpNetwork net(dims, acts);
    for (auto& layer : net.layers_) {
      std::size_t fan_out = layer.weight.dim(0);
      std::size_t fan_in = layer.weight.dim(1);
      double bound = std::sqrt(6.0 / double(fan_in + fan_out));
      for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
    }
    return net;
  }

  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return layers_[i]; }
  Layer& layer(std::size_t i) { return layers_[i]; }

  std::size_t input_dim() const { return layers_.front().weight.dim(1); }
  std::size_t output_dim() const { return layers_.back().weight.dim(0); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  // Narrowest hidden width; used to check the bottleneck rule for
  // reconstruction world models.
  std::size_t min_hidden_width() const {
    std::size_t w = std::size_t(-1);
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
      w = std::min(w, layers_[i].weight.dim(0));
    }
    return layers_.size() > 1 ? w : std::size_t(-1);
  }

  // Input (d) -> (out) or (n, d) -> (n, out).
  Tensor forward(const Tensor& input) const {
    check_input(input);
    std::size_t n = input.rows();
    Tensor current = input;
    for (const auto& l : layers_) {
      current = affine(l, current, n);
      apply_activation(l.act, current.values());
    }
    require_finite(current, "mlp_forward");
    return current;
  }

  // Analytic gradients of the forward map. output_grad must be congruent
  // with forward(input); batched inputs accumulate parameter gradients over
  // rows and return per-row input gradients.
  MlpGradients backward(const Tensor& input, const Tensor& output_grad) const {
    check_input(input);
    std::size_t n = input.rows();
    if (output_grad.rows() != n || output_grad.row_width() != output_dim()) {
      throw ShapeError("mlp_backward: output_grad shape " +
                       Tensor::shape_string(output_grad.shape()) + " incompatible with " +
                       std::to_string(n) + "x" + std::to_string(output_dim()) + " output");
    }

    // Forward pass retaining post-activation outputs per layer.
    std::vector<Tensor> post;  // post[0] = input, post[i+1] = layer i output
    post.reserve(layers_.size() + 1);
    post.push_back(input);
    for (const auto& l : layers_) {
      Tensor out = affine(l, post.back(), n);
      apply_activation(l.act, out.values());
      post.push_back(std::move(out));
    }

    MlpGradients grads;
    grads.weight.resize(layers_.size());
    grads.bias.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      grads.weight[i] = Tensor(layers_[i].weight.shape());
      grads.bias[i] = Tensor(layers_[i].bias.shape());
    }

    Tensor delta = output_grad;  // gradient w.r.t. post-activation of current layer
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const Layer& l = layers_[li];
      std::size_t out_w = l.weight.dim(0);
      std::size_t in_w = l.weight.dim(1);
      const Tensor& act_out = post[li + 1];
      const Tensor& act_in = post[li];
      Tensor next_delta(act_in.rank() == 1 ? std::vector<std::size_t>{in_w}
                                           : std::vector<std::size_t>{n, in_w});
      for (std::size_t r = 0; r < n; ++r) {
        std::span<const double> d_out = delta.row(r);
        std::span<const double> y = act_out.row(r);
        std::span<const double> x = act_in.row(r);
        std::span<double> d_in = next_delta.row(r);
        for (std::size_t o = 0; o < out_w; ++o) {
          double dpre = d_out[o] * activation_slope(l.act, y[o]);
          if (dpre == 0.0) continue;
          grads.bias[li][o] += dpre;
          std::span<const double> w_row = l.weight.row(o);
          double* gw_row = &grads.weight[li](o, 0);
          for (std::size_t iw = 0; iw < in_w; ++iw) {
            gw_row[iw] += dpre * x[iw];
            d_in[iw] += dpre * w_row[iw];
          }
        }
      }
      delta = std::move(next_delta);
    }
    grads.input = std::move(delta);
    return grads;
  }

  std::vector<double> params_flat() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (const auto& l : layers_) {
      out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
      out.insert(out.end(), l.bias.values().begin(), l.bias.values().end());
    }
    return out;
  }

  void set_params_flat(std::span<const double> flat) {
    if (flat.size() != param_count()) {
      throw ShapeError("mlp: parameter vector length " + std::to_string(flat.size()) +
                       " != " + std::to_string(param_count()));
    }
    std::size_t pos = 0;
    for (auto& l : layers_) {
      for (double& w : l.weight.values()) w = flat[pos++];
      for (double& b : l.bias.values()) b = flat[pos++];
    }
  }

  // FNV-1a over the raw parameter bytes; used to verify frozen networks.
  std::uint64_t param_digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const Tensor& t) {
      for (double v : t.values()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
          h ^= (bits >> (8 * i)) & 0xff;
          h *= 0x100000001b3ULL;
        }
      }
    };
    for (const auto& l : layers_) {
      mix(l.weight);
      mix(l.bias);
    }
    return h;
  }

  bool operator==(const MlpNetwork& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].act != other.layers_[i].act || layers_[i].weight != other.layers_[i].weight ||
          layers_[i].bias != other.layers_[i].bias) {
        return false;
      }
    }
    return true;
  }

 private:
  void check_input(const Tensor& input) const {
    if (layers_.empty()) throw ShapeError("mlp: empty network");
    if (input.rank() == 0 || input.rank() > 2 || input.row_width() != input_dim()) {
      throw ShapeError("mlp: input shape " + Tensor::shape_string(input.shape()) +
                       " incompatible with input dim " + std::to_string(input_dim()));
    }
  }

  Tensor affine(const Layer& l, const Tensor& x, std::size_t n) const {
    std::size_t out_w = l.weight.dim(0);
    std::size_t in_w = l.weight.dim(1);
    Tensor out(x.rank() == 1 ? std::vector<std::size_t>{out_w}
                             : std::vector<std::size_t>{n, out_w});
    for (std::size_t r = 0; r < n; ++r) {
      std::span<const double> xin = x.row(r);
      std::span<double> yout = out.row(r);
      for (std::size_t o = 0; o < out_w; ++o) {
        double acc = l.bias[o];
        std::span<const double> w_row = l.weight.row(o);
        for (std::size_t i = 0; i < in_w; ++i) acc += w_row[i] * xin[i];
        yout[o] = acc;
      }
    }
    return out;
  }

  static void apply_activation(Activation act, std::span<double> values) {
    switch (act) {
      case Activation::relu:
        for (double& v : values) v = v > 0.0 ? v : 0.0;
        break;
      case Activation::tanh:
        for (double& v : values) v = std::tanh(v);
        break;
      case Activation::linear:
        break;
    }
  }

  // Derivative of the activation expressed through its output value.
  static double activation_slope(Activation act, double y) {
    switch (act) {
      case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
      case Activation::tanh: return 1.0 - y * y;
      case Activation::linear: return 1.0;
    }
    return 1.0;
  }

  std::vector<Layer> layers_;
};

}  // namespace mimex
