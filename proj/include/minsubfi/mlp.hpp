#pragma once

// Fully connected network over a flat parameter vector: tanh hidden layers,
// linear output layer. Parameters are laid out layer by layer as the
// row-major weight matrix (out x in) followed by the bias vector.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "minsubfi/errors.hpp"

namespace minsubfi {

struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;

  std::vector<std::size_t> layer_sizes() const {
    std::vector<std::size_t> sizes{input_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(output_dim);
    return sizes;
  }

  std::size_t param_count() const {
    const auto sizes = layer_sizes();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * (sizes[l] + 1);
    return n;
  }

  bool operator==(const Architecture&) const = default;
};

inline void to_json(nlohmann::json& j, const Architecture& a) {
  j = nlohmann::json{{"input_dim", a.input_dim}, {"hidden", a.hidden}, {"output_dim", a.output_dim},
                     {"activation", "tanh"}};
}

inline void from_json(const nlohmann::json& j, Architecture& a) {
  a.input_dim = j.at("input_dim").get<std::size_t>();
  a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  a.output_dim = j.at("output_dim").get<std::size_t>();
  if (j.contains("activation") && j.at("activation").get<std::string>() != "tanh")
    throw InvalidInput("only tanh hidden activations are supported");
}

// Layer inputs recorded by forward() for backward().
struct MlpTape {
  std::vector<std::vector<double>> inputs;
};

// Xavier-uniform weights, zero biases.
inline std::vector<double> xavier_init(const Architecture& arch, std::mt19937_64& rng) {
  const auto sizes = arch.layer_sizes();
  std::vector<double> w;
  w.reserve(arch.param_count());
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < sizes[l + 1] * sizes[l]; ++i) w.push_back(u(rng));
    w.insert(w.end(), sizes[l + 1], 0.0);
  }
  return w;
}

inline std::vector<double> mlp_forward(const Architecture& arch, std::span<const double> weights,
                                       std::span<const double> input, MlpTape* tape = nullptr) {
  if (input.size() != arch.input_dim) throw InvalidInput("network input dimension mismatch");
  if (weights.size() != arch.param_count()) throw InvalidInput("network parameter count mismatch");
  const auto sizes = arch.layer_sizes();
  if (tape) tape->inputs.clear();
  std::vector<double> a(input.begin(), input.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l], out = sizes[l + 1];
    const double* W = weights.data() + offset;
    const double* b = W + out * in;
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = W + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * a[i];
      z[o] = acc;
    }
    if (tape) tape->inputs.push_back(std::move(a));
    if (l + 2 < sizes.size())
      for (auto& v : z) v = std::tanh(v);
    a = std::move(z);
    offset += out * (in + 1);
  }
  return a;
}

// Accumulates scale * d(output . upstream)/d(weights) into grad.
inline void mlp_backward(const Architecture& arch, std::span<const double> weights, const MlpTape& tape,
                         std::span<const double> upstream, double scale, std::span<double> grad) {
  const auto sizes = arch.layer_sizes();
  const std::size_t layers = sizes.size() - 1;
  if (tape.inputs.size() != layers) throw InvalidInput("mlp_backward: tape does not match architecture");
  if (upstream.size() != arch.output_dim) throw InvalidInput("mlp_backward: upstream dimension mismatch");
  if (grad.size() != weights.size()) throw InvalidInput("mlp_backward: gradient size mismatch");

  std::vector<std::size_t> offsets(layers);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = offset;
    offset += sizes[l + 1] * (sizes[l] + 1);
  }

  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes[l], out = sizes[l + 1];
    const double* W = weights.data() + offsets[l];
    double* gW = grad.data() + offsets[l];
    double* gb = gW + out * in;
    const auto& a = tape.inputs[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = scale * delta[o];
      if (d == 0.0) continue;
      double* row = gW + o * in;
      for (std::size_t i = 0; i < in; ++i) row[i] += d * a[i];
      gb[o] += d;
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = W + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
    }
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];  // a = tanh(z)
    delta = std::move(prev);
  }
}

}  // namespace minsubfi
