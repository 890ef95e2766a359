#pragma once

// Fully connected network with hand-written backprop. Hidden layers use the
// chosen activation; the output layer is linear. Parameters are one flat
// vector: for each layer, its weights (out x in, row-major) then its biases.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace adaptui {

enum class Activation : std::uint8_t { LeakyRectifier, Tanh };
inline constexpr double kLeakySlope = 0.01;

enum class Init : std::uint8_t { Random, Zero };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view s);

class Mlp {
 public:
  // Activations of every layer for one input, kept for the backward pass.
  struct Tape {
    std::vector<std::vector<double>> pre;   // per layer, before activation
    std::vector<std::vector<double>> post;  // post[0] is the input
  };

  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed,
      Init init = Init::Random);

  const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  Activation activation() const noexcept { return activation_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(sizes_.front()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(sizes_.back()); }
  std::size_t num_layers() const noexcept { return sizes_.size() - 1; }

  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_.at(layer) + static_cast<std::size_t>(sizes_[layer] * sizes_[layer + 1]);
  }

  // Throws Error(kInvalidArgument) on input dimension mismatch.
  std::vector<double> forward(std::span<const double> x) const;
  const std::vector<double>& forward(std::span<const double> x, Tape& tape) const;

  // Adds d(sum_k grad_out[k] * output[k]) / d(params) into `grad`.
  void backward(const Tape& tape, std::span<const double> grad_out, std::span<double> grad) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  double act(double z) const noexcept;
  double act_grad(double z, double a) const noexcept;

  std::vector<int> sizes_;
  Activation activation_ = Activation::LeakyRectifier;
  std::uint64_t seed_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Adam with bias correction; state sized on first step.
struct Adam {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  void step(std::span<double> params, std::span<const double> grad);
};

// Versioned JSON {version, layer_sizes, activation, weights, biases, seed}.
void to_json(nlohmann::json& j, const Mlp& m);
void from_json(const nlohmann::json& j, Mlp& m);

}  // namespace adaptui
