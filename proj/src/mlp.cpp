#include "adaptui/mlp.hpp"

#include <cmath>
#include <random>

#include "adaptui/error.hpp"

namespace adaptui {

namespace {
constexpr int kModelFormatVersion = 1;
}

std::string_view to_string(Activation a) noexcept {
  return a == Activation::Tanh ? "Tanh" : "LeakyRectifier";
}

Activation parse_activation(std::string_view s) {
  if (s == "LeakyRectifier") return Activation::LeakyRectifier;
  if (s == "Tanh") return Activation::Tanh;
  throw Error(ErrorCode::kInvalidArgument, "unknown activation '" + std::string(s) + "'");
}

Mlp::Mlp(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed, Init init)
    : sizes_(std::move(layer_sizes)), activation_(activation), seed_(seed) {
  if (sizes_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "network needs >= 2 layer sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "layer sizes must be positive");
    }
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l] * sizes_[l + 1] + sizes_[l + 1]);
  }
  params_.assign(total, 0.0);
  if (init == Init::Zero) return;

  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double fan_in = sizes_[l];
    const double fan_out = sizes_[l + 1];
    const double limit = activation_ == Activation::Tanh ? std::sqrt(6.0 / (fan_in + fan_out))
                                                         : std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t begin = weight_offset(l);
    const std::size_t end = bias_offset(l);
    for (std::size_t i = begin; i < end; ++i) params_[i] = dist(rng);
  }
}

double Mlp::act(double z) const noexcept {
  if (activation_ == Activation::Tanh) return std::tanh(z);
  return z > 0.0 ? z : kLeakySlope * z;
}

double Mlp::act_grad(double z, double a) const noexcept {
  if (activation_ == Activation::Tanh) return 1.0 - a * a;
  return z > 0.0 ? 1.0 : kLeakySlope;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Tape tape;
  return forward(x, tape);
}

const std::vector<double>& Mlp::forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != input_dim()) {
    throw Error(ErrorCode::kInvalidArgument, "input dimension " + std::to_string(x.size()) +
                                                 " != " + std::to_string(input_dim()));
  }
  const std::size_t layers = num_layers();
  tape.pre.resize(layers);
  tape.post.resize(layers + 1);
  tape.post[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const auto& a_in = tape.post[l];
    auto& z = tape.pre[l];
    auto& a = tape.post[l + 1];
    z.resize(out);
    a.resize(out);
    const bool last = l + 1 == layers;
    for (std::size_t o = 0; o < out; ++o) {
      double sum = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) sum += row[i] * a_in[i];
      z[o] = sum;
      a[o] = last ? sum : act(sum);
    }
  }
  return tape.post.back();
}

void Mlp::backward(const Tape& tape, std::span<const double> grad_out,
                   std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient buffer has wrong size");
  }
  const std::size_t layers = num_layers();
  std::vector<double> delta(grad_out.begin(), grad_out.end());
  std::vector<double> next;
  for (std::size_t l = layers; l-- > 0;) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    if (l + 1 != layers) {
      for (std::size_t o = 0; o < out; ++o) delta[o] *= act_grad(tape.pre[l][o], tape.post[l + 1][o]);
    }
    const double* w = params_.data() + weight_offset(l);
    double* gw = grad.data() + weight_offset(l);
    double* gb = grad.data() + bias_offset(l);
    const auto& a_in = tape.post[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * a_in[i];
    }
    if (l == 0) break;
    next.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) next[i] += row[i] * d;
    }
    delta.swap(next);
  }
}

bool Mlp::all_finite() const noexcept {
  for (double p : params_) {
    if (!std::isfinite(p)) return false;
  }
  return true;
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
    t = 0;
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

void to_json(nlohmann::json& j, const Mlp& m) {
  auto weights = nlohmann::json::array();
  auto biases = nlohmann::json::array();
  const auto p = m.params();
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const auto in = static_cast<std::size_t>(m.layer_sizes()[l]);
    const auto out = static_cast<std::size_t>(m.layer_sizes()[l + 1]);
    auto rows = nlohmann::json::array();
    for (std::size_t o = 0; o < out; ++o) {
      const auto row = p.subspan(m.weight_offset(l) + o * in, in);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    weights.push_back(std::move(rows));
    const auto b = p.subspan(m.bias_offset(l), out);
    biases.push_back(std::vector<double>(b.begin(), b.end()));
  }
  j = nlohmann::json{{"version", kModelFormatVersion},
                     {"layer_sizes", m.layer_sizes()},
                     {"activation", std::string(to_string(m.activation()))},
                     {"weights", std::move(weights)},
                     {"biases", std::move(biases)},
                     {"seed", m.seed()}};
}

void from_json(const nlohmann::json& j, Mlp& m) {
  const int version = j.at("version").get<int>();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kInvalidArgument, "unsupported model version " + std::to_string(version));
  }
  Mlp out(j.at("layer_sizes").get<std::vector<int>>(),
          parse_activation(j.at("activation").get<std::string>()), j.value("seed", std::uint64_t{0}),
          Init::Zero);
  auto p = out.params();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != out.num_layers() || biases.size() != out.num_layers()) {
    throw Error(ErrorCode::kInvalidArgument, "model file layer count mismatch");
  }
  for (std::size_t l = 0; l < out.num_layers(); ++l) {
    const auto in = static_cast<std::size_t>(out.layer_sizes()[l]);
    const auto outs = static_cast<std::size_t>(out.layer_sizes()[l + 1]);
    if (weights[l].size() != outs || biases[l].size() != outs) {
      throw Error(ErrorCode::kInvalidArgument, "model file shape mismatch");
    }
    for (std::size_t o = 0; o < outs; ++o) {
      const auto row = weights[l][o].get<std::vector<double>>();
      if (row.size() != in) throw Error(ErrorCode::kInvalidArgument, "model file shape mismatch");
      std::copy(row.begin(), row.end(), p.begin() + static_cast<std::ptrdiff_t>(out.weight_offset(l) + o * in));
      p[out.bias_offset(l) + o] = biases[l][o].get<double>();
    }
  }
  if (!out.all_finite()) throw Error(ErrorCode::kInvalidArgument, "model file has non-finite parameters");
  m = std::move(out);
}

}  // namespace adaptui
