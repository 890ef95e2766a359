#pragma once

// Synchronous batched advantage actor-critic.
//
// Each worker owns an environment and collects n-step rollouts with a
// read-only snapshot of the parameters. Worker gradients are summed in worker
// order and applied once per round, so results do not depend on thread
// scheduling.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "adaptui/adapt_env.hpp"
#include "adaptui/mlp.hpp"
#include "adaptui/q_learning.hpp"

namespace adaptui {

// Shared trunk 16 -> 64 -> 64 with a 15-way policy head and a scalar value
// head, stored as one network whose last layer emits [logits..., value].
class ACModel {
 public:
  ACModel() = default;
  explicit ACModel(std::uint64_t seed);
  explicit ACModel(Mlp net);

  struct Output {
    std::array<double, kNumActions> logits{};
    std::array<double, kNumActions> probs{};
    double value = 0.0;
  };

  Output evaluate(std::span<const double> x) const;

  const Mlp& net() const noexcept { return net_; }
  Mlp& net() noexcept { return net_; }

  friend bool operator==(const ACModel&, const ACModel&) = default;

 private:
  Mlp net_;
};

struct ACConfig {
  int workers = 4;
  int n_step = 5;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double learning_rate = 3e-4;
  double gamma = 0.95;
  std::int64_t total_steps = 0;
  std::uint64_t seed = 0;
};

void validate(const ACConfig& cfg);

// One training sample with its targets frozen at collection time.
struct ACSample {
  FeatureVector x{};
  int action = 0;
  double value_target = 0.0;  // n-step return G
  double advantage = 0.0;     // G - V(s), held constant in the policy term
};

// mean( -log pi(a|s) * A + value_coef * (G - V(s))^2 - entropy_coef * H(pi(.|s)) )
double ac_loss(const ACModel& m, std::span<const ACSample> batch, const ACConfig& cfg);
// Same loss; adds its gradient into `grad`.
double ac_loss_grad(const ACModel& m, std::span<const ACSample> batch, const ACConfig& cfg,
                    std::span<double> grad);

// Worker w runs on `env` with seed env.seed + w.
ACModel ac_train(const EpisodeConfig& env, const RewardProvider& reward, const ACConfig& cfg,
                 ACModel initial, const ProgressFn& progress = nullptr);
ACModel ac_train(const EpisodeConfig& env, const RewardProvider& reward, const ACConfig& cfg);

enum class ActMode : std::uint8_t { Sample, Greedy };

// Throws Error(kInvalidArgument) on a dimension mismatch.
AdaptationAction ac_act(const ACModel& m, std::span<const double> x, ActMode mode,
                        std::mt19937_64& rng);
AdaptationAction ac_act(const ACModel& m, std::span<const double> x, ActMode mode,
                        std::uint64_t seed);

}  // namespace adaptui
