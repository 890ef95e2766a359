#include "adaptui/q_learning.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "adaptui/error.hpp"

namespace adaptui {

int QTable::argmax(Domain d, int config) const {
  int best = 0;
  double best_value = at(d, config, 0);
  for (int a = 1; a < kNumActions; ++a) {
    const double v = at(d, config, a);
    if (v > best_value) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

double QTable::max_value(Domain d, int config) const { return at(d, config, argmax(d, config)); }

double QTable::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void validate(const QConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be in (0,1]");
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be in [0,1)");
  if (!(cfg.epsilon_start >= 0.0 && cfg.epsilon_start <= 1.0 && cfg.epsilon_end >= 0.0 &&
        cfg.epsilon_end <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be in [0,1]");
  }
  if (cfg.epsilon_decay_steps < 0) throw Error(ErrorCode::kInvalidArgument, "negative epsilon decay");
  if (cfg.episodes < 0) throw Error(ErrorCode::kInvalidArgument, "negative episode count");
}

double epsilon_at(const QConfig& cfg, std::int64_t step) noexcept {
  if (cfg.epsilon_decay_steps <= 0) return cfg.epsilon_end;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(cfg.epsilon_decay_steps));
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

QTable q_train(const EpisodeConfig& env_cfg, const RewardProvider& reward, const QConfig& cfg,
               QTable q, const ProgressFn& progress) {
  validate(cfg);
  Environment env(env_cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_action(0, kNumActions - 1);
  const Domain d = env_cfg.domain;

  std::int64_t step = 0;
  double r_max = 0.0;
  for (int episode = 0; episode < cfg.episodes; ++episode) {
    env.reset();
    while (!env.done()) {
      const int s = config_index(env.state());
      const int a = unit(rng) < epsilon_at(cfg, step) ? any_action(rng) : q.argmax(d, s);
      const StepOutcome out = env.step(AdaptationAction::from_index(a), reward);
      const int s2 = config_index(out.next_state);
      const double target = out.reward + cfg.gamma * q.max_value(d, s2);
      double& value = q.at(d, s, a);
      value += cfg.alpha * (target - value);
      q.record_visit(d, s, a);
      r_max = std::max(r_max, std::abs(out.reward));
      ++step;
      if (step % 1000 == 0) {
        const double bound = r_max / (1.0 - cfg.gamma);
        if (q.max_abs() > bound * (1.0 + 1e-9) + 1e-12) {
          throw Error(ErrorCode::kInternal, "Q-value bound violated");
        }
      }
    }
    if (progress) progress(static_cast<double>(episode + 1) / cfg.episodes);
  }
  return q;
}

AdaptationAction q_policy(const QTable& q, Domain domain, const UiConfig& config) {
  return AdaptationAction::from_index(q.argmax(domain, config_index(config)));
}

}  // namespace adaptui
