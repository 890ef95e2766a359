#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "adaptui/adapt_env.hpp"

namespace adaptui {

// Dense Q(domain, config, action) with visit counts, shape 2 x 120 x 15.
class QTable {
 public:
  static constexpr std::size_t kSize =
      static_cast<std::size_t>(kNumDomains) * kNumConfigs * kNumActions;

  QTable() : values_(kSize, 0.0), visits_(kSize, 0) {}

  double& at(Domain d, int config, int action) { return values_[index(d, config, action)]; }
  double at(Domain d, int config, int action) const { return values_[index(d, config, action)]; }
  std::uint64_t visits(Domain d, int config, int action) const {
    return visits_[index(d, config, action)];
  }
  void record_visit(Domain d, int config, int action) { ++visits_[index(d, config, action)]; }

  // Greedy action index; ties go to the lowest index.
  int argmax(Domain d, int config) const;
  double max_value(Domain d, int config) const;
  double max_abs() const;

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::uint64_t>& visit_counts() const noexcept { return visits_; }
  std::vector<double>& values() noexcept { return values_; }
  std::vector<std::uint64_t>& visit_counts() noexcept { return visits_; }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  static std::size_t index(Domain d, int config, int action) {
    return (static_cast<std::size_t>(d) * kNumConfigs + static_cast<std::size_t>(config)) *
               kNumActions +
           static_cast<std::size_t>(action);
  }

  std::vector<double> values_;
  std::vector<std::uint64_t> visits_;
};

struct QConfig {
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t epsilon_decay_steps = 20000;
  int episodes = 0;
  std::uint64_t seed = 0;
};

void validate(const QConfig& cfg);

// Linear decay from epsilon_start to epsilon_end over epsilon_decay_steps.
double epsilon_at(const QConfig& cfg, std::int64_t step) noexcept;


// Epsilon-greedy Q-learning on episodes drawn from `env`. Progress is
// reported once per episode. The horizon is a
// time limit rather than a terminal state, so the last step of an episode
// still bootstraps from max_a' Q(s', a'). Every 1,000 steps the table is
// checked against the bound max|r| / (1 - gamma); a violation throws
// Error(kInternal).
QTable q_train(const EpisodeConfig& env, const RewardProvider& reward, const QConfig& cfg,
               QTable initial = QTable(), const ProgressFn& progress = nullptr);

AdaptationAction q_policy(const QTable& q, Domain domain, const UiConfig& config);

}  // namespace adaptui
