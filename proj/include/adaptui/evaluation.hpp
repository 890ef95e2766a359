#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "adaptui/actor_critic.hpp"
#include "adaptui/adapt_env.hpp"
#include "adaptui/mcts.hpp"
#include "adaptui/q_learning.hpp"

namespace adaptui {

// Any decision rule mapping the current UI to an adaptation.
using Policy = std::function<AdaptationAction(const UiConfig& state, Domain domain)>;

Policy q_greedy_policy(QTable q);
Policy ac_greedy_policy(ACModel m);
Policy mcts_policy(RewardProvider reward, ContextModel ctx, MctsConfig cfg);
// Uniform over all actions; holds its own generator, so not thread-safe.
Policy random_policy(std::uint64_t seed);
// Fixes the first attribute (in declared order) that differs from `target`.
Policy oracle_policy(UiConfig target);
Policy noop_policy();

struct EpisodeLog {
  int episode = 0;
  double ret = 0.0;
  int steps_to_optimal = 0;  // first t with state == target, horizon + 1 if never
  UiConfig final_config;
};

struct EvalMetrics {
  double mean_return = 0.0;
  double mean_steps_to_optimal = 0.0;
  double final_config_match_rate = 0.0;
  std::vector<EpisodeLog> episodes;
};

// Runs n_episodes episodes of `env` (seeded from env.seed) and scores them
// against `target`, normally oracle_best's config.
EvalMetrics evaluate(const Policy& policy, const EpisodeConfig& env, const RewardProvider& reward,
                     int n_episodes, const UiConfig& target);

// episode,return,steps_to_optimal,final_config
void write_eval_csv(std::ostream& out, const EvalMetrics& metrics);

}  // namespace adaptui
