#pragma once

#include <cstdint>
#include <vector>

#include "adaptui/adapt_env.hpp"

namespace adaptui {

struct MctsConfig {
  int simulations = 200;
  double uct_c = 1.414;
  int max_depth = 8;
  std::uint64_t seed = 0;
  // Action indices the planner may use; empty means all 15.
  std::vector<int> actions;
};

void validate(const MctsConfig& cfg);

struct MctsResult {
  AdaptationAction action;
  std::vector<int> actions;               // candidate action indices
  std::vector<std::uint64_t> visits;      // per candidate, at the root
  std::vector<double> mean_return;        // per candidate, at the root
};

// UCT search from `root` over undiscounted reward sums to max_depth.
// Unvisited children are expanded in action-index order, rollouts pick
// uniformly random actions, and the most visited root action is returned
// (lowest index on ties).
MctsResult mcts_search(const UiConfig& root, const RewardProvider& reward,
                       const ContextModel& ctx, const MctsConfig& cfg);

AdaptationAction mcts_plan(const UiConfig& root, const RewardProvider& reward,
                           const ContextModel& ctx, const MctsConfig& cfg);

}  // namespace adaptui
