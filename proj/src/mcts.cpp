#include "adaptui/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "adaptui/error.hpp"

namespace adaptui {

namespace {

struct Node {
  UiConfig state;
  int depth = 0;
  std::vector<int> children;  // node index per candidate slot, -1 when unexpanded
  std::uint64_t visits = 0;
  double total = 0.0;         // sum of returns through the edge into this node
};

}  // namespace

void validate(const MctsConfig& cfg) {
  if (cfg.simulations < 1) throw Error(ErrorCode::kInvalidArgument, "simulations must be >= 1");
  if (cfg.max_depth < 1) throw Error(ErrorCode::kInvalidArgument, "max_depth must be >= 1");
  if (!(cfg.uct_c >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "uct_c must be >= 0");
  for (int a : cfg.actions) {
    if (a < 0 || a >= kNumActions) throw Error(ErrorCode::kInvalidArgument, "action index out of range");
  }
}

MctsResult mcts_search(const UiConfig& root, const RewardProvider& reward,
                       const ContextModel& ctx, const MctsConfig& cfg) {
  validate(cfg);
  std::vector<int> actions = cfg.actions;
  if (actions.empty()) {
    actions.resize(kNumActions);
    std::iota(actions.begin(), actions.end(), 0);
  }
  std::sort(actions.begin(), actions.end());
  actions.erase(std::unique(actions.begin(), actions.end()), actions.end());
  const std::size_t k = actions.size();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);

  std::vector<Node> nodes;
  nodes.push_back(Node{root, 0, std::vector<int>(k, -1), 0, 0.0});

  std::vector<int> path;
  std::vector<double> rewards;
  for (int sim = 0; sim < cfg.simulations; ++sim) {
    path.assign(1, 0);
    rewards.clear();
    int cur = 0;
    // Selection and expansion.
    while (nodes[static_cast<std::size_t>(cur)].depth < cfg.max_depth) {
      Node& node = nodes[static_cast<std::size_t>(cur)];
      std::size_t slot = k;
      for (std::size_t i = 0; i < k; ++i) {
        if (node.children[i] < 0) {
          slot = i;
          break;
        }
      }
      bool expanded = false;
      if (slot == k) {
        double best = -std::numeric_limits<double>::infinity();
        const double log_n = std::log(static_cast<double>(node.visits));
        for (std::size_t i = 0; i < k; ++i) {
          const Node& child = nodes[static_cast<std::size_t>(node.children[i])];
          const double n = static_cast<double>(child.visits);
          const double score = child.total / n + cfg.uct_c * std::sqrt(log_n / n);
          if (score > best) {
            best = score;
            slot = i;
          }
        }
      } else {
        expanded = true;
      }
      const auto action = AdaptationAction::from_index(actions[slot]);
      const UiConfig state = node.state;
      const int depth = node.depth;
      rewards.push_back(reward(state, action, ctx));
      if (expanded) {
        nodes.push_back(Node{apply_action(state, action), depth + 1, std::vector<int>(k, -1), 0, 0.0});
        nodes[static_cast<std::size_t>(cur)].children[slot] = static_cast<int>(nodes.size() - 1);
      }
      cur = nodes[static_cast<std::size_t>(cur)].children[slot];
      path.push_back(cur);
      if (expanded) break;
    }
    // Rollout.
    UiConfig state = nodes[static_cast<std::size_t>(cur)].state;
    double tail = 0.0;
    for (int d = nodes[static_cast<std::size_t>(cur)].depth; d < cfg.max_depth; ++d) {
      const auto action = AdaptationAction::from_index(actions[pick(rng)]);
      tail += reward(state, action, ctx);
      state = apply_action(state, action);
    }
    // Backup: the node reached by edge i gets the return from that edge on.
    double ret = tail;
    for (std::size_t i = path.size(); i-- > 1;) {
      ret += rewards[i - 1];
      Node& node = nodes[static_cast<std::size_t>(path[i])];
      ++node.visits;
      node.total += ret;
    }
    ++nodes[0].visits;
  }

  MctsResult result;
  result.actions = actions;
  std::size_t best = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const int c = nodes[0].children[i];
    const std::uint64_t v = c < 0 ? 0 : nodes[static_cast<std::size_t>(c)].visits;
    result.visits.push_back(v);
    result.mean_return.push_back(v == 0 ? 0.0 : nodes[static_cast<std::size_t>(c)].total / static_cast<double>(v));
    if (v > result.visits[best]) best = i;
  }
  result.action = AdaptationAction::from_index(actions[best]);
  return result;
}

AdaptationAction mcts_plan(const UiConfig& root, const RewardProvider& reward,
                           const ContextModel& ctx, const MctsConfig& cfg) {
  return mcts_search(root, reward, ctx, cfg).action;
}

}  // namespace adaptui
