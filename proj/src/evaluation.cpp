#include "adaptui/evaluation.hpp"

#include <memory>
#include <ostream>
#include <random>

#include "adaptui/error.hpp"

namespace adaptui {

Policy q_greedy_policy(QTable q) {
  return [q = std::move(q)](const UiConfig& s, Domain d) { return q_policy(q, d, s); };
}

Policy ac_greedy_policy(ACModel m) {
  return [m = std::move(m)](const UiConfig& s, Domain d) {
    return ac_act(m, encode_state(s, d), ActMode::Greedy, std::uint64_t{0});
  };
}

Policy mcts_policy(RewardProvider reward, ContextModel ctx, MctsConfig cfg) {
  return [reward = std::move(reward), ctx, cfg](const UiConfig& s, Domain) {
    return mcts_plan(s, reward, ctx, cfg);
  };
}

Policy random_policy(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const UiConfig&, Domain) {
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    return AdaptationAction::from_index(pick(*rng));
  };
}

Policy oracle_policy(UiConfig target) {
  return [target](const UiConfig& s, Domain) {
    for (Attribute attr : kAllAttributes) {
      if (s.get(attr) != target.get(attr)) return AdaptationAction::assign(attr, target.get(attr));
    }
    return AdaptationAction::noop();
  };
}

Policy noop_policy() {
  return [](const UiConfig&, Domain) { return AdaptationAction::noop(); };
}

EvalMetrics evaluate(const Policy& policy, const EpisodeConfig& env_cfg, const RewardProvider& reward,
                     int n_episodes, const UiConfig& target) {
  if (n_episodes < 1) throw Error(ErrorCode::kInvalidArgument, "n_episodes must be >= 1");
  Environment env(env_cfg);
  EvalMetrics m;
  double sum_steps = 0.0;
  int matches = 0;
  for (int e = 0; e < n_episodes; ++e) {
    EpisodeLog log;
    log.episode = e;
    env.reset();
    log.steps_to_optimal = env.state() == target ? 0 : env_cfg.horizon + 1;
    while (!env.done()) {
      const auto out = env.step(policy(env.state(), env_cfg.domain), reward);
      log.ret += out.reward;
      if (log.steps_to_optimal > env_cfg.horizon && out.next_state == target) {
        log.steps_to_optimal = env.steps_taken();
      }
    }
    log.final_config = env.state();
    if (log.final_config == target) ++matches;
    m.mean_return += log.ret;
    sum_steps += log.steps_to_optimal;
    m.episodes.push_back(log);
  }
  m.mean_return /= n_episodes;
  m.mean_steps_to_optimal = sum_steps / n_episodes;
  m.final_config_match_rate = static_cast<double>(matches) / n_episodes;
  return m;
}

void write_eval_csv(std::ostream& out, const EvalMetrics& metrics) {
  out << "episode,return,steps_to_optimal,final_config\n";
  for (const auto& e : metrics.episodes) {
    out << e.episode << ',' << e.ret << ',' << e.steps_to_optimal << ",\""
        << to_compact_string(e.final_config) << "\"\n";
  }
}

}  // namespace adaptui
