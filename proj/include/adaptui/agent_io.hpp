#pragma once

// Versioned agent files: a dense Q-table or actor-critic parameters in the
// same layout as reward model files.

#include <string>
#include <variant>

#include "adaptui/actor_critic.hpp"
#include "adaptui/evaluation.hpp"
#include "adaptui/q_learning.hpp"

namespace adaptui {

struct AgentFile {
  Domain domain = Domain::Courses;
  double beta = 0.5;
  std::int64_t steps = 0;
  std::variant<QTable, ACModel> agent;

  bool is_q_table() const noexcept { return std::holds_alternative<QTable>(agent); }
};

Policy greedy_policy(const AgentFile& file);

void to_json(nlohmann::json& j, const AgentFile& v);
void from_json(const nlohmann::json& j, AgentFile& v);

}  // namespace adaptui
