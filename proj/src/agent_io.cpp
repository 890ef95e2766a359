#include "adaptui/agent_io.hpp"

#include "adaptui/error.hpp"

namespace adaptui {

namespace {
constexpr int kAgentFormatVersion = 1;
}

Policy greedy_policy(const AgentFile& file) {
  if (const auto* q = std::get_if<QTable>(&file.agent)) return q_greedy_policy(*q);
  return ac_greedy_policy(std::get<ACModel>(file.agent));
}

void to_json(nlohmann::json& j, const AgentFile& v) {
  j = nlohmann::json{{"version", kAgentFormatVersion},
                     {"domain", v.domain},
                     {"beta", v.beta},
                     {"steps", v.steps}};
  if (const auto* q = std::get_if<QTable>(&v.agent)) {
    j["kind"] = "q_table";
    j["shape"] = {kNumDomains, kNumConfigs, kNumActions};
    j["values"] = q->values();
    j["visits"] = q->visit_counts();
  } else {
    j["kind"] = "actor_critic";
    j["model"] = std::get<ACModel>(v.agent).net();
  }
}

void from_json(const nlohmann::json& j, AgentFile& v) {
  if (j.at("version").get<int>() != kAgentFormatVersion) {
    throw Error(ErrorCode::kInvalidArgument, "unsupported agent file version");
  }
  AgentFile out;
  out.domain = j.at("domain").get<Domain>();
  out.beta = j.value("beta", 0.5);
  out.steps = j.value("steps", std::int64_t{0});
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "q_table") {
    QTable q;
    auto values = j.at("values").get<std::vector<double>>();
    auto visits = j.at("visits").get<std::vector<std::uint64_t>>();
    if (values.size() != QTable::kSize || visits.size() != QTable::kSize) {
      throw Error(ErrorCode::kInvalidArgument, "q-table shape mismatch");
    }
    q.values() = std::move(values);
    q.visit_counts() = std::move(visits);
    out.agent = std::move(q);
  } else if (kind == "actor_critic") {
    out.agent = ACModel(j.at("model").get<Mlp>());
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown agent kind '" + kind + "'");
  }
  v = std::move(out);
}

}  // namespace adaptui
