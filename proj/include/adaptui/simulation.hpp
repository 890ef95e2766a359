#pragma once

// Headless participant: a synthetic persona walks the whole study loop
// through a Service, the way the browser client would.

#include <array>
#include <cstdint>
#include <string>

#include "adaptui/service.hpp"
#include "adaptui/synthetic_user.hpp"

namespace adaptui {

struct SimulationOptions {
  std::string user_id;  // empty: "<persona id>-<seed>"
  std::uint64_t seed = 0;
  double beta = 0.5;
  std::int64_t agent_steps = 50000;
  int interactions = kDefaultHorizon;  // UI queries per usage episode
  int episodes = 1;                    // usage episodes per (technique, domain)
  bool questionnaires = true;
  ContextModel context;
};

struct DomainReport {
  Domain domain = Domain::Courses;
  std::size_t queries = 0;   // comparisons shown, Skip included
  std::size_t answered = 0;  // non-Skip answers
  double adaptive_engagement = 0.0;
  double na_engagement = 0.0;
  UiConfig adaptive_final;
  UiConfig persona_optimum;
};

struct SimulationReport {
  std::string user_id;
  std::string persona;
  int group = 1;
  std::array<DomainReport, kNumDomains> domains;
  double adaptive_engagement = 0.0;  // mean over domains
  double na_engagement = 0.0;
  double seconds = 0.0;
};

// register -> rank both domains -> train reward models -> train agents ->
// use the UI under both techniques -> questionnaires. Throws if any training
// job fails.
SimulationReport simulate_participant(Service& service, const Persona& persona,
                                      const SimulationOptions& opts);

// Mean engagement over `interactions` UI queries starting from the default
// configuration, averaged over `episodes` noise draws.
double usage_engagement(Service& service, const std::string& user_id, const Persona& persona,
                        Domain domain, Technique technique, const SimulationOptions& opts,
                        UiConfig* final_config = nullptr);

void to_json(nlohmann::json& j, const SimulationReport& v);

}  // namespace adaptui
