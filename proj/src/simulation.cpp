#include "adaptui/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "adaptui/error.hpp"

namespace adaptui {

using nlohmann::json;

namespace {

void require_done(const json& job) {
  if (job.at("status") != "Done") {
    throw Error(ErrorCode::kInternal, "training job " + job.at("job_id").get<std::string>() +
                                          " failed: " + job.at("message").get<std::string>());
  }
}

// Questionnaire answers that track the experienced engagement e in [0,1],
// with a little item-level jitter.
std::vector<int> answer_items(std::size_t n, int lo, int hi, double e, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> jitter(-1, 1);
  std::vector<int> items(n);
  for (auto& v : items) {
    const int centre = static_cast<int>(std::lround(lo + e * (hi - lo)));
    v = std::clamp(centre + jitter(rng), lo, hi);
  }
  return items;
}

}  // namespace

double usage_engagement(Service& service, const std::string& user_id, const Persona& persona,
                        Domain domain, Technique technique, const SimulationOptions& opts,
                        UiConfig* final_config) {
  if (opts.interactions < 1 || opts.episodes < 1) {
    throw Error(ErrorCode::kInvalidArgument, "interactions and episodes must be >= 1");
  }
  double total = 0.0;
  UiConfig state = kDefaultConfig;
  for (int ep = 0; ep < opts.episodes; ++ep) {
    state = kDefaultConfig;
    for (int t = 0; t < opts.interactions; ++t) {
      const json ui = service.adapted_ui(user_id, domain, technique, state);
      state = ui.at("next_config").get<UiConfig>();
      const auto noise_seed = opts.seed * 1000003ULL + static_cast<std::uint64_t>(ep) * 131ULL +
                              static_cast<std::uint64_t>(t);
      total += engagement(persona, state, domain, opts.context, noise_seed);
    }
  }
  if (final_config) *final_config = state;
  return total / static_cast<double>(opts.episodes * opts.interactions);
}

SimulationReport simulate_participant(Service& service, const Persona& persona,
                                      const SimulationOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  SimulationReport report;
  report.persona = persona.id;
  report.user_id = opts.user_id.empty() ? persona.id + "-" + std::to_string(opts.seed) : opts.user_id;

  const json user = service.create_user(json{{"user_id", report.user_id}});
  report.group = user.at("group").get<int>();

  // Rank every clip of both domains.
  for (Domain d : kAllDomains) {
    const json started = service.start_session(report.user_id, d);
    const std::string sid = started.at("session_id").get<std::string>();
    while (!service.progress(sid).at("complete").get<bool>()) {
      const json q = service.next_query(sid);
      const auto left = q.at("left_clip").get<ClipSegment>();
      const auto right = q.at("right_clip").get<ClipSegment>();
      const PreferenceLabel label = simulated_answer(persona, left, right, opts.context);
      service.post_answer(sid, json{{"query_id", q.at("query_id")}, {"label", label}});
    }
    const json p = service.progress(sid);
    auto& dr = report.domains[static_cast<std::size_t>(d)];
    dr.domain = d;
    dr.queries = p.at("queries").get<std::size_t>();
    dr.answered = p.at("answered").get<std::size_t>();
  }

  for (Domain d : kAllDomains) {
    const json reward_job =
        service.enqueue_training(report.user_id, JobKind::RewardModel, json{{"domain", d}});
    require_done(service.wait_job(reward_job.at("job_id")));
    const json agent_job = service.enqueue_training(
        report.user_id, JobKind::Agent,
        json{{"domain", d}, {"beta", opts.beta}, {"steps", opts.agent_steps}});
    require_done(service.wait_job(agent_job.at("job_id")));
  }

  for (Domain d : kAllDomains) {
    auto& dr = report.domains[static_cast<std::size_t>(d)];
    dr.adaptive_engagement =
        usage_engagement(service, report.user_id, persona, d, Technique::Adaptive, opts, &dr.adaptive_final);
    dr.na_engagement = usage_engagement(service, report.user_id, persona, d, Technique::NA, opts);
    dr.persona_optimum = oracle_best(persona, d, opts.context).first;
    report.adaptive_engagement += dr.adaptive_engagement / kNumDomains;
    report.na_engagement += dr.na_engagement / kNumDomains;
  }

  if (opts.questionnaires) {
    std::mt19937_64 rng(opts.seed ^ 0x5eedULL);
    const SessionPlan sp = plan(report.group);
    for (int p = 1; p <= 2; ++p) {
      const Period& period = sp.period(p);
      const auto& dr = report.domains[static_cast<std::size_t>(period.domain)];
      const double e = period.technique == Technique::Adaptive ? dr.adaptive_engagement : dr.na_engagement;
      service.post_questionnaire(
          report.user_id, p,
          json{{"kind", "QUIS"}, {"items", answer_items(static_cast<std::size_t>(service.config().quis_items), 1, 10, e, rng)}});
      service.post_questionnaire(report.user_id, p,
                                 json{{"kind", "UES"}, {"items", answer_items(31, 1, 5, e, rng)}});
    }
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void to_json(json& j, const SimulationReport& v) {
  json domains = json::array();
  for (const auto& d : v.domains) {
    domains.push_back(json{{"domain", d.domain},
                           {"queries", d.queries},
                           {"answered", d.answered},
                           {"adaptive_engagement", d.adaptive_engagement},
                           {"na_engagement", d.na_engagement},
                           {"adaptive_final", d.adaptive_final},
                           {"persona_optimum", d.persona_optimum}});
  }
  j = json{{"user_id", v.user_id},
           {"persona", v.persona},
           {"group", v.group},
           {"domains", domains},
           {"adaptive_engagement", v.adaptive_engagement},
           {"na_engagement", v.na_engagement},
           {"seconds", v.seconds}};
}

}  // namespace adaptui
