#pragma once

// Per-user study service: registration, feedback sessions, background
// training jobs, UI queries and questionnaires, all persisted under one data
// directory.
//
// Layout of the data directory:
//   corpus.jsonl                       clip corpus (generated when missing)
//   users/<id>/user.json               registration record
//   users/<id>/session_<domain>.json   session seed and clip list
//   users/<id>/session_<domain>.jsonl  answer log, one line per submit
//   users/<id>/reward_<domain>.json    preference model
//   users/<id>/reward_<domain>.csv     its loss curve
//   users/<id>/agent_<domain>.json     trained agent
//   users/<id>/questionnaires.json     scored questionnaires per period
//   jobs/<job id>.json                 last known job state
//
// Sessions are rebuilt on startup by replaying their answer logs, so a
// restarted service continues exactly where the previous one stopped.
// Methods return JSON documents shaped like the HTTP responses and throw
// adaptui::Error on failure.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "adaptui/actor_critic.hpp"
#include "adaptui/adapt_env.hpp"
#include "adaptui/agent_io.hpp"
#include "adaptui/feedback_rank.hpp"
#include "adaptui/q_learning.hpp"
#include "adaptui/reward_model.hpp"
#include "adaptui/study_harness.hpp"

namespace adaptui {

enum class AgentAlgorithm : std::uint8_t { ActorCritic, QLearning };

std::string_view to_string(AgentAlgorithm a) noexcept;
AgentAlgorithm parse_agent_algorithm(std::string_view s);

// Actor-critic settings for per-user training runs. The learning rate is
// raised from the library default so a 50k-step job converges.
inline ACConfig service_ac_defaults() {
  ACConfig c;
  c.learning_rate = 1e-3;
  return c;
}

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  std::filesystem::path corpus;  // empty: <data_dir>/corpus.jsonl
  int clips_per_domain = 32;
  std::uint64_t clip_seed = 0;
  ClipPolicy clip_policy = ClipPolicy::UniformRandomAction;
  std::uint64_t seed = 0;
  std::string host = "127.0.0.1";
  int port = 8080;

  double beta = 0.5;
  std::int64_t agent_steps = 50000;
  int horizon = kDefaultHorizon;
  AgentAlgorithm algorithm = AgentAlgorithm::ActorCritic;
  TrainConfig reward;
  QConfig q;
  ACConfig ac = service_ac_defaults();
  // The population standing in for the HCI reward source.
  int hci_population = 25;
  std::uint64_t hci_seed = 7;
  // Questionnaire forms; a definition file overrides the built-in form.
  int quis_items = 27;
  std::filesystem::path quis_definition;
  std::filesystem::path ues_definition;

  std::filesystem::path corpus_path() const {
    return corpus.empty() ? data_dir / "corpus.jsonl" : corpus;
  }
};

void validate(const ServiceConfig& cfg);

// Every key is optional; see README for the schema.
void to_json(nlohmann::json& j, const ServiceConfig& v);
void from_json(const nlohmann::json& j, ServiceConfig& v);
ServiceConfig load_service_config(const std::filesystem::path& path);

enum class JobKind : std::uint8_t { RewardModel, Agent };
enum class JobStatus : std::uint8_t { Queued, Running, Done, Failed };

std::string_view to_string(JobKind k) noexcept;
std::string_view to_string(JobStatus s) noexcept;

class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const noexcept { return cfg_; }
  const std::vector<ClipSegment>& clips() const noexcept { return clips_; }

  // {"user_id": ..., "group"?: 1..4, "demographic"?: {...}}
  nlohmann::json create_user(const nlohmann::json& request);
  nlohmann::json get_user(const std::string& user_id) const;

  // Resumes the open session for (user, domain) if there is one; a finished
  // session cannot be restarted.
  nlohmann::json start_session(const std::string& user_id, Domain domain);
  nlohmann::json next_query(const std::string& session_id);
  // {"query_id": ..., "label": "Left"|"Right"|"Equal"|"Skip", "t"?: ms}
  nlohmann::json post_answer(const std::string& session_id, const nlohmann::json& answer);
  nlohmann::json progress(const std::string& session_id) const;
  nlohmann::json ranking(const std::string& session_id) const;
  nlohmann::json corpus(std::optional<Domain> domain) const;

  // {"domain": ..., "beta"?: ..., "steps"?: ..., "algorithm"?: ...}. A second
  // job for a user with one still queued or running is rejected.
  nlohmann::json enqueue_training(const std::string& user_id, JobKind kind,
                                  const nlohmann::json& request);
  nlohmann::json job_status(const std::string& job_id) const;
  // Blocks until the job has finished and returns its final status.
  nlohmann::json wait_job(const std::string& job_id) const;

  // {"action": ..., "next_config": ...}. NA keeps the default configuration;
  // Adaptive applies the greedy action of the user's agent to `state`
  // (the default configuration when absent).
  nlohmann::json adapted_ui(const std::string& user_id, Domain domain, Technique technique,
                            std::optional<UiConfig> state);

  // {"kind": "QUIS"|"UES", "items": [...]} for period 1 or 2.
  nlohmann::json post_questionnaire(const std::string& user_id, int period,
                                    const nlohmann::json& request);

  // Participants with both questionnaires for both periods, two rows each.
  std::vector<ResultRecord> results() const;
  std::string export_csv() const;

  // The reward the agent for (user, domain) is trained on.
  RewardProvider training_reward(const std::string& user_id, Domain domain, double beta) const;

 private:
  struct SessionSlot;
  struct UserSlot;
  struct Job;

  std::filesystem::path user_dir(const std::string& user_id) const;
  UserSlot& user(const std::string& user_id) const;
  SessionSlot& session(const std::string& session_id) const;
  void load_users();
  void load_session(const std::string& user_id, Domain domain);
  void load_jobs();
  void persist_job(const Job& job) const;
  nlohmann::json job_json(const Job& job) const;
  void run_job(const std::shared_ptr<Job>& job);
  void run_reward_job(Job& job);
  void run_agent_job(Job& job);
  std::uint64_t derived_seed(const std::string& user_id, Domain domain, std::uint64_t salt) const;

  ServiceConfig cfg_;
  QuestionnaireDef quis_;
  QuestionnaireDef ues_;
  std::vector<ClipSegment> clips_;
  ClipStore store_;

  mutable std::mutex users_mu_;
  std::map<std::string, std::unique_ptr<UserSlot>> users_;

  mutable std::mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<SessionSlot>> sessions_;

  mutable std::mutex jobs_mu_;
  mutable std::condition_variable jobs_cv_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::uint64_t next_job_ = 1;
  std::vector<std::thread> workers_;
  std::atomic<bool> stopping_{false};
};

}  // namespace adaptui
