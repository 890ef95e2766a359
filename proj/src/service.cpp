#include "adaptui/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "adaptui/error.hpp"
#include "adaptui/evaluation.hpp"
#include "adaptui/file_io.hpp"
#include "adaptui/synthetic_user.hpp"

namespace adaptui {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Error invalid(const std::string& m) { return Error(ErrorCode::kInvalidArgument, m); }

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool valid_user_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInternal, path.string() + ": " + e.what());
  }
}

std::string clip_policy_name(ClipPolicy p) {
  return p == ClipPolicy::ScriptedSweep ? "sweep" : "random";
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json progress_json(const std::string& id, const RankSession& s) {
  return json{{"session_id", id},
              {"placed", s.placed_clips()},
              {"total", s.total_clips()},
              {"queries", s.log().size()},
              {"answered", s.answered_queries()},
              {"complete", s.complete()}};
}

}  // namespace

std::string_view to_string(AgentAlgorithm a) noexcept {
  return a == AgentAlgorithm::QLearning ? "q_learning" : "actor_critic";
}

AgentAlgorithm parse_agent_algorithm(std::string_view s) {
  if (s == "q_learning" || s == "q") return AgentAlgorithm::QLearning;
  if (s == "actor_critic" || s == "ac") return AgentAlgorithm::ActorCritic;
  throw invalid("unknown algorithm '" + std::string(s) + "'");
}

std::string_view to_string(JobKind k) noexcept { return k == JobKind::Agent ? "agent" : "reward"; }

std::string_view to_string(JobStatus s) noexcept {
  switch (s) {
    case JobStatus::Queued: return "Queued";
    case JobStatus::Running: return "Running";
    case JobStatus::Done: return "Done";
    case JobStatus::Failed: return "Failed";
  }
  return "Failed";
}

namespace {

JobStatus parse_job_status(std::string_view s) {
  for (auto st : {JobStatus::Queued, JobStatus::Running, JobStatus::Done, JobStatus::Failed}) {
    if (s == to_string(st)) return st;
  }
  throw invalid("unknown job status '" + std::string(s) + "'");
}

JobKind parse_job_kind(std::string_view s) {
  if (s == "reward") return JobKind::RewardModel;
  if (s == "agent") return JobKind::Agent;
  throw invalid("unknown job kind '" + std::string(s) + "'");
}

}  // namespace

void validate(const ServiceConfig& cfg) {
  if (cfg.clips_per_domain < 2) throw invalid("clips_per_domain must be >= 2");
  if (cfg.port < 0 || cfg.port > 65535) throw invalid("port out of range");
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw invalid("beta must be in [0,1]");
  if (cfg.agent_steps < 0) throw invalid("agent_steps must be >= 0");
  if (cfg.horizon < 1) throw invalid("horizon must be >= 1");
  if (cfg.hci_population < 1) throw invalid("hci_population must be >= 1");
  if (cfg.quis_items < 1) throw invalid("quis_items must be >= 1");
  validate(cfg.reward);
  validate(cfg.q);
  validate(cfg.ac);
}

void to_json(json& j, const ServiceConfig& v) {
  j = json{{"data_dir", v.data_dir.string()},
           {"corpus", v.corpus.string()},
           {"clips_per_domain", v.clips_per_domain},
           {"clip_seed", v.clip_seed},
           {"clip_policy", clip_policy_name(v.clip_policy)},
           {"seed", v.seed},
           {"host", v.host},
           {"port", v.port},
           {"beta", v.beta},
           {"agent_steps", v.agent_steps},
           {"horizon", v.horizon},
           {"algorithm", to_string(v.algorithm)},
           {"reward",
            {{"learning_rate", v.reward.learning_rate},
             {"epochs", v.reward.epochs},
             {"batch_size", v.reward.batch_size},
             {"l2", v.reward.l2},
             {"val_fraction", v.reward.val_fraction}}},
           {"q_learning",
            {{"alpha", v.q.alpha},
             {"gamma", v.q.gamma},
             {"epsilon_start", v.q.epsilon_start},
             {"epsilon_end", v.q.epsilon_end},
             {"epsilon_decay_steps", v.q.epsilon_decay_steps}}},
           {"actor_critic",
            {{"workers", v.ac.workers},
             {"n_step", v.ac.n_step},
             {"entropy_coef", v.ac.entropy_coef},
             {"value_coef", v.ac.value_coef},
             {"learning_rate", v.ac.learning_rate},
             {"gamma", v.ac.gamma}}},
           {"hci_population", v.hci_population},
           {"hci_seed", v.hci_seed},
           {"quis_items", v.quis_items},
           {"quis_definition", v.quis_definition.string()},
           {"ues_definition", v.ues_definition.string()}};
}

void from_json(const json& j, ServiceConfig& v) {
  ServiceConfig c;
  if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
  if (j.contains("corpus")) c.corpus = j.at("corpus").get<std::string>();
  maybe(j, "clips_per_domain", c.clips_per_domain);
  maybe(j, "clip_seed", c.clip_seed);
  if (j.contains("clip_policy")) c.clip_policy = parse_clip_policy(j.at("clip_policy").get<std::string>());
  maybe(j, "seed", c.seed);
  maybe(j, "host", c.host);
  maybe(j, "port", c.port);
  maybe(j, "beta", c.beta);
  maybe(j, "agent_steps", c.agent_steps);
  maybe(j, "horizon", c.horizon);
  if (j.contains("algorithm")) c.algorithm = parse_agent_algorithm(j.at("algorithm").get<std::string>());
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    maybe(r, "learning_rate", c.reward.learning_rate);
    maybe(r, "epochs", c.reward.epochs);
    maybe(r, "batch_size", c.reward.batch_size);
    maybe(r, "l2", c.reward.l2);
    maybe(r, "val_fraction", c.reward.val_fraction);
  }
  if (j.contains("q_learning")) {
    const auto& q = j.at("q_learning");
    maybe(q, "alpha", c.q.alpha);
    maybe(q, "gamma", c.q.gamma);
    maybe(q, "epsilon_start", c.q.epsilon_start);
    maybe(q, "epsilon_end", c.q.epsilon_end);
    maybe(q, "epsilon_decay_steps", c.q.epsilon_decay_steps);
  }
  if (j.contains("actor_critic")) {
    const auto& a = j.at("actor_critic");
    maybe(a, "workers", c.ac.workers);
    maybe(a, "n_step", c.ac.n_step);
    maybe(a, "entropy_coef", c.ac.entropy_coef);
    maybe(a, "value_coef", c.ac.value_coef);
    maybe(a, "learning_rate", c.ac.learning_rate);
    maybe(a, "gamma", c.ac.gamma);
  }
  maybe(j, "hci_population", c.hci_population);
  maybe(j, "hci_seed", c.hci_seed);
  maybe(j, "quis_items", c.quis_items);
  if (j.contains("quis_definition")) c.quis_definition = j.at("quis_definition").get<std::string>();
  if (j.contains("ues_definition")) c.ues_definition = j.at("ues_definition").get<std::string>();
  validate(c);
  v = std::move(c);
}

ServiceConfig load_service_config(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text).get<ServiceConfig>();
  } catch (const json::exception& e) {
    throw invalid(path.string() + ": " + e.what());
  }
}

struct Service::SessionSlot {
  mutable std::mutex mu;
  std::string id;
  std::string user;
  Domain domain = Domain::Courses;
  fs::path log_path;
  std::optional<RankSession> session;
};

struct Service::UserSlot {
  mutable std::mutex mu;
  std::string id;
  int group = 1;
  std::size_t index = 0;
  std::string created_at;
  json demographic = json::object();
  json questionnaires = json::object();  // {"1": {"QUIS": {...}, "UES": {...}}, ...}
  std::array<std::optional<Policy>, kNumDomains> policies;

  json record() const {
    return json{{"user_id", id},
                {"group", group},
                {"index", index},
                {"created_at", created_at},
                {"demographic", demographic}};
  }
};

struct Service::Job {
  std::string id;
  std::string user;
  Domain domain = Domain::Courses;
  JobKind kind = JobKind::RewardModel;
  JobStatus status = JobStatus::Queued;  // guarded by jobs_mu_
  std::atomic<double> progress{0.0};
  std::string message;  // guarded by jobs_mu_
  double beta = 0.5;
  std::int64_t steps = 0;
  AgentAlgorithm algorithm = AgentAlgorithm::ActorCritic;
  std::string artifact;
};

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  quis_ = cfg_.quis_definition.empty() ? default_quis(cfg_.quis_items)
                                       : load_questionnaire(read_json_file(cfg_.quis_definition));
  ues_ = cfg_.ues_definition.empty() ? default_ues()
                                     : load_questionnaire(read_json_file(cfg_.ues_definition));
  if (quis_.kind != QuestionnaireKind::Quis || ues_.kind != QuestionnaireKind::Ues) {
    throw invalid("questionnaire definition has the wrong kind");
  }
  fs::create_directories(cfg_.data_dir / "users");
  fs::create_directories(cfg_.data_dir / "jobs");

  const fs::path corpus_path = cfg_.corpus_path();
  if (fs::exists(corpus_path)) {
    std::ifstream in(corpus_path);
    clips_ = read_corpus(in);
  } else {
    clips_ = generate_clips(cfg_.clips_per_domain, cfg_.clip_policy, cfg_.clip_seed);
    std::ostringstream out;
    write_corpus(out, clips_);
    write_file_atomic(corpus_path, out.str());
  }
  store_ = make_store(clips_);
  if (store_.size() != clips_.size()) throw invalid("corpus has duplicate clip ids");

  load_users();
  load_jobs();
}

Service::~Service() {
  stopping_ = true;
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(jobs_mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers) {
    if (t.joinable()) t.join();
  }
}

fs::path Service::user_dir(const std::string& user_id) const {
  return cfg_.data_dir / "users" / user_id;
}

std::uint64_t Service::derived_seed(const std::string& user_id, Domain domain,
                                    std::uint64_t salt) const {
  return splitmix(cfg_.seed ^ splitmix(fnv1a(user_id) ^ splitmix(static_cast<std::uint64_t>(domain) * 31 + salt)));
}

Service::UserSlot& Service::user(const std::string& user_id) const {
  std::lock_guard lock(users_mu_);
  const auto it = users_.find(user_id);
  if (it == users_.end()) throw Error(ErrorCode::kNotFound, "unknown user " + user_id);
  return *it->second;
}

Service::SessionSlot& Service::session(const std::string& session_id) const {
  std::lock_guard lock(sessions_mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown session " + session_id);
  return *it->second;
}

void Service::load_users() {
  std::vector<std::unique_ptr<UserSlot>> loaded;
  for (const auto& entry : fs::directory_iterator(cfg_.data_dir / "users")) {
    const fs::path record = entry.path() / "user.json";
    if (!entry.is_directory() || !fs::exists(record)) continue;
    const json j = read_json_file(record);
    auto slot = std::make_unique<UserSlot>();
    slot->id = j.at("user_id").get<std::string>();
    slot->group = j.at("group").get<int>();
    slot->index = j.value("index", std::size_t{0});
    slot->created_at = j.value("created_at", std::string());
    slot->demographic = j.value("demographic", json::object());
    const fs::path q = entry.path() / "questionnaires.json";
    if (fs::exists(q)) slot->questionnaires = read_json_file(q);
    loaded.push_back(std::move(slot));
  }
  for (auto& slot : loaded) {
    const std::string id = slot->id;
    users_.emplace(id, std::move(slot));
    for (Domain d : kAllDomains) {
      if (fs::exists(user_dir(id) / ("session_" + lower(to_string(d)) + ".json"))) load_session(id, d);
    }
  }
}

void Service::load_session(const std::string& user_id, Domain domain) {
  const std::string stem = "session_" + lower(to_string(domain));
  const json meta = read_json_file(user_dir(user_id) / (stem + ".json"));
  auto slot = std::make_unique<SessionSlot>();
  slot->id = meta.at("session_id").get<std::string>();
  slot->user = user_id;
  slot->domain = domain;
  slot->log_path = user_dir(user_id) / (stem + ".jsonl");
  slot->session.emplace(RankSession::create(user_id, domain,
                                            meta.at("clip_ids").get<std::vector<std::string>>(),
                                            meta.at("seed").get<std::uint64_t>()));

  // Replay the answer log. A crash during an append can leave a torn last
  // line; it never reached the session, so it is dropped.
  if (fs::exists(slot->log_path)) {
    std::istringstream in(read_file(slot->log_path));
    std::string line;
    std::string kept;
    bool torn = false;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        if (in.peek() != std::char_traits<char>::eof()) {
          throw Error(ErrorCode::kInternal, "corrupt session log " + slot->log_path.string());
        }
        torn = true;
        break;
      }
      slot->session->apply(j.get<LogEntry>());
      kept += line + '\n';
    }
    if (torn) write_file_atomic(slot->log_path, kept);
  }
  sessions_.emplace(slot->id, std::move(slot));
}

void Service::load_jobs() {
  for (const auto& entry : fs::directory_iterator(cfg_.data_dir / "jobs")) {
    if (entry.path().extension() != ".json") continue;
    const json j = read_json_file(entry.path());
    auto job = std::make_shared<Job>();
    job->id = j.at("job_id").get<std::string>();
    job->user = j.at("user_id").get<std::string>();
    job->domain = j.at("domain").get<Domain>();
    job->kind = parse_job_kind(j.at("kind").get<std::string>());
    job->status = parse_job_status(j.at("status").get<std::string>());
    job->progress = j.value("progress", 0.0);
    job->message = j.value("message", std::string());
    job->beta = j.value("beta", cfg_.beta);
    job->steps = j.value("steps", std::int64_t{0});
    job->algorithm = parse_agent_algorithm(j.value("algorithm", std::string("actor_critic")));
    job->artifact = j.value("artifact", std::string());
    if (job->status == JobStatus::Queued || job->status == JobStatus::Running) {
      job->status = JobStatus::Failed;
      job->message = "interrupted by restart";
      persist_job(*job);
    }
    const auto dash = job->id.rfind('-');
    if (dash != std::string::npos) {
      try {
        next_job_ = std::max<std::uint64_t>(next_job_, std::stoull(job->id.substr(dash + 1)) + 1);
      } catch (const std::exception&) {
      }
    }
    jobs_.emplace(job->id, std::move(job));
  }
}

json Service::create_user(const json& request) {
  if (!request.is_object() || !request.contains("user_id") || !request.at("user_id").is_string()) {
    throw invalid("user_id is required");
  }
  const std::string id = request.at("user_id").get<std::string>();
  if (!valid_user_id(id)) throw invalid("user_id must be 1-64 characters of [A-Za-z0-9_-]");

  std::lock_guard lock(users_mu_);
  if (users_.count(id)) throw Error(ErrorCode::kConflict, "user " + id + " already exists");
  auto slot = std::make_unique<UserSlot>();
  slot->id = id;
  slot->index = users_.size();
  slot->group = block_group(slot->index, cfg_.seed);
  if (request.contains("group")) {
    const int g = request.at("group").get<int>();
    if (g < 1 || g > kNumGroups) throw invalid("group must be in 1..4");
    slot->group = g;
  }
  if (request.contains("demographic")) {
    if (!request.at("demographic").is_object()) throw invalid("demographic must be an object");
    slot->demographic = request.at("demographic");
  }
  slot->created_at = utc_timestamp();
  json record = slot->record();
  write_file_atomic(user_dir(id) / "user.json", record.dump(2));
  const SessionPlan sp = plan(slot->group);
  users_.emplace(id, std::move(slot));
  record["plan"] = {{"period1", {{"technique", to_string(sp.period1.technique)}, {"domain", sp.period1.domain}}},
                    {"period2", {{"technique", to_string(sp.period2.technique)}, {"domain", sp.period2.domain}}}};
  return record;
}

json Service::get_user(const std::string& user_id) const {
  const UserSlot& u = user(user_id);
  json out;
  {
    std::lock_guard lock(u.mu);
    out = u.record();
    out["questionnaires"] = u.questionnaires;
  }
  json domains = json::object();
  for (Domain d : kAllDomains) {
    const std::string dn = lower(to_string(d));
    const std::string sid = user_id + "." + dn;
    json entry;
    {
      std::lock_guard lock(sessions_mu_);
      entry["session"] = sessions_.count(sid) ? json(sid) : json(nullptr);
    }
    const fs::path reward = user_dir(user_id) / ("reward_" + dn + ".json");
    const fs::path agent = user_dir(user_id) / ("agent_" + dn + ".json");
    entry["reward_model"] = fs::exists(reward) ? json(reward.string()) : json(nullptr);
    entry["agent"] = fs::exists(agent) ? json(agent.string()) : json(nullptr);
    domains[std::string(to_string(d))] = entry;
  }
  out["domains"] = domains;
  return out;
}

json Service::start_session(const std::string& user_id, Domain domain) {
  user(user_id);
  const std::string sid = user_id + "." + lower(to_string(domain));
  std::lock_guard lock(sessions_mu_);
  if (const auto it = sessions_.find(sid); it != sessions_.end()) {
    std::lock_guard slot_lock(it->second->mu);
    if (it->second->session->complete()) {
      throw Error(ErrorCode::kConflict, "session " + sid + " is already complete");
    }
    json out = progress_json(sid, *it->second->session);
    out["resumed"] = true;
    return out;
  }

  std::vector<std::string> ids;
  for (const auto& c : clips_) {
    if (c.domain == domain) ids.push_back(c.id);
  }
  const std::uint64_t seed = derived_seed(user_id, domain, 1);
  auto slot = std::make_unique<SessionSlot>();
  slot->id = sid;
  slot->user = user_id;
  slot->domain = domain;
  const std::string stem = "session_" + lower(to_string(domain));
  slot->log_path = user_dir(user_id) / (stem + ".jsonl");
  slot->session.emplace(RankSession::create(user_id, domain, ids, seed));
  const json meta{{"session_id", sid},
                  {"user_id", user_id},
                  {"domain", domain},
                  {"seed", seed},
                  {"clip_ids", ids}};
  write_file_atomic(user_dir(user_id) / (stem + ".json"), meta.dump(2));
  write_file_atomic(slot->log_path, "");
  json out = progress_json(sid, *slot->session);
  out["resumed"] = false;
  sessions_.emplace(sid, std::move(slot));
  return out;
}

json Service::next_query(const std::string& session_id) {
  SessionSlot& slot = session(session_id);
  std::lock_guard lock(slot.mu);
  const auto q = slot.session->next_query();
  if (!q) throw Error(ErrorCode::kGone, "session " + session_id + " is complete");
  return json{{"session_id", session_id},
              {"query_id", q->query_id},
              {"left", q->left},
              {"right", q->right},
              {"left_clip", store_.at(q->left)},
              {"right_clip", store_.at(q->right)}};
}

json Service::post_answer(const std::string& session_id, const json& answer) {
  if (!answer.is_object() || !answer.contains("query_id") || !answer.contains("label")) {
    throw invalid("query_id and label are required");
  }
  const std::string query_id = answer.at("query_id").get<std::string>();
  const PreferenceLabel label = parse_label(answer.at("label").get<std::string>());
  const std::int64_t t = answer.contains("t") ? answer.at("t").get<std::int64_t>() : now_ms();

  SessionSlot& slot = session(session_id);
  std::lock_guard lock(slot.mu);
  RankSession& s = *slot.session;
  const auto q = s.next_query();
  if (!q) throw Error(ErrorCode::kGone, "session " + session_id + " is complete");
  if (q->query_id != query_id) throw Error(ErrorCode::kConflict, "query mismatch");
  // Log first: an answer that is not on disk must not change the session.
  const LogEntry entry{*q, label, t};
  append_line(slot.log_path, json(entry).dump());
  s.submit(query_id, label, t);
  json out = progress_json(session_id, s);
  if (const auto next = s.next_query()) {
    out["next"] = {{"query_id", next->query_id}, {"left", next->left}, {"right", next->right}};
  }
  return out;
}

json Service::progress(const std::string& session_id) const {
  SessionSlot& slot = session(session_id);
  std::lock_guard lock(slot.mu);
  return progress_json(session_id, *slot.session);
}

json Service::ranking(const std::string& session_id) const {
  SessionSlot& slot = session(session_id);
  std::lock_guard lock(slot.mu);
  return json{{"session_id", session_id}, {"buckets", slot.session->ranking()}};
}

json Service::corpus(std::optional<Domain> domain) const {
  json out = json::array();
  for (const auto& c : clips_) {
    if (!domain || c.domain == *domain) out.push_back(c);
  }
  return out;
}

json Service::job_json(const Job& job) const {
  json j{{"job_id", job.id},
         {"user_id", job.user},
         {"domain", job.domain},
         {"kind", to_string(job.kind)},
         {"status", to_string(job.status)},
         {"progress", job.progress.load()},
         {"message", job.message},
         {"artifact", job.artifact}};
  if (job.kind == JobKind::Agent) {
    j["beta"] = job.beta;
    j["steps"] = job.steps;
    j["algorithm"] = to_string(job.algorithm);
  }
  return j;
}

void Service::persist_job(const Job& job) const {
  write_file_atomic(cfg_.data_dir / "jobs" / (job.id + ".json"), job_json(job).dump(2));
}

json Service::enqueue_training(const std::string& user_id, JobKind kind, const json& request) {
  user(user_id);
  if (!request.is_object() || !request.contains("domain")) throw invalid("domain is required");
  auto job = std::make_shared<Job>();
  job->user = user_id;
  job->kind = kind;
  job->domain = parse_domain(request.at("domain").get<std::string>());
  job->beta = request.value("beta", cfg_.beta);
  job->steps = request.value("steps", cfg_.agent_steps);
  job->algorithm = request.contains("algorithm")
                       ? parse_agent_algorithm(request.at("algorithm").get<std::string>())
                       : cfg_.algorithm;
  if (!(job->beta >= 0.0 && job->beta <= 1.0)) throw invalid("beta must be in [0,1]");
  if (job->steps < 0) throw invalid("steps must be >= 0");

  std::lock_guard lock(jobs_mu_);
  if (stopping_) throw Error(ErrorCode::kFailedPrecondition, "service is shutting down");
  for (const auto& [id, other] : jobs_) {
    if (other->user == user_id &&
        (other->status == JobStatus::Queued || other->status == JobStatus::Running)) {
      throw Error(ErrorCode::kConflict, "job " + id + " is still active for user " + user_id);
    }
  }
  job->id = "job-" + std::to_string(next_job_++);
  persist_job(*job);
  jobs_.emplace(job->id, job);
  workers_.emplace_back([this, job] { run_job(job); });
  return job_json(*job);
}

json Service::job_status(const std::string& job_id) const {
  std::lock_guard lock(jobs_mu_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::kNotFound, "unknown job " + job_id);
  return job_json(*it->second);
}

json Service::wait_job(const std::string& job_id) const {
  std::unique_lock lock(jobs_mu_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::kNotFound, "unknown job " + job_id);
  const Job& job = *it->second;
  jobs_cv_.wait(lock, [&] { return job.status == JobStatus::Done || job.status == JobStatus::Failed; });
  return job_json(job);
}

void Service::run_job(const std::shared_ptr<Job>& job) {
  {
    std::lock_guard lock(jobs_mu_);
    job->status = JobStatus::Running;
    persist_job(*job);
  }
  JobStatus final_status = JobStatus::Done;
  std::string message;
  try {
    if (job->kind == JobKind::RewardModel) {
      run_reward_job(*job);
    } else {
      run_agent_job(*job);
    }
    job->progress = 1.0;
  } catch (const std::exception& e) {
    final_status = JobStatus::Failed;
    message = e.what();
  }
  {
    std::lock_guard lock(jobs_mu_);
    job->status = final_status;
    if (final_status == JobStatus::Failed) job->message = message;
    persist_job(*job);
  }
  jobs_cv_.notify_all();
}

void Service::run_reward_job(Job& job) {
  std::vector<PreferencePair> pairs;
  {
    std::lock_guard lock(sessions_mu_);
    const auto it = sessions_.find(job.user + "." + lower(to_string(job.domain)));
    if (it != sessions_.end()) {
      std::lock_guard slot_lock(it->second->mu);
      pairs = it->second->session->training_pairs();
    }
  }
  if (pairs.empty()) throw Error(ErrorCode::kFailedPrecondition, "no preference data");

  TrainConfig tc = cfg_.reward;
  tc.seed = derived_seed(job.user, job.domain, 2);
  auto on_progress = [&](double f) {
    job.progress = f;
    if (stopping_) throw Error(ErrorCode::kInternal, "service stopped");
  };
  const TrainResult result =
      train(make_reward_model(derived_seed(job.user, job.domain, 3)), pairs, store_, tc, on_progress);

  const std::string dn = lower(to_string(job.domain));
  const fs::path model_path = user_dir(job.user) / ("reward_" + dn + ".json");
  std::ostringstream csv;
  write_loss_csv(csv, result.curve);
  write_file_atomic(user_dir(job.user) / ("reward_" + dn + ".csv"), csv.str());
  write_file_atomic(model_path, json(result.model).dump());

  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu pairs, final train loss %.4f", pairs.size(),
                result.curve.back().train_loss);
  std::lock_guard lock(jobs_mu_);
  job.artifact = model_path.string();
  job.message = buf;
}

RewardProvider Service::training_reward(const std::string& user_id, Domain domain,
                                        double beta) const {
  user(user_id);
  RewardProvider hf = zero_reward();
  if (beta > 0.0) {
    const fs::path model_path = user_dir(user_id) / ("reward_" + lower(to_string(domain)) + ".json");
    if (!fs::exists(model_path)) {
      bool has_pairs = false;
      {
        std::lock_guard lock(sessions_mu_);
        const auto it = sessions_.find(user_id + "." + lower(to_string(domain)));
        if (it != sessions_.end()) {
          std::lock_guard slot_lock(it->second->mu);
          has_pairs = !it->second->session->training_pairs().empty();
        }
      }
      throw Error(ErrorCode::kFailedPrecondition,
                  has_pairs ? "no reward model; train the reward model first" : "no preference data");
    }
    hf = model_reward(read_json_file(model_path).get<Mlp>(), domain);
  }
  RewardProvider hci = population_reward(make_personas(cfg_.hci_population, cfg_.hci_seed), domain);
  return calibrated_dual_reward(hci, hf, beta, ContextModel{});
}

void Service::run_agent_job(Job& job) {
  const RewardProvider reward = training_reward(job.user, job.domain, job.beta);
  EpisodeConfig env;
  env.domain = job.domain;
  env.horizon = cfg_.horizon;
  env.start = StartMode::UniformRandom;
  env.seed = derived_seed(job.user, job.domain, 4);
  auto on_progress = [&](double f) {
    job.progress = f;
    if (stopping_) throw Error(ErrorCode::kInternal, "service stopped");
  };

  AgentFile file;
  file.domain = job.domain;
  file.beta = job.beta;
  file.steps = job.steps;
  if (job.algorithm == AgentAlgorithm::QLearning) {
    QConfig qc = cfg_.q;
    qc.episodes = static_cast<int>((job.steps + cfg_.horizon - 1) / cfg_.horizon);
    qc.seed = derived_seed(job.user, job.domain, 5);
    file.agent = q_train(env, reward, qc, QTable(), on_progress);
  } else {
    ACConfig ac = cfg_.ac;
    ac.total_steps = job.steps;
    ac.seed = derived_seed(job.user, job.domain, 5);
    file.agent = ac_train(env, reward, ac, ACModel(ac.seed), on_progress);
  }

  const fs::path path = user_dir(job.user) / ("agent_" + lower(to_string(job.domain)) + ".json");
  write_file_atomic(path, json(file).dump());
  UserSlot& u = user(job.user);
  {
    std::lock_guard lock(u.mu);
    u.policies[static_cast<std::size_t>(job.domain)] = greedy_policy(file);
  }
  std::lock_guard lock(jobs_mu_);
  job.artifact = path.string();
  job.message = std::string(to_string(job.algorithm)) + ", " + std::to_string(job.steps) + " steps";
}

json Service::adapted_ui(const std::string& user_id, Domain domain, Technique technique,
                         std::optional<UiConfig> state) {
  UserSlot& u = user(user_id);
  if (technique == Technique::NA) {
    return json{{"technique", "NA"},
                {"action", AdaptationAction::noop()},
                {"next_config", kDefaultConfig}};
  }
  const UiConfig current = state.value_or(kDefaultConfig);
  std::lock_guard lock(u.mu);
  auto& policy = u.policies[static_cast<std::size_t>(domain)];
  if (!policy) {
    const fs::path path = user_dir(user_id) / ("agent_" + lower(to_string(domain)) + ".json");
    if (!fs::exists(path)) {
      throw Error(ErrorCode::kFailedPrecondition,
                  "no agent trained for " + user_id + " in " + std::string(to_string(domain)));
    }
    const AgentFile file = read_json_file(path).get<AgentFile>();
    if (file.domain != domain) throw Error(ErrorCode::kInternal, "agent file domain mismatch");
    policy = greedy_policy(file);
  }
  AdaptationAction action = (*policy)(current, domain);
  // Re-assigning the value already shown changes nothing; report it as NoOp.
  const UiConfig next = apply_action(current, action);
  if (next == current) action = AdaptationAction::noop();
  return json{{"technique", "Adaptive"},
              {"action", action},
              {"next_config", next}};
}

json Service::post_questionnaire(const std::string& user_id, int period, const json& request) {
  if (period != 1 && period != 2) throw invalid("period must be 1 or 2");
  if (!request.is_object() || !request.contains("kind") || !request.contains("items")) {
    throw invalid("kind and items are required");
  }
  const QuestionnaireKind kind = parse_questionnaire_kind(request.at("kind").get<std::string>());
  std::vector<int> items;
  for (const auto& v : request.at("items")) {
    if (!v.is_number_integer()) throw invalid("questionnaire items must be integers");
    items.push_back(v.get<int>());
  }
  const QuestionnaireDef& def = kind == QuestionnaireKind::Quis ? quis_ : ues_;
  const ResponseProblems problems = check_response(items, def);
  if (!problems.ok()) throw invalid(problems.describe(def.items.size()));

  json stored{{"items", items}};
  json out{{"user_id", user_id}, {"period", period}, {"kind", to_string(kind)}};
  if (kind == QuestionnaireKind::Quis) {
    double sum = 0.0;
    for (int v : items) sum += v;
    const double score = sum / static_cast<double>(items.size());
    stored["score"] = score;
    out["score"] = score;
  } else {
    const UesScore score = ues_score(items, def);
    stored["score"] = score.overall;
    stored["per_dimension"] = score.per_dimension;
    out["score"] = score.overall;
    out["per_dimension"] = score.per_dimension;
  }

  UserSlot& u = user(user_id);
  std::lock_guard lock(u.mu);
  json updated = u.questionnaires;
  updated[std::to_string(period)][std::string(to_string(kind))] = stored;
  write_file_atomic(user_dir(user_id) / "questionnaires.json", updated.dump(2));
  u.questionnaires = std::move(updated);
  return out;
}

std::vector<ResultRecord> Service::results() const {
  std::vector<const UserSlot*> slots;
  {
    std::lock_guard lock(users_mu_);
    for (const auto& [id, slot] : users_) slots.push_back(slot.get());
  }
  std::vector<ResultRecord> records;
  for (const UserSlot* u : slots) {
    std::lock_guard lock(u->mu);
    const auto complete = [&](int p) {
      const std::string key = std::to_string(p);
      return u->questionnaires.contains(key) && u->questionnaires[key].contains("QUIS") &&
             u->questionnaires[key].contains("UES");
    };
    if (!complete(1) || !complete(2)) continue;
    const SessionPlan sp = plan(u->group);
    for (int p = 1; p <= 2; ++p) {
      const json& q = u->questionnaires[std::to_string(p)];
      records.push_back(ResultRecord{u->id, u->group, p, sp.period(p).technique, sp.period(p).domain,
                                     q["QUIS"]["score"].get<double>(),
                                     q["UES"]["score"].get<double>()});
    }
  }
  return records;
}

std::string Service::export_csv() const { return export_results(results()); }

}  // namespace adaptui
