#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "adaptui/error.hpp"
#include "adaptui/file_io.hpp"
#include "adaptui/http_server.hpp"
#include "adaptui/service.hpp"
#include "adaptui/synthetic_user.hpp"
#include "doctest.h"
#include "httplib.h"
#include "support/oracles.hpp"

using namespace adaptui;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Fresh data directory removed on scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path = fs::temp_directory_path() /
           ("adaptui-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

ServiceConfig small_config(const fs::path& dir) {
  ServiceConfig cfg;
  cfg.data_dir = dir;
  cfg.seed = 3;
  cfg.reward.epochs = 40;
  cfg.agent_steps = 4000;
  cfg.algorithm = AgentAlgorithm::QLearning;
  cfg.q.alpha = 1.0;
  cfg.q.epsilon_decay_steps = 3000;
  return cfg;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an adaptui::Error");
  return ErrorCode::kInternal;
}

// Answers queries of a session with a persona until it is complete or
// `limit` answers have been given. Returns the number of answers.
int answer(Service& svc, const std::string& sid, const Persona& p, int limit = 1 << 20) {
  const ContextModel ctx;
  const ClipStore store = make_store(svc.clips());
  int n = 0;
  while (n < limit && !svc.progress(sid).at("complete").get<bool>()) {
    const json q = svc.next_query(sid);
    const auto label = simulated_answer(p, store.at(q.at("left")), store.at(q.at("right")), ctx);
    svc.post_answer(sid, json{{"query_id", q.at("query_id")}, {"label", to_string(label)}, {"t", svc.progress(sid).at("queries")}});
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("user registration") {
  TempDir dir;
  const ServiceConfig cfg = small_config(dir.path);
  std::set<int> groups;
  {
    Service svc(cfg);
    CHECK(fs::exists(dir.path / "corpus.jsonl"));
    CHECK(svc.clips().size() == 64);
    for (int i = 0; i < 4; ++i) {
      const json u = svc.create_user(json{{"user_id", "u" + std::to_string(i)}});
      groups.insert(u.at("group").get<int>());
      CHECK(u.contains("plan"));
    }
    CHECK(groups == std::set<int>{1, 2, 3, 4});
    CHECK(code_of([&] { svc.create_user(json{{"user_id", "u0"}}); }) == ErrorCode::kConflict);
    CHECK(code_of([&] { svc.create_user(json{{"user_id", "bad id!"}}); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { svc.create_user(json{{"user_id", "g"}, {"group", 7}}); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { svc.get_user("nobody"); }) == ErrorCode::kNotFound);
    const json explicit_group =
        svc.create_user(json{{"user_id", "x"}, {"group", 2}, {"demographic", {{"age", "25-44"}}}});
    CHECK(explicit_group.at("group") == 2);
    CHECK(explicit_group.at("plan").at("period1").at("technique") == "Adaptive");
  }
  Service again(cfg);
  const json u = again.get_user("x");
  CHECK(u.at("group") == 2);
  CHECK(u.at("demographic").at("age") == "25-44");
  CHECK(code_of([&] { again.create_user(json{{"user_id", "u2"}}); }) == ErrorCode::kConflict);
}

TEST_CASE("feedback session lifecycle") {
  TempDir dir;
  Service svc(small_config(dir.path));
  svc.create_user(json{{"user_id", "alice"}});
  const json start = svc.start_session("alice", Domain::Courses);
  const std::string sid = start.at("session_id");
  CHECK(sid == "alice.courses");
  CHECK(start.at("placed") == 1);
  CHECK(start.at("total") == 32);
  CHECK(start.at("resumed") == false);
  CHECK(code_of([&] { svc.start_session("nobody", Domain::Courses); }) == ErrorCode::kNotFound);
  CHECK(code_of([&] { svc.next_query("alice.trips"); }) == ErrorCode::kNotFound);

  const json q = svc.next_query(sid);
  CHECK(q.at("left_clip").at("steps").size() == 8);
  CHECK(code_of([&] { svc.post_answer(sid, json{{"query_id", "q7"}, {"label", "Left"}}); }) ==
        ErrorCode::kConflict);
  CHECK(code_of([&] { svc.post_answer(sid, json{{"query_id", "q0"}, {"label", "Sideways"}}); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(svc.progress(sid).at("queries") == 0);
  CHECK(svc.next_query(sid) == q);
  CHECK(code_of([&] { svc.ranking(sid); }) == ErrorCode::kFailedPrecondition);
  CHECK(svc.start_session("alice", Domain::Courses).at("resumed") == true);

  const Persona p = preset_persona("aesthetics-focused");
  answer(svc, sid, p);
  const json prog = svc.progress(sid);
  CHECK(prog.at("complete") == true);
  CHECK(prog.at("placed") == 32);
  CHECK(code_of([&] { svc.next_query(sid); }) == ErrorCode::kGone);
  CHECK(code_of([&] { svc.post_answer(sid, json{{"query_id", "q0"}, {"label", "Left"}}); }) ==
        ErrorCode::kGone);
  CHECK(code_of([&] { svc.start_session("alice", Domain::Courses); }) == ErrorCode::kConflict);

  // The same answers given directly to a library session rank identically.
  const json meta = json::parse(read_file(dir.path / "users" / "alice" / "session_courses.json"));
  auto lib = RankSession::create("alice", Domain::Courses, meta.at("clip_ids").get<std::vector<std::string>>(),
                                 meta.at("seed").get<std::uint64_t>());
  const ClipStore store = make_store(svc.clips());
  const ContextModel ctx;
  while (const auto lq = lib.next_query())
    lib.submit(lq->query_id, simulated_answer(p, store.at(lq->left), store.at(lq->right), ctx));
  CHECK(svc.ranking(sid).at("buckets") == json(lib.ranking()));
  CHECK(svc.progress(sid).at("queries") == lib.log().size());
}

TEST_CASE("restart between requests continues identically") {
  const Persona p = preset_persona("readability-focused");
  TempDir straight;
  TempDir crashed;
  {
    Service svc(small_config(straight.path));
    svc.create_user(json{{"user_id", "bob"}});
    svc.start_session("bob", Domain::Trips);
    answer(svc, "bob.trips", p);
  }
  for (int stop_after : {1, 17, 60}) {
    TempDir dir;
    {
      Service svc(small_config(dir.path));
      svc.create_user(json{{"user_id", "bob"}});
      svc.start_session("bob", Domain::Trips);
      answer(svc, "bob.trips", p, stop_after);
    }
    json before_restart;
    {
      Service svc(small_config(dir.path));
      before_restart = svc.progress("bob.trips");
      CHECK(before_restart.at("queries") == stop_after);
      CHECK(svc.start_session("bob", Domain::Trips).at("resumed") == true);
      answer(svc, "bob.trips", p);
    }
    Service a(small_config(dir.path));
    Service b(small_config(straight.path));
    CHECK(a.ranking("bob.trips") == b.ranking("bob.trips"));
    CHECK(read_file(dir.path / "users/bob/session_trips.jsonl") ==
          read_file(straight.path / "users/bob/session_trips.jsonl"));
  }

  // A torn final line is discarded on startup.
  TempDir torn;
  json next_before;
  {
    Service svc(small_config(torn.path));
    svc.create_user(json{{"user_id", "cy"}});
    svc.start_session("cy", Domain::Courses);
    answer(svc, "cy.courses", p, 5);
    next_before = svc.next_query("cy.courses");
  }
  {
    std::ofstream out(torn.path / "users/cy/session_courses.jsonl", std::ios::app);
    out << "{\"query_id\":\"q5\",\"left\":";
  }
  Service svc(small_config(torn.path));
  CHECK(svc.progress("cy.courses").at("queries") == 5);
  CHECK(svc.next_query("cy.courses") == next_before);
}

TEST_CASE("training jobs") {
  TempDir dir;
  Service svc(small_config(dir.path));
  svc.create_user(json{{"user_id", "dee"}});

  const json none = svc.wait_job(svc.enqueue_training("dee", JobKind::RewardModel, json{{"domain", "Courses"}})
                                     .at("job_id"));
  CHECK(none.at("status") == "Failed");
  CHECK(none.at("message") == "no preference data");

  const json agent_no_pref =
      svc.wait_job(svc.enqueue_training("dee", JobKind::Agent, json{{"domain", "Courses"}, {"beta", 0.5}})
                       .at("job_id"));
  CHECK(agent_no_pref.at("status") == "Failed");
  CHECK(agent_no_pref.at("message") == "no preference data");

  CHECK(code_of([&] { svc.enqueue_training("dee", JobKind::Agent, json::object()); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { svc.enqueue_training("ghost", JobKind::Agent, json{{"domain", "Trips"}}); }) ==
        ErrorCode::kNotFound);
  CHECK(code_of([&] { svc.job_status("job-999"); }) == ErrorCode::kNotFound);

  // A long job blocks a second one for the same user.
  const json slow = svc.enqueue_training(
      "dee", JobKind::Agent,
      json{{"domain", "Trips"}, {"beta", 0.0}, {"steps", 5000000}, {"algorithm", "actor_critic"}});
  CHECK(code_of([&] { svc.enqueue_training("dee", JobKind::RewardModel, json{{"domain", "Trips"}}); }) ==
        ErrorCode::kConflict);
  CHECK(fs::exists(dir.path / "jobs" / (slow.at("job_id").get<std::string>() + ".json")));
  // The service destructor interrupts it.
}

TEST_CASE("reward and agent artifacts, adapted UI") {
  TempDir dir;
  ServiceConfig cfg = small_config(dir.path);
  cfg.agent_steps = 50000;
  cfg.q.epsilon_decay_steps = 40000;
  Service svc(cfg);
  svc.create_user(json{{"user_id", "eve"}});
  svc.start_session("eve", Domain::Courses);
  answer(svc, "eve.courses", preset_persona("density-averse"));

  const json rj = svc.wait_job(svc.enqueue_training("eve", JobKind::RewardModel, json{{"domain", "Courses"}})
                                   .at("job_id"));
  REQUIRE(rj.at("status") == "Done");
  CHECK(rj.at("progress") == 1.0);
  const Mlp model = json::parse(read_file(rj.at("artifact").get<std::string>())).get<Mlp>();
  CHECK(model.layer_sizes() == std::vector<int>{16, 64, 64, 1});
  CHECK(fs::exists(dir.path / "users/eve/reward_courses.csv"));

  CHECK(code_of([&] { svc.adapted_ui("eve", Domain::Courses, Technique::Adaptive, std::nullopt); }) ==
        ErrorCode::kFailedPrecondition);
  const json na = svc.adapted_ui("eve", Domain::Courses, Technique::NA, enumerate_configs()[77]);
  CHECK(na.at("action").get<AdaptationAction>().is_noop());
  CHECK(na.at("next_config").get<UiConfig>() == kDefaultConfig);

  const json aj = svc.wait_job(svc.enqueue_training("eve", JobKind::Agent, json{{"domain", "Courses"}})
                                   .at("job_id"));
  REQUIRE(aj.at("status") == "Done");
  const AgentFile file = json::parse(read_file(aj.at("artifact").get<std::string>())).get<AgentFile>();
  CHECK(file.is_q_table());
  CHECK(file.beta == 0.5);

  // At the reward optimum a converged agent stays put; one step away it
  // takes the best single correction.
  const ContextModel ctx;
  const RewardProvider reward = svc.training_reward("eve", Domain::Courses, 0.5);
  UiConfig best = kDefaultConfig;
  double best_r = -1e300;
  for (const auto& c : enumerate_configs()) {
    const double r = reward(c, AdaptationAction::noop(), ctx);
    if (r > best_r) {
      best_r = r;
      best = c;
    }
  }
  const json at_opt = svc.adapted_ui("eve", Domain::Courses, Technique::Adaptive, best);
  CHECK(at_opt.at("action").get<AdaptationAction>().is_noop());
  CHECK(at_opt.at("next_config").get<UiConfig>() == best);
  for (Attribute attr : kAllAttributes) {
    const UiConfig off = best.with(attr, (best.get(attr) + 1) % cardinality(attr));
    const json step = svc.adapted_ui("eve", Domain::Courses, Technique::Adaptive, off);
    CHECK(step.at("next_config").get<UiConfig>() == best);
    CHECK(step.at("action").get<AdaptationAction>().index() == oracle::one_step_argmax(reward, off, ctx));
  }

  // A restarted service answers from the agent file on disk.
  const json before = svc.adapted_ui("eve", Domain::Courses, Technique::Adaptive, kDefaultConfig);
  Service restarted(cfg);
  CHECK(restarted.adapted_ui("eve", Domain::Courses, Technique::Adaptive, kDefaultConfig) == before);
  const json user = restarted.get_user("eve");
  CHECK_FALSE(user.at("domains").at("Courses").at("agent").is_null());
  CHECK(user.at("domains").at("Trips").at("agent").is_null());
}

TEST_CASE("questionnaires and export") {
  TempDir dir;
  Service svc(small_config(dir.path));
  svc.create_user(json{{"user_id", "fay"}, {"group", 3}});
  svc.create_user(json{{"user_id", "gus"}, {"group", 4}});

  const json quis = svc.post_questionnaire("fay", 1, json{{"kind", "QUIS"}, {"items", std::vector<int>(27, 7)}});
  CHECK(quis.at("score") == 7.0);
  try {
    svc.post_questionnaire("fay", 1, json{{"kind", "UES"}, {"items", std::vector<int>(30, 3)}});
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
    CHECK(std::string(e.what()).find("31") != std::string::npos);
  }
  std::vector<int> bad(27, 5);
  bad[3] = 11;
  bad[20] = 0;
  try {
    svc.post_questionnaire("fay", 1, json{{"kind", "QUIS"}, {"items", bad}});
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("4 21") != std::string::npos);
  }
  CHECK(code_of([&] { svc.post_questionnaire("fay", 3, json{{"kind", "QUIS"}, {"items", bad}}); }) ==
        ErrorCode::kInvalidArgument);

  CHECK(svc.results().empty());
  svc.post_questionnaire("fay", 1, json{{"kind", "UES"}, {"items", std::vector<int>(31, 4)}});
  svc.post_questionnaire("fay", 2, json{{"kind", "QUIS"}, {"items", std::vector<int>(27, 5)}});
  svc.post_questionnaire("fay", 2, json{{"kind", "UES"}, {"items", std::vector<int>(31, 2)}});
  svc.post_questionnaire("gus", 1, json{{"kind", "QUIS"}, {"items", std::vector<int>(27, 5)}});

  const auto rows = svc.results();
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == ResultRecord{"fay", 3, 1, Technique::Adaptive, Domain::Courses, 7.0, 4.0});
  CHECK(rows[1] == ResultRecord{"fay", 3, 2, Technique::NA, Domain::Trips, 5.0, 2.0});

  Service restarted(small_config(dir.path));
  CHECK(restarted.export_csv() == svc.export_csv());
  CHECK(parse_results(restarted.export_csv()) == rows);
}

TEST_CASE("configuration file") {
  TempDir dir;
  const json j = {{"data_dir", (dir.path / "d").string()},
                  {"beta", 0.25},
                  {"algorithm", "q_learning"},
                  {"clip_policy", "sweep"},
                  {"reward", {{"epochs", 7}}},
                  {"q_learning", {{"alpha", 0.5}}},
                  {"actor_critic", {{"workers", 2}}}};
  write_file_atomic(dir.path / "cfg.json", j.dump());
  const ServiceConfig cfg = load_service_config(dir.path / "cfg.json");
  CHECK(cfg.beta == 0.25);
  CHECK(cfg.algorithm == AgentAlgorithm::QLearning);
  CHECK(cfg.clip_policy == ClipPolicy::ScriptedSweep);
  CHECK(cfg.reward.epochs == 7);
  CHECK(cfg.reward.batch_size == 16);
  CHECK(cfg.q.alpha == 0.5);
  CHECK(cfg.ac.workers == 2);
  CHECK(cfg.ac.learning_rate == 1e-3);
  CHECK(cfg.horizon == 8);

  const json back = cfg;
  const ServiceConfig again = back.get<ServiceConfig>();
  CHECK(json(again) == back);

  write_file_atomic(dir.path / "bad.json", json{{"beta", 2.0}}.dump());
  CHECK_THROWS_AS(load_service_config(dir.path / "bad.json"), Error);
  write_file_atomic(dir.path / "bad2.json", "{not json");
  CHECK_THROWS_AS(load_service_config(dir.path / "bad2.json"), Error);
}

TEST_CASE("HTTP front end") {
  TempDir dir;
  Service svc(small_config(dir.path));
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  std::thread loop([&] { server.listen(); });
  httplib::Client cli("127.0.0.1", port);
  for (int i = 0; i < 100 && !cli.Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));

  auto post = [&](const std::string& path, const json& body) {
    return cli.Post(path.c_str(), body.dump(), "application/json");
  };

  auto r = post("/users", json{{"user_id", "hal"}});
  REQUIRE(r);
  CHECK(r->status == 201);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
  r = post("/users", json{{"user_id", "hal"}});
  CHECK(r->status == 409);
  CHECK(json::parse(r->body).at("code") == "conflict");
  r = post("/users", json{{"oops", 1}});
  CHECK(r->status == 400);
  r = cli.Post("/users", "{broken", "application/json");
  CHECK(r->status == 400);

  r = cli.Get("/sessions/hal.courses/next");
  CHECK(r->status == 404);
  CHECK(json::parse(r->body).contains("message"));

  r = post("/users/hal/sessions?domain=Courses", json::object());
  CHECK(r->status == 201);
  r = post("/users/hal/sessions", json{{"domain", "Courses"}});
  CHECK(r->status == 200);
  CHECK(json::parse(r->body).at("resumed") == true);

  r = cli.Get("/sessions/hal.courses/next");
  REQUIRE(r->status == 200);
  const json q = json::parse(r->body);
  r = post("/sessions/hal.courses/answers", json{{"query_id", "q42"}, {"label", "Left"}});
  CHECK(r->status == 409);
  r = post("/sessions/hal.courses/answers", json{{"query_id", q.at("query_id")}, {"label", "Equal"}});
  CHECK(r->status == 200);
  CHECK(json::parse(r->body).at("placed") == 2);
  r = cli.Get("/sessions/hal.courses/progress");
  CHECK(json::parse(r->body).at("queries") == 1);
  while (true) {
    r = cli.Get("/sessions/hal.courses/next");
    if (r->status != 200) break;
    post("/sessions/hal.courses/answers", json{{"query_id", json::parse(r->body).at("query_id")}, {"label", "Equal"}});
  }
  CHECK(r->status == 410);
  r = cli.Get("/sessions/hal.courses/ranking");
  CHECK(json::parse(r->body).at("buckets").size() == 1);

  r = cli.Get("/corpus?domain=Trips");
  CHECK(json::parse(r->body).size() == 32);

  r = cli.Get("/users/hal/ui?domain=Courses&technique=NA&state=Grid3,Large,Condensed,Dark,Dropdown");
  CHECK(r->status == 200);
  CHECK(json::parse(r->body).at("next_config").get<UiConfig>() == kDefaultConfig);
  r = cli.Get("/users/hal/ui?domain=Courses&technique=Adaptive");
  CHECK(r->status == 412);

  r = post("/users/hal/train/agent", json{{"domain", "Trips"}, {"beta", 0.0}, {"steps", 800}});
  CHECK(r->status == 202);
  const std::string job_id = json::parse(r->body).at("job_id");
  svc.wait_job(job_id);
  r = cli.Get(("/jobs/" + job_id).c_str());
  CHECK(json::parse(r->body).at("status") == "Done");
  r = cli.Get("/users/hal/ui?domain=Trips&technique=Adaptive&state=0");
  CHECK(r->status == 200);

  r = post("/users/hal/questionnaires/1", json{{"kind", "QUIS"}, {"items", std::vector<int>(27, 9)}});
  CHECK(r->status == 200);
  CHECK(json::parse(r->body).at("score") == 9.0);
  r = post("/users/hal/questionnaires/1", json{{"kind", "UES"}, {"items", std::vector<int>(30, 9)}});
  CHECK(r->status == 400);

  r = cli.Get("/export/results.csv");
  CHECK(r->status == 200);
  CHECK(r->body == "participant,group,period,technique,domain,satisfaction,engagement\n");

  r = cli.Options("/users");
  CHECK(r->status == 204);
  r = cli.Get("/nowhere");
  CHECK(r->status == 404);

  server.stop();
  loop.join();
}
