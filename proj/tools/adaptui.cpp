#include <cctype>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "adaptui/error.hpp"
#include "adaptui/evaluation.hpp"
#include "adaptui/file_io.hpp"
#include "adaptui/http_server.hpp"
#include "adaptui/service.hpp"
#include "adaptui/simulation.hpp"

using namespace adaptui;
using nlohmann::json;

namespace {

struct Common {
  std::string data_dir;
  std::string config_file;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--data", data_dir, "Data directory (overrides the config file)");
    cmd->add_option("--config", config_file, "JSON service configuration")->check(CLI::ExistingFile);
  }

  ServiceConfig load() const {
    ServiceConfig cfg = config_file.empty() ? ServiceConfig{} : load_service_config(config_file);
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    return cfg;
  }
};

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int print_job(const json& job) {
  std::cout << job.dump(2) << '\n';
  return job.at("status") == "Done" ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-user adaptive UI study toolkit"};
  app.require_subcommand(1);

  // gen-clips
  auto* gen = app.add_subcommand("gen-clips", "Generate the adaptation clip corpus");
  int per_domain = 32;
  std::uint64_t clip_seed = 0;
  std::string clip_out = "corpus.jsonl";
  std::string clip_policy = "random";
  gen->add_option("--per-domain", per_domain, "Clips per domain")->check(CLI::PositiveNumber);
  gen->add_option("--seed", clip_seed, "Generator seed");
  gen->add_option("--out", clip_out, "Output JSONL file");
  gen->add_option("--policy", clip_policy, "random or sweep");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  Common serve_common;
  serve_common.add_to(serve);
  int port = -1;
  std::string host;
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--host", host, "Bind address");

  // simulate-participant
  auto* sim = app.add_subcommand("simulate-participant", "Drive the full study loop headlessly");
  Common sim_common;
  sim_common.add_to(sim);
  std::string persona_name = "readability-focused";
  SimulationOptions sim_opts;
  std::string report_path;
  sim->add_option("--persona", persona_name, "Preset persona name");
  sim->add_option("--seed", sim_opts.seed, "Simulation seed");
  sim->add_option("--user", sim_opts.user_id, "User id (default <persona>-<seed>)");
  sim->add_option("--beta", sim_opts.beta, "Weight of the personal preference model")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--steps", sim_opts.agent_steps, "Agent training steps");
  sim->add_option("--episodes", sim_opts.episodes, "Usage episodes per technique and domain");
  sim->add_option("--report", report_path, "Write the JSON report here");

  // train-reward
  auto* tr = app.add_subcommand("train-reward", "Train a user's preference model");
  Common tr_common;
  tr_common.add_to(tr);
  std::string tr_user;
  std::string tr_domain;
  tr->add_option("--user", tr_user)->required();
  tr->add_option("--domain", tr_domain)->required();

  // train-agent
  auto* ta = app.add_subcommand("train-agent", "Train a user's adaptation agent");
  Common ta_common;
  ta_common.add_to(ta);
  std::string ta_user;
  std::string ta_domain;
  std::optional<double> ta_beta;
  std::optional<std::int64_t> ta_steps;
  std::string ta_algorithm;
  ta->add_option("--user", ta_user)->required();
  ta->add_option("--domain", ta_domain)->required();
  ta->add_option("--beta", ta_beta)->check(CLI::Range(0.0, 1.0));
  ta->add_option("--steps", ta_steps);
  ta->add_option("--algorithm", ta_algorithm, "actor_critic or q_learning");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a trained agent on its training reward");
  Common ev_common;
  ev_common.add_to(ev);
  std::string ev_user;
  std::string ev_domain;
  int ev_episodes = 100;
  std::uint64_t ev_seed = 1;
  std::string ev_csv;
  ev->add_option("--user", ev_user)->required();
  ev->add_option("--domain", ev_domain)->required();
  ev->add_option("--episodes", ev_episodes)->check(CLI::PositiveNumber);
  ev->add_option("--seed", ev_seed);
  ev->add_option("--csv", ev_csv, "Per-episode log");

  // export
  auto* ex = app.add_subcommand("export", "Export questionnaire results as CSV");
  Common ex_common;
  ex_common.add_to(ex);
  std::string ex_out = "results.csv";
  ex->add_option("--out", ex_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto clips = generate_clips(per_domain, parse_clip_policy(clip_policy), clip_seed);
      std::ostringstream out;
      write_corpus(out, clips);
      write_file_atomic(clip_out, out.str());
      std::cout << "wrote " << clips.size() << " clips to " << clip_out << '\n';
      return 0;
    }

    if (*serve) {
      ServiceConfig cfg = serve_common.load();
      if (port >= 0) cfg.port = port;
      if (!host.empty()) cfg.host = host;
      Service service(cfg);
      HttpServer server(service);
      const int bound = server.bind(cfg.host, cfg.port);
      std::cout << "listening on " << cfg.host << ':' << bound << " with data in "
                << cfg.data_dir.string() << std::endl;
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      g_server = nullptr;
      return 0;
    }

    if (*sim) {
      ServiceConfig cfg = sim_common.load();
      if (sim_common.data_dir.empty() && sim_common.config_file.empty()) cfg.data_dir = "sim-data";
      Service service(cfg);
      const Persona persona = preset_persona(persona_name);
      const SimulationReport report = simulate_participant(service, persona, sim_opts);
      const json j = report;
      for (const auto& d : report.domains) {
        std::printf("%-7s queries=%zu answered=%zu adaptive=%.4f na=%.4f final=%s optimum=%s\n",
                    std::string(to_string(d.domain)).c_str(), d.queries, d.answered,
                    d.adaptive_engagement, d.na_engagement, to_compact_string(d.adaptive_final).c_str(),
                    to_compact_string(d.persona_optimum).c_str());
      }
      std::printf("user=%s group=%d adaptive=%.4f na=%.4f seconds=%.1f\n", report.user_id.c_str(),
                  report.group, report.adaptive_engagement, report.na_engagement, report.seconds);
      if (!report_path.empty()) write_file_atomic(report_path, j.dump(2));
      return 0;
    }

    if (*tr) {
      Service service(tr_common.load());
      const json job = service.enqueue_training(tr_user, JobKind::RewardModel, json{{"domain", tr_domain}});
      return print_job(service.wait_job(job.at("job_id")));
    }

    if (*ta) {
      Service service(ta_common.load());
      json request{{"domain", ta_domain}};
      if (ta_beta) request["beta"] = *ta_beta;
      if (ta_steps) request["steps"] = *ta_steps;
      if (!ta_algorithm.empty()) request["algorithm"] = ta_algorithm;
      const json job = service.enqueue_training(ta_user, JobKind::Agent, request);
      return print_job(service.wait_job(job.at("job_id")));
    }

    if (*ev) {
      const ServiceConfig cfg = ev_common.load();
      Service service(cfg);
      const Domain domain = parse_domain(ev_domain);
      std::string dn(to_string(domain));
      for (auto& c : dn) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      const std::filesystem::path agent_path = cfg.data_dir / "users" / ev_user / ("agent_" + dn + ".json");
      const AgentFile file = json::parse(read_file(agent_path)).get<AgentFile>();
      const RewardProvider reward = service.training_reward(ev_user, domain, file.beta);
      // The target is the configuration the reward rates highest to stay in.
      UiConfig target = kDefaultConfig;
      double best = -1e300;
      for (const auto& c : enumerate_configs()) {
        const double r = reward(c, AdaptationAction::noop(), ContextModel{});
        if (r > best) {
          best = r;
          target = c;
        }
      }
      EpisodeConfig env;
      env.domain = domain;
      env.horizon = cfg.horizon;
      env.start = StartMode::UniformRandom;
      env.seed = ev_seed;
      const EvalMetrics m = evaluate(greedy_policy(file), env, reward, ev_episodes, target);
      std::printf("target=%s mean_return=%.4f mean_steps_to_optimal=%.3f final_config_match_rate=%.3f\n",
                  to_compact_string(target).c_str(), m.mean_return, m.mean_steps_to_optimal,
                  m.final_config_match_rate);
      if (!ev_csv.empty()) {
        std::ostringstream out;
        write_eval_csv(out, m);
        write_file_atomic(ev_csv, out.str());
      }
      return 0;
    }

    if (*ex) {
      Service service(ex_common.load());
      const std::string csv = service.export_csv();
      write_file_atomic(ex_out, csv);
      std::cout << "wrote " << ex_out << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
