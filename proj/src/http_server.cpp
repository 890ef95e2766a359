#include "adaptui/http_server.hpp"

#include <functional>

#include "httplib.h"

namespace adaptui {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kGone: return 410;
    case ErrorCode::kFailedPrecondition: return 412;
    case ErrorCode::kInternal: return 500;
  }
  return 500;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code), json{{"code", to_string(code)}, {"message", message}});
}

// Runs `fn` and turns every failure into a JSON error response.
void guarded(httplib::Response& res, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e.code(), e.what());
  } catch (const json::exception& e) {
    send_error(res, ErrorCode::kInvalidArgument, e.what());
  } catch (const std::exception& e) {
    send_error(res, ErrorCode::kInternal, e.what());
  }
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

std::string param(const httplib::Request& req, const char* key, const json& body = json()) {
  if (req.has_param(key)) return req.get_param_value(key);
  if (body.is_object() && body.contains(key) && body.at(key).is_string()) {
    return body.at(key).get<std::string>();
  }
  throw Error(ErrorCode::kInvalidArgument, std::string(key) + " is required");
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) { routes(); }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        const ErrorCode code = res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kInvalidArgument;
        send_error(res, code, "no route");
      }
    });

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, json{{"status", "ok"}});
    });

    server.Get("/corpus", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::optional<Domain> d;
        if (req.has_param("domain")) d = parse_domain(req.get_param_value("domain"));
        send_json(res, 200, service.corpus(d));
      });
    });

    server.Post("/users", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 201, service.create_user(body_json(req))); });
    });

    server.Get(R"(/users/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service.get_user(req.matches[1])); });
    });

    server.Post(R"(/users/([A-Za-z0-9_-]+)/sessions)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    const json body = body_json(req);
                    const json out =
                        service.start_session(req.matches[1], parse_domain(param(req, "domain", body)));
                    send_json(res, out.value("resumed", false) ? 200 : 201, out);
                  });
                });

    server.Get(R"(/sessions/([A-Za-z0-9_.-]+)/next)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] { send_json(res, 200, service.next_query(req.matches[1])); });
               });

    server.Post(R"(/sessions/([A-Za-z0-9_.-]+)/answers)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    send_json(res, 200, service.post_answer(req.matches[1], body_json(req)));
                  });
                });

    server.Get(R"(/sessions/([A-Za-z0-9_.-]+)/progress)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] { send_json(res, 200, service.progress(req.matches[1])); });
               });

    server.Get(R"(/sessions/([A-Za-z0-9_.-]+)/ranking)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 guarded(res, [&] { send_json(res, 200, service.ranking(req.matches[1])); });
               });

    server.Post(R"(/users/([A-Za-z0-9_-]+)/train/(reward|agent))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    json body = body_json(req);
                    if (req.has_param("domain")) body["domain"] = req.get_param_value("domain");
                    const JobKind kind = req.matches[2] == "agent" ? JobKind::Agent : JobKind::RewardModel;
                    send_json(res, 202, service.enqueue_training(req.matches[1], kind, body));
                  });
                });

    server.Get(R"(/jobs/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service.job_status(req.matches[1])); });
    });

    server.Get(R"(/users/([A-Za-z0-9_-]+)/ui)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const Domain d = parse_domain(param(req, "domain"));
        const Technique t = req.has_param("technique") ? parse_technique(req.get_param_value("technique"))
                                                       : Technique::Adaptive;
        std::optional<UiConfig> state;
        if (req.has_param("state")) state = parse_config(req.get_param_value("state"));
        send_json(res, 200, service.adapted_ui(req.matches[1], d, t, state));
      });
    });

    server.Post(R"(/users/([A-Za-z0-9_-]+)/questionnaires/(\d+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    const int period = std::stoi(req.matches[2]);
                    send_json(res, 200, service.post_questionnaire(req.matches[1], period, body_json(req)));
                  });
                });

    server.Get("/export/results.csv", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        res.status = 200;
        res.set_content(service.export_csv(), "text/csv");
      });
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kInternal, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kInternal, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace adaptui
