#pragma once

// HTTP+JSON front for Service. Errors are returned as {"code", "message"}
// with the status from http_status().

#include <memory>
#include <string>

#include "adaptui/error.hpp"
#include "adaptui/service.hpp"

namespace adaptui {

int http_status(ErrorCode code) noexcept;

class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds any free port. Returns the bound port; throws on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace adaptui
