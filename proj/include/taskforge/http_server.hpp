#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "taskforge/service.hpp"

namespace httplib {
class Server;
}

namespace taskforge::server {

// REST binding of Service:
//   POST /projects                                   create (JSON or multipart)
//   GET  /projects/{id}                              project metadata
//   GET  /projects/{id}/tasks?offset&limit           task views
//   POST /projects/{id}/sessions                     {session_id}
//   GET  /projects/{id}/sessions/{sid}/batch?k=10    batch
//   POST /projects/{id}/sessions/{sid}/feedback      ack
//   GET  /projects/{id}/sessions/{sid}/history       full log
//   POST /projects/{id}/tasks/{task_id}/solve        ModelReport
// Errors are {"error": message} with the ApiError status.
class HttpServer {
 public:
  explicit HttpServer(Service& service, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpServer();

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; then call listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  Service& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace taskforge::server
