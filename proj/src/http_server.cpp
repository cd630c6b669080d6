#include "taskforge/http_server.hpp"

#include <httplib.h>

namespace taskforge::server {

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const ApiError& e) {
      send_json(res, json{{"error", e.what()}}, e.status());
    } catch (const json::exception& e) {
      send_json(res, json{{"error", std::string("malformed JSON: ") + e.what()}}, 400);
    } catch (const Error& e) {
      send_json(res, json{{"error", e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, json{{"error", e.what()}}, 500);
    }
  };
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  try {
    return static_cast<std::size_t>(std::stoull(req.get_param_value(key)));
  } catch (const std::exception&) {
    throw ApiError(400, std::string("query parameter '") + key + "' must be a non-negative integer");
  }
}

CreateProjectRequest parse_create(const httplib::Request& req) {
  CreateProjectRequest out;
  const auto optional_text = [](const json& j, const char* key) -> std::optional<std::string> {
    if (j.contains(key) && j.at(key).is_string()) return j.at(key).get<std::string>();
    return std::nullopt;
  };
  if (req.is_multipart_form_data()) {
    const auto field = [&](const char* key) -> std::optional<std::string> {
      if (!req.has_file(key)) return std::nullopt;
      return req.get_file_value(key).content;
    };
    const auto schema = field("schema");
    const auto data = field("data") ? field("data") : field("csv");
    if (!schema || !data) throw ApiError(400, "multipart upload needs 'schema' and 'data' parts");
    out.schema = json::parse(*schema);
    out.csv = *data;
    if (auto v = field("entity")) out.entity = *v;
    if (auto v = field("window")) out.window = *v;
    out.t_base = field("t_base");
    out.t_terminate = field("t_terminate");
    out.t_star = field("t_star");
    return out;
  }
  const json body = json::parse(req.body);
  if (!body.contains("schema") || !body.contains("csv")) {
    throw ApiError(400, "request needs 'schema' and 'csv' fields");
  }
  out.schema = body.at("schema");
  out.csv = body.at("csv").get<std::string>();
  out.entity = body.value("entity", out.entity);
  if (body.contains("window")) {
    const auto& w = body.at("window");
    out.window = w.is_number() ? std::to_string(w.get<long long>()) : w.get<std::string>();
  }
  out.t_base = optional_text(body, "t_base");
  out.t_terminate = optional_text(body, "t_terminate");
  out.t_star = optional_text(body, "t_star");
  return out;
}

json body_or_empty(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

}  // namespace

HttpServer::HttpServer(Service& service, std::optional<std::filesystem::path> static_dir)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.Post("/projects", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, service_.create_project(parse_create(req)), 201);
         }));
  s.Get(R"(/projects/([A-Za-z0-9_-]+))",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, service_.get_project(req.matches[1]));
        }));
  s.Get(R"(/projects/([A-Za-z0-9_-]+)/tasks)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, service_.list_tasks(req.matches[1], query_size(req, "offset", 0),
                                             query_size(req, "limit", 50)));
        }));
  s.Post(R"(/projects/([A-Za-z0-9_-]+)/sessions)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, service_.create_session(req.matches[1], body_or_empty(req)), 201);
         }));
  s.Get(R"(/projects/([A-Za-z0-9_-]+)/sessions/([A-Za-z0-9_-]+)/batch)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          std::optional<std::size_t> k;
          if (req.has_param("k")) k = query_size(req, "k", service_.config().k);
          send_json(res, service_.next_batch(req.matches[1], req.matches[2], k));
        }));
  s.Post(R"(/projects/([A-Za-z0-9_-]+)/sessions/([A-Za-z0-9_-]+)/feedback)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, service_.submit_feedback(req.matches[1], req.matches[2], json::parse(req.body)));
         }));
  s.Get(R"(/projects/([A-Za-z0-9_-]+)/sessions/([A-Za-z0-9_-]+)/history)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, service_.history(req.matches[1], req.matches[2]));
        }));
  s.Post(R"(/projects/([A-Za-z0-9_-]+)/tasks/([A-Za-z0-9_-]+)/solve)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           res.set_content(service_.solve_task(req.matches[1], req.matches[2]), "application/json");
         }));
  if (static_dir) s.set_mount_point("/", static_dir->string());
}

HttpServer::~HttpServer() = default;

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace taskforge::server
