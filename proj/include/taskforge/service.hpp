#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "taskforge/error.hpp"
#include "taskforge/event_table.hpp"
#include "taskforge/operationalizer.hpp"
#include "taskforge/recommender.hpp"

namespace taskforge::server {

using nlohmann::json;

// Error carrying the HTTP status it should be reported with.
class ApiError : public Error {
 public:
  ApiError(int status, const std::string& message) : Error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ServiceConfig {
  std::filesystem::path data_dir = "taskforge-data";
  double alpha = kDefaultMetaAlpha;
  std::size_t k = kDefaultBatchSize;
  std::uint64_t seed = 7;
};

struct CreateProjectRequest {
  std::string csv;
  json schema;
  std::string entity = "root";
  std::string window = "1d";
  std::optional<std::string> t_base;
  std::optional<std::string> t_terminate;
  std::optional<std::string> t_star;
};

// The Fig.-1 style loop behind the REST API. Every project lives in its own
// directory under data_dir:
//   project.json  data.csv  pool.jsonl  all_tasks.jsonl  validity.jsonl
//   sessions/<sid>/session.json  sessions/<sid>/log.jsonl
//   reports/<task_id>.json
// Projects and sessions are loaded lazily, so a fresh Service over the same
// directory resumes where a previous process stopped.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  // {project_id, pool_size, n_templates, n_tasks, loaded, dropped}
  json create_project(const CreateProjectRequest& request);
  json get_project(const std::string& project_id);
  json list_tasks(const std::string& project_id, std::size_t offset, std::size_t limit);
  // Optional body fields: seed, k, alpha.
  json create_session(const std::string& project_id, const json& options = json::object());
  // Creates the session when it does not exist yet.
  json next_batch(const std::string& project_id, const std::string& session_id,
                  std::optional<std::size_t> k = std::nullopt);
  // Body: {ratings: [{task_id, y}], idempotency_key}. Durable before ack.
  json submit_feedback(const std::string& project_id, const std::string& session_id,
                       const json& body);
  json history(const std::string& project_id, const std::string& session_id);
  // Serialized ModelReport; cached on disk, single-flight per task.
  std::string solve_task(const std::string& project_id, const std::string& task_id);

  // Number of solver runs performed by this process.
  std::size_t solver_runs() const { return solver_runs_.load(); }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Project;
  struct Session;

  std::shared_ptr<Project> project(const std::string& project_id);
  std::shared_ptr<Project> load_project(const std::string& project_id);
  std::shared_ptr<Session> session(Project& p, const std::string& session_id, bool create);
  std::shared_ptr<Session> open_session(Project& p, const std::string& session_id,
                                        const json& options);
  json task_view(Project& p, const ExecutableTask& task);
  std::string run_solver(Project& p, const ExecutableTask& task);

  ServiceConfig config_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Project>> projects_;
  std::atomic<std::size_t> solver_runs_{0};
};

}  // namespace taskforge::server
