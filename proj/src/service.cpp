#include "taskforge/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "taskforge/baseline_ml.hpp"
#include "taskforge/describer.hpp"
#include "taskforge/task_io.hpp"

namespace taskforge::server {

namespace fs = std::filesystem;

struct Service::Session {
  std::mutex mutex;
  std::string id;
  fs::path dir;
  std::unique_ptr<RecommendationSession> state;
  std::map<std::string, json> acks;  // idempotency key -> ack
};

struct Service::Project {
  std::string id;
  fs::path dir;
  json meta;
  std::optional<Schema> schema;
  std::optional<EventTable> table;
  std::optional<EntityIndex> index;
  CutoffTable cutoffs;
  std::shared_ptr<const TaskPool> pool;
  std::map<std::string, ExecutableTask> all_tasks;  // including invalid ones

  std::mutex mutex;  // sessions, solver cache, session counter
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::map<std::string, std::shared_future<std::string>> solving;
};

namespace {

std::string hex_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "p%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ApiError(500, "cannot write " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ApiError(500, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Appends one line and fsyncs before returning.
void append_durable(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw ApiError(500, "cannot open " + path.string());
  const std::string data = line + "\n";
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n <= 0) {
      ::close(fd);
      throw ApiError(500, "write to " + path.string() + " failed");
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

bool safe_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
  }
  return true;
}

std::optional<Instant> optional_instant(const std::optional<std::string>& text, const char* what) {
  if (!text || text->empty()) return std::nullopt;
  const auto t = parse_instant(*text);
  if (!t) throw ApiError(400, std::string("cannot parse ") + what + " '" + *text + "'");
  return t;
}

std::optional<Instant> meta_instant(const json& meta, const char* key) {
  return parse_instant(meta.at(key).get<std::string>());
}

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  fs::create_directories(config_.data_dir / "projects");
}

Service::~Service() = default;

json Service::create_project(const CreateProjectRequest& request) {
  std::optional<Schema> schema;
  try {
    schema = io::schema_from_json(request.schema);
  } catch (const Error& e) {
    throw ApiError(400, std::string("schema error: ") + e.what());
  } catch (const json::exception& e) {
    throw ApiError(400, std::string("schema error: ") + e.what());
  }
  const EntityChoice entity = EntityChoice::parse(request.entity);
  try {
    check_entity_choice(*schema, entity);
  } catch (const Error& e) {
    throw ApiError(400, std::string("entity error: ") + e.what());
  }
  const auto window = parse_duration(request.window);
  if (!window) throw ApiError(400, "cannot parse window '" + request.window + "'");
  const TimeBounds bounds{optional_instant(request.t_base, "t_base"),
                          optional_instant(request.t_terminate, "t_terminate"),
                          optional_instant(request.t_star, "t_star")};

  const std::string fingerprint = request.csv + "\x1f" + io::schema_to_json(*schema).dump() + "\x1f" +
                                  entity.label() + "\x1f" + std::to_string(window->count()) + "\x1f" +
                                  request.t_base.value_or("") + "\x1f" +
                                  request.t_terminate.value_or("") + "\x1f" +
                                  request.t_star.value_or("");
  const std::string project_id = hex_hash(fingerprint);
  const fs::path dir = config_.data_dir / "projects" / project_id;

  std::lock_guard lock(mutex_);
  if (fs::exists(dir / "project.json")) {
    json meta = json::parse(read_file(dir / "project.json"));
    return json{{"project_id", project_id},
                {"pool_size", meta.at("pool_size")},
                {"n_templates", meta.at("n_templates")},
                {"n_tasks", meta.at("n_tasks")},
                {"loaded", meta.at("loaded")},
                {"dropped", meta.at("dropped")}};
  }

  std::istringstream csv(request.csv);
  std::optional<LoadResult> loaded;
  try {
    loaded.emplace(load_table(csv, *schema));
  } catch (const Error& e) {
    throw ApiError(400, std::string("load error: ") + e.what());
  }
  ResolvedBounds resolved{};
  OperationalizedPool result;
  std::vector<ExecutableTask> all_tasks;
  try {
    resolved = resolve_bounds(loaded->table, *window, bounds);
    const TimeBounds fixed{resolved.t_base, resolved.t_terminate, resolved.t_star};
    const EntityIndex index(loaded->table, entity);
    const CutoffTable cutoffs =
        build_cutoff_table(index, *window, resolved.t_base, resolved.t_terminate, resolved.t_star);
    for (const auto& tmpl : enumerate_templates(*schema, entity)) {
      TemplateValidity validity{tmpl, 0, 0};
      for (auto& task : instantiate_tasks(tmpl, loaded->table, *window, fixed)) {
        ++validity.n_tasks;
        if (is_valid(materialize(task, loaded->table, cutoffs, index))) {
          ++validity.n_valid;
          result.tasks.push_back(task);
        }
        all_tasks.push_back(std::move(task));
      }
      result.report.push_back(std::move(validity));
    }
  } catch (const Error& e) {
    throw ApiError(400, std::string("operationalization error: ") + e.what());
  }

  const fs::path staging = config_.data_dir / "projects" / (project_id + ".tmp");
  fs::remove_all(staging);
  fs::create_directories(staging / "sessions");
  fs::create_directories(staging / "reports");
  {
    std::ostringstream data;
    write_csv(loaded->table, data);
    write_file(staging / "data.csv", data.str());
  }
  {
    std::ostringstream pool, all, validity;
    io::write_tasks(pool, result.tasks);
    io::write_tasks(all, all_tasks);
    for (const auto& v : result.report) validity << io::validity_to_json(v).dump() << '\n';
    write_file(staging / "pool.jsonl", pool.str());
    write_file(staging / "all_tasks.jsonl", all.str());
    write_file(staging / "validity.jsonl", validity.str());
  }
  json dropped_lines = loaded->dropped_lines;
  const json meta{{"project_id", project_id},
                  {"schema", io::schema_to_json(*schema)},
                  {"entity", entity.label()},
                  {"window_seconds", window->count()},
                  {"t_base", format_instant(resolved.t_base)},
                  {"t_terminate", format_instant(resolved.t_terminate)},
                  {"t_star", format_instant(resolved.t_star)},
                  {"loaded", loaded->loaded},
                  {"dropped", loaded->dropped},
                  {"dropped_lines", dropped_lines},
                  {"n_templates", result.report.size()},
                  {"n_tasks", all_tasks.size()},
                  {"pool_size", result.tasks.size()},
                  {"next_session", 1}};
  write_file(staging / "project.json", meta.dump(2));
  fs::rename(staging, dir);

  return json{{"project_id", project_id},
              {"pool_size", result.tasks.size()},
              {"n_templates", result.report.size()},
              {"n_tasks", all_tasks.size()},
              {"loaded", loaded->loaded},
              {"dropped", loaded->dropped}};
}

std::shared_ptr<Service::Project> Service::project(const std::string& project_id) {
  if (!safe_id(project_id)) throw ApiError(404, "unknown project " + project_id);
  std::lock_guard lock(mutex_);
  if (auto it = projects_.find(project_id); it != projects_.end()) return it->second;
  auto p = load_project(project_id);
  projects_[project_id] = p;
  return p;
}

std::shared_ptr<Service::Project> Service::load_project(const std::string& project_id) {
  const fs::path dir = config_.data_dir / "projects" / project_id;
  if (!fs::exists(dir / "project.json")) throw ApiError(404, "unknown project " + project_id);
  auto p = std::make_shared<Project>();
  p->id = project_id;
  p->dir = dir;
  p->meta = json::parse(read_file(dir / "project.json"));
  p->schema.emplace(io::schema_from_json(p->meta.at("schema")));
  {
    std::ifstream data(dir / "data.csv", std::ios::binary);
    p->table.emplace(load_table(data, *p->schema).table);
  }
  const EntityChoice entity = EntityChoice::parse(p->meta.at("entity").get<std::string>());
  p->index.emplace(*p->table, entity);
  p->cutoffs = build_cutoff_table(*p->index, Duration{p->meta.at("window_seconds").get<long long>()},
                                  *meta_instant(p->meta, "t_base"),
                                  *meta_instant(p->meta, "t_terminate"),
                                  *meta_instant(p->meta, "t_star"));
  {
    std::ifstream in(dir / "pool.jsonl");
    p->pool = std::make_shared<const TaskPool>(io::read_tasks(in));
  }
  {
    std::ifstream in(dir / "all_tasks.jsonl");
    for (auto& t : io::read_tasks(in)) p->all_tasks.emplace(t.id(), std::move(t));
  }
  return p;
}

json Service::get_project(const std::string& project_id) {
  auto p = project(project_id);
  json out = p->meta;
  out.erase("next_session");
  std::lock_guard lock(p->mutex);
  json sessions = json::array();
  for (const auto& entry : fs::directory_iterator(p->dir / "sessions")) {
    sessions.push_back(entry.path().filename().string());
  }
  std::sort(sessions.begin(), sessions.end());
  out["sessions"] = sessions;
  return out;
}

json Service::list_tasks(const std::string& project_id, std::size_t offset, std::size_t limit) {
  auto p = project(project_id);
  json tasks = json::array();
  const auto& pool = *p->pool;
  for (std::size_t i = offset; i < pool.size() && i < offset + limit; ++i) {
    tasks.push_back(io::task_to_json(pool[i]));
  }
  return json{{"total", pool.size()}, {"offset", offset}, {"tasks", tasks}};
}

std::shared_ptr<Service::Session> Service::open_session(Project& p, const std::string& session_id,
                                                        const json& options) {
  auto s = std::make_shared<Session>();
  s->id = session_id;
  s->dir = p.dir / "sessions" / session_id;
  SessionConfig cfg;
  if (fs::exists(s->dir / "session.json")) {
    const json stored = json::parse(read_file(s->dir / "session.json"));
    cfg.seed = stored.at("seed").get<std::uint64_t>();
    cfg.k = stored.at("k").get<std::size_t>();
    cfg.alpha = stored.at("alpha").get<double>();
  } else {
    cfg.seed = options.value("seed", config_.seed);
    cfg.k = options.value("k", config_.k);
    cfg.alpha = options.value("alpha", config_.alpha);
    if (cfg.k == 0 || !(cfg.alpha > 0)) throw ApiError(400, "k and alpha must be positive");
    fs::create_directories(s->dir);
    write_file(s->dir / "session.json",
               json{{"session_id", session_id}, {"seed", cfg.seed}, {"k", cfg.k}, {"alpha", cfg.alpha}}
                   .dump(2));
  }
  s->state = std::make_unique<RecommendationSession>(p.pool, *p.schema, cfg);
  if (fs::exists(s->dir / "log.jsonl")) {
    std::ifstream in(s->dir / "log.jsonl");
    for (const auto& log : io::read_session_log(in)) {
      s->state->replay(log);
      if (!log.idempotency_key.empty()) {
        s->acks[log.idempotency_key] =
            json{{"status", "ok"}, {"iteration", log.iteration + 1}, {"rated", log.ratings.size()}};
      }
    }
  }
  return s;
}

std::shared_ptr<Service::Session> Service::session(Project& p, const std::string& session_id,
                                                   bool create) {
  if (!safe_id(session_id)) throw ApiError(404, "unknown session " + session_id);
  std::lock_guard lock(p.mutex);
  if (auto it = p.sessions.find(session_id); it != p.sessions.end()) return it->second;
  if (!create && !fs::exists(p.dir / "sessions" / session_id / "session.json")) {
    throw ApiError(404, "unknown session " + session_id);
  }
  auto s = open_session(p, session_id, json::object());
  p.sessions[session_id] = s;
  return s;
}

json Service::create_session(const std::string& project_id, const json& options) {
  auto p = project(project_id);
  std::lock_guard lock(p->mutex);
  std::size_t n = p->meta.value("next_session", std::size_t{1});
  std::string id;
  do {
    id = "s" + std::to_string(n++);
  } while (fs::exists(p->dir / "sessions" / id));
  p->meta["next_session"] = n;
  write_file(p->dir / "project.json", p->meta.dump(2));
  auto s = open_session(*p, id, options.is_object() ? options : json::object());
  p->sessions[id] = s;
  return json{{"session_id", id},
              {"seed", s->state->config().seed},
              {"k", s->state->config().k},
              {"alpha", s->state->config().alpha}};
}

json Service::task_view(Project& p, const ExecutableTask& task) {
  json view = io::task_to_json(task);
  const TaskDataset data = materialize(task, *p.table, p.cutoffs, *p.index);
  json preview = json::array();
  for (const auto* side : {&data.train, &data.validation}) {
    for (const auto& ex : *side) {
      if (preview.size() >= 5) break;
      preview.push_back(io::example_to_json(ex));
    }
  }
  view["preview"] = preview;
  view["n_train"] = data.train.size();
  view["n_validation"] = data.validation.size();
  const fs::path cached = p.dir / "reports" / (task.id() + ".json");
  if (fs::exists(cached)) {
    view["solver"] = json{{"status", "solved"}, {"report", json::parse(read_file(cached))}};
  } else {
    view["solver"] = json{{"status", "not_solved"}};
  }
  return view;
}

json Service::next_batch(const std::string& project_id, const std::string& session_id,
                         std::optional<std::size_t> k) {
  auto p = project(project_id);
  auto s = session(*p, session_id, true);
  std::lock_guard lock(s->mutex);
  if (k && *k == 0) throw ApiError(400, "k must be positive");
  const auto& batch = s->state->recommend_batch(k);
  json tasks = json::array();
  for (const auto& id : batch) tasks.push_back(task_view(*p, s->state->task(id)));
  return json{{"session_id", session_id},
              {"iteration", s->state->iteration()},
              {"terminal", batch.empty()},
              {"remaining", s->state->remaining()},
              {"tasks", tasks}};
}

json Service::submit_feedback(const std::string& project_id, const std::string& session_id,
                              const json& body) {
  auto p = project(project_id);
  auto s = session(*p, session_id, false);
  std::lock_guard lock(s->mutex);

  const std::string key = body.value("idempotency_key", std::string{});
  if (!key.empty()) {
    if (auto it = s->acks.find(key); it != s->acks.end()) return it->second;
  }
  std::vector<Rating> ratings;
  try {
    for (const auto& r : body.at("ratings")) {
      ratings.push_back({r.at("task_id").get<std::string>(), r.at("y").get<int>()});
    }
  } catch (const json::exception& e) {
    throw ApiError(400, std::string("malformed ratings: ") + e.what());
  }
  if (!s->state->has_open_batch()) throw ApiError(409, "no open batch for this session (stale feedback)");

  IterationLog log;
  try {
    log = s->state->record_feedback(ratings, key);
  } catch (const FeedbackError& e) {
    throw ApiError(409, e.what());
  }
  try {
    append_durable(s->dir / "log.jsonl", io::iteration_to_json(log).dump());
  } catch (...) {
    // Evict; the next request replays the log.
    std::lock_guard plock(p->mutex);
    p->sessions.erase(session_id);
    throw;
  }
  json ack{{"status", "ok"}, {"iteration", log.iteration + 1}, {"rated", log.ratings.size()}};
  if (!key.empty()) s->acks[key] = ack;
  return ack;
}

json Service::history(const std::string& project_id, const std::string& session_id) {
  auto p = project(project_id);
  auto s = session(*p, session_id, false);
  std::lock_guard lock(s->mutex);
  json iterations = json::array();
  for (const auto& log : s->state->iterations()) iterations.push_back(io::iteration_to_json(log));
  json out{{"session_id", session_id},
           {"iteration", s->state->iteration()},
           {"config",
            {{"seed", s->state->config().seed},
             {"k", s->state->config().k},
             {"alpha", s->state->config().alpha}}},
           {"iterations", iterations}};
  if (s->state->has_open_batch()) out["open_batch"] = s->state->open_batch();
  return out;
}

std::string Service::run_solver(Project& p, const ExecutableTask& task) {
  ++solver_runs_;
  const TaskDataset data = materialize(task, *p.table, p.cutoffs, *p.index);
  ModelReport report;
  try {
    report = train_and_evaluate(task, data, *p.table);
  } catch (const TaskDefinitionError& e) {
    throw ApiError(422, e.what());
  }
  const std::string bytes = io::report_to_json(report).dump();
  const fs::path path = p.dir / "reports" / (task.id() + ".json");
  const fs::path tmp = path.string() + ".tmp";
  write_file(tmp, bytes);
  fs::rename(tmp, path);
  return bytes;
}

std::string Service::solve_task(const std::string& project_id, const std::string& task_id) {
  auto p = project(project_id);
  const auto it = p->all_tasks.find(task_id);
  if (it == p->all_tasks.end()) throw ApiError(404, "unknown task " + task_id);
  const ExecutableTask& task = it->second;

  std::shared_future<std::string> pending;
  std::promise<std::string> promise;
  bool owner = false;
  {
    std::lock_guard lock(p->mutex);
    const fs::path cached = p->dir / "reports" / (task_id + ".json");
    if (fs::exists(cached)) return read_file(cached);
    if (auto f = p->solving.find(task_id); f != p->solving.end()) {
      pending = f->second;
    } else {
      pending = promise.get_future().share();
      p->solving[task_id] = pending;
      owner = true;
    }
  }
  if (owner) {
    try {
      promise.set_value(run_solver(*p, task));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
    std::lock_guard lock(p->mutex);
    p->solving.erase(task_id);
  }
  return pending.get();
}

}  // namespace taskforge::server
