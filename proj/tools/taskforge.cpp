// taskforge: command-line front end for loading, enumerating,
// materializing, solving, recommending, simulating, ranking and serving.

#include <CLI11.hpp>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "taskforge/baseline_ml.hpp"
#include "taskforge/describer.hpp"
#include "taskforge/eval_harness.hpp"
#include "taskforge/http_server.hpp"
#include "taskforge/operationalizer.hpp"
#include "taskforge/recommender.hpp"
#include "taskforge/service.hpp"
#include "taskforge/task_io.hpp"

namespace fs = std::filesystem;
using namespace taskforge;
using io::json;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

Instant instant_arg(const std::string& text, const char* flag) {
  const auto t = parse_instant(text);
  if (!t) throw Error(std::string(flag) + ": cannot parse timestamp '" + text + "'");
  return *t;
}

struct DataArgs {
  std::string data;
  std::string schema;
};

struct PoolArgs {
  std::string entity = "root";
  std::string window = "1d";
  std::string t_base, t_terminate, t_star;

  TimeBounds bounds() const {
    TimeBounds b;
    if (!t_base.empty()) b.t_base = instant_arg(t_base, "--t-base");
    if (!t_terminate.empty()) b.t_terminate = instant_arg(t_terminate, "--t-terminate");
    if (!t_star.empty()) b.t_star = instant_arg(t_star, "--t-star");
    return b;
  }

  Duration duration() const {
    const auto d = parse_duration(window);
    if (!d) throw WindowError("--window: cannot parse duration '" + window + "'");
    return *d;
  }
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.data, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  cmd->add_option("--schema", a.schema, "schema JSON file")->required()->check(CLI::ExistingFile);
}

void add_pool_options(CLI::App* cmd, PoolArgs& a) {
  cmd->add_option("--entity", a.entity, "entity column or root")->capture_default_str();
  cmd->add_option("--window", a.window, "prediction window, e.g. 1d or 6h")->capture_default_str();
  cmd->add_option("--t-base", a.t_base, "first window start");
  cmd->add_option("--t-terminate", a.t_terminate, "last window end");
  cmd->add_option("--t-star", a.t_star, "train/validation split time");
}

LoadResult load(const DataArgs& a) {
  const Schema schema = io::load_schema(a.schema);
  auto in = open_in(a.data);
  return load_table(in, schema);
}

std::vector<ExecutableTask> read_pool(const std::string& path) {
  auto in = open_in(path);
  return io::read_tasks(in);
}

// --- load ---------------------------------------------------------------------

int run_load(const DataArgs& a, bool validate) {
  const LoadResult r = load(a);
  std::cout << "rows loaded: " << r.loaded << "\nrows dropped: " << r.dropped << "\n";
  if (!r.dropped_lines.empty()) {
    std::cout << "first dropped lines:";
    for (auto l : r.dropped_lines) std::cout << ' ' << l;
    std::cout << "\n";
  }
  if (!validate) return 0;
  for (const auto& c : summarize(r.table)) {
    std::cout << c.name << " [" << to_string(c.role) << "] missing=" << c.missing;
    switch (c.role) {
      case ColumnRole::Time:
        if (c.first) std::cout << " first=" << format_instant(*c.first) << " last=" << format_instant(*c.last);
        break;
      case ColumnRole::Numerical:
        if (c.min) std::cout << " min=" << format_number(*c.min) << " max=" << format_number(*c.max);
        break;
      default:
        std::cout << " distinct=" << c.cardinality;
    }
    std::cout << "\n";
  }
  return 0;
}

// --- enumerate ----------------------------------------------------------------

int run_enumerate(const std::string& schema_path, const std::string& entity, bool count_only) {
  const Schema schema = io::load_schema(schema_path);
  const auto e = EntityChoice::parse(entity);
  const auto templates = enumerate_templates(schema, e);
  std::size_t cls = 0;
  for (const auto& t : templates) cls += task_kind(t) == TaskKind::Classification;
  if (count_only) {
    std::cout << "templates: " << templates.size() << "\nregression: " << templates.size() - cls
              << "\nclassification: " << cls << "\nbound: " << template_count_bound(schema, e) << "\n";
    return 0;
  }
  for (const auto& t : templates) {
    std::cout << json{{"template", to_string(t)},
                      {"entity", t.entity.label()},
                      {"filter_op", to_string(t.filter_op)},
                      {"filter_col", t.filter_col ? json(*t.filter_col) : json()},
                      {"agg_op", to_string(t.agg_op)},
                      {"agg_col", t.agg_col ? json(*t.agg_col) : json()},
                      {"kind", to_string(task_kind(t))},
                      {"description", describe(t, Epsilon{}, std::nullopt)}}
                     .dump()
              << "\n";
  }
  return 0;
}

// --- materialize ----------------------------------------------------------------

int run_materialize(const DataArgs& d, const PoolArgs& p, const std::string& out_dir) {
  const LoadResult r = load(d);
  const auto e = EntityChoice::parse(p.entity);
  const Duration window = p.duration();
  const auto pool = operationalize(r.table, e, window, p.bounds());
  const fs::path out(out_dir);
  fs::create_directories(out / "datasets");

  auto tasks = open_out(out / "tasks.jsonl");
  io::write_tasks(tasks, pool.tasks);
  auto validity = open_out(out / "validity.jsonl");
  for (const auto& v : pool.report) validity << io::validity_to_json(v).dump() << "\n";

  if (!pool.tasks.empty()) {
    const auto& first = pool.tasks.front();
    const EntityIndex index(r.table, e);
    const auto cutoffs =
        build_cutoff_table(index, window, first.t_base(), first.t_terminate(), first.t_star());
    for (const auto& task : pool.tasks) {
      const auto data = materialize(task, r.table, cutoffs, index);
      auto f = open_out(out / "datasets" / (task.id() + ".jsonl"));
      for (const auto& ex : data.train) f << io::example_to_json(ex).dump() << "\n";
      for (const auto& ex : data.validation) f << io::example_to_json(ex).dump() << "\n";
    }
  }
  std::size_t valid_templates = 0;
  for (const auto& v : pool.report) valid_templates += v.valid();
  std::cout << "templates: " << pool.report.size() << " (" << valid_templates << " with a valid task)\n"
            << "valid tasks: " << pool.tasks.size() << "\n"
            << "written to: " << out.string() << "\n";
  return 0;
}

// --- solve ----------------------------------------------------------------------

int run_solve(const DataArgs& d, const PoolArgs& p, const std::string& pool_path,
              const std::string& task_id, const std::string& out_path, bool show_histogram) {
  const LoadResult r = load(d);
  std::vector<ExecutableTask> tasks;
  if (!pool_path.empty()) {
    tasks = read_pool(pool_path);
  } else {
    tasks = operationalize(r.table, EntityChoice::parse(p.entity), p.duration(), p.bounds()).tasks;
  }
  if (task_id != "all") {
    std::erase_if(tasks, [&](const ExecutableTask& t) { return t.id() != task_id; });
    if (tasks.empty()) throw TaskDefinitionError("no task with id " + task_id);
  }

  std::ofstream file;
  if (!out_path.empty()) file = open_out(out_path);
  std::ostream& out = out_path.empty() ? std::cout : file;

  std::vector<ModelReport> reports;
  std::size_t skipped = 0;
  std::map<std::pair<EntityChoice, Duration>, std::unique_ptr<EntityIndex>> indexes;
  for (const auto& task : tasks) {
    auto& index = indexes[{task.task_template().entity, task.window()}];
    if (!index) index = std::make_unique<EntityIndex>(r.table, task.task_template().entity);
    const auto cutoffs = build_cutoff_table(*index, task.window(), task.t_base(), task.t_terminate(),
                                            task.t_star());
    const auto data = materialize(task, r.table, cutoffs, *index);
    if (!is_valid(data) && task_id == "all") {
      ++skipped;
      continue;
    }
    reports.push_back(train_and_evaluate(task, data, r.table));
    out << io::report_to_json(reports.back()).dump() << "\n";
  }
  std::cerr << "solved " << reports.size() << " task(s)";
  if (skipped) std::cerr << ", skipped " << skipped << " invalid";
  std::cerr << "\n";
  if (show_histogram) {
    for (TaskKind kind : {TaskKind::Regression, TaskKind::Classification}) {
      std::vector<ModelReport> subset;
      for (const auto& rep : reports) {
        if (rep.kind == kind) subset.push_back(rep);
      }
      const auto h = histogram(subset);
      std::cerr << to_string(kind) << " (" << subset.size() << " tasks)\n";
      for (std::size_t b = 0; b < h.bins.size(); ++b) {
        std::cerr << "  [" << format_number(b / 10.0) << ", " << format_number((b + 1) / 10.0)
                  << (b == 9 ? "]" : ")") << " " << h.bins[b] << "\n";
      }
      if (h.below_zero) std::cerr << "  < 0 " << h.below_zero << "\n";
      if (h.not_applicable) std::cerr << "  n/a " << h.not_applicable << "\n";
    }
  }
  return 0;
}

// --- recommend ------------------------------------------------------------------

int run_recommend(const std::string& pool_path, const std::string& schema_path,
                  const SessionConfig& cfg, const std::string& session_path) {
  auto pool = std::make_shared<const TaskPool>(read_pool(pool_path));
  if (pool->empty()) throw TaskDefinitionError("the task pool is empty");
  const Schema schema = io::load_schema(schema_path);
  RecommendationSession session(pool, schema, cfg);

  std::ofstream log;
  if (!session_path.empty()) {
    if (fs::exists(session_path)) {
      auto in = open_in(session_path);
      for (const auto& it : io::read_session_log(in)) session.replay(it);
      std::cout << "resumed after iteration " << session.iteration() << "\n";
    }
    log.open(session_path, std::ios::app | std::ios::binary);
    if (!log) throw Error("cannot write " + session_path);
  }

  while (session.remaining() > 0 || session.has_open_batch()) {
    const auto batch = session.recommend_batch();
    if (batch.empty()) break;
    std::cout << "\niteration " << session.iteration() + 1 << ": rate each task 1 (useful) or 0; "
              << "blank means 0, q quits\n";
    std::vector<Rating> ratings;
    for (const auto& id : batch) {
      std::cout << "  " << describe(session.task(id)) << "\n    [" << id << "] > " << std::flush;
      std::string line;
      if (!std::getline(std::cin, line) || line == "q") {
        std::cout << "\nstopped; the open batch was not recorded\n";
        return 0;
      }
      if (line != "0" && line != "1" && !line.empty()) throw FeedbackError("rating must be 0 or 1, got '" + line + "'");
      ratings.push_back({id, line == "1" ? 1 : 0});
    }
    const auto logged = session.record_feedback(ratings);
    if (log.is_open()) log << io::iteration_to_json(logged).dump() << "\n" << std::flush;
  }
  std::cout << "pool exhausted\n";
  return 0;
}

// --- simulate -------------------------------------------------------------------

int run_simulate(const std::string& pool_path, const std::string& schema_path,
                 const std::string& ranking_src, const SimulationConfig& cfg,
                 const std::string& out_path, const std::string& csv_path) {
  std::optional<Schema> schema;
  std::shared_ptr<const TaskPool> pool;
  if (pool_path.rfind("synthetic:", 0) == 0) {
    const auto n = std::stoull(pool_path.substr(10));
    auto [s, p] = make_synthetic_pool(n, cfg.seed);
    schema = std::move(s);
    pool = std::make_shared<const TaskPool>(std::move(p));
  } else {
    if (schema_path.empty()) throw Error("--schema is required with a pool file");
    schema = io::load_schema(schema_path);
    pool = std::make_shared<const TaskPool>(read_pool(pool_path));
  }

  GroundTruthRanking ranking;
  if (ranking_src == "synthetic:planted") {
    ranking = planted_ranking(*pool, cfg.seed);
  } else {
    auto in = open_in(ranking_src);
    ranking = io::ranking_from_json(json::parse(in));
  }

  const auto result = compare_policies(pool, *schema, ranking, cfg);
  const json j = io::simulation_to_json(result, cfg);
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    open_out(out_path) << j.dump(2) << "\n";
  }
  if (!csv_path.empty()) {
    auto csv = open_out(csv_path);
    csv << "iteration,lr_mean,pr_mean\n";
    for (std::size_t i = 0; i < result.lr.mean.size(); ++i) {
      csv << i + 1 << ',' << format_number(result.lr.mean[i]) << ','
          << format_number(result.pr.mean[i]) << "\n";
    }
  }
  std::cerr << "top tasks: " << result.top_count << "  LR " << format_number(result.lr.mean.back())
            << "  PR " << format_number(result.pr.mean.back()) << "  p=" << result.p_value << "\n";
  return 0;
}

// --- rank -----------------------------------------------------------------------

int run_rank(const std::string& comparisons_path, const std::string& meaningless_path,
             const std::string& pool_path, const std::string& out_path) {
  auto in = open_in(comparisons_path);
  const auto comparisons = io::read_comparisons(in);
  std::set<std::string> meaningless;
  if (!meaningless_path.empty()) {
    auto m = open_in(meaningless_path);
    meaningless = io::read_id_set(m);
  }
  std::vector<std::string> universe;
  if (!pool_path.empty()) {
    for (const auto& t : read_pool(pool_path)) universe.push_back(t.id());
  }
  const auto ranking = rank_tasks(comparisons, meaningless, universe);
  for (const auto& w : ranking.warnings) std::cerr << "warning: " << w << "\n";
  const json j = io::ranking_to_json(ranking);
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    open_out(out_path) << j.dump(2) << "\n";
  }
  return 0;
}

// --- serve ----------------------------------------------------------------------

server::HttpServer* g_server = nullptr;

int run_serve(const server::ServiceConfig& cfg, const std::string& host, int port,
              const std::string& static_dir) {
  server::Service service(cfg);
  std::optional<fs::path> statics;
  if (!static_dir.empty()) statics = static_dir;
  server::HttpServer http(service, statics);
  g_server = &http;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "listening on " << host << ":" << port << " (data in " << cfg.data_dir.string() << ")\n";
  const bool ok = http.listen(host, port);
  g_server = nullptr;
  if (!ok) std::cerr << "could not listen on " << host << ":" << port << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"taskforge: predictive task generation and recommendation"};
  app.require_subcommand(1);

  DataArgs data;
  PoolArgs pool_args;

  auto* load_cmd = app.add_subcommand("load", "load a CSV and report row counts");
  add_data_options(load_cmd, data);
  bool validate = false;
  load_cmd->add_flag("--validate", validate, "print a per-column summary");

  auto* enum_cmd = app.add_subcommand("enumerate", "list task templates for an entity choice");
  std::string schema_path;
  std::string entity = "root";
  bool count_only = false;
  enum_cmd->add_option("--schema", schema_path, "schema JSON file")->required()->check(CLI::ExistingFile);
  enum_cmd->add_option("--entity", entity, "entity column or root")->capture_default_str();
  enum_cmd->add_flag("--count-only", count_only, "print counts only");

  auto* mat_cmd = app.add_subcommand("materialize", "build and label every valid task");
  add_data_options(mat_cmd, data);
  add_pool_options(mat_cmd, pool_args);
  std::string out_dir;
  mat_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* solve_cmd = app.add_subcommand("solve", "train the baseline model on tasks");
  add_data_options(solve_cmd, data);
  add_pool_options(solve_cmd, pool_args);
  std::string task_id = "all", solve_pool, solve_out;
  bool show_histogram = false;
  solve_cmd->add_option("--task", task_id, "task id or all")->capture_default_str();
  solve_cmd->add_option("--pool", solve_pool, "task file from materialize (default: operationalize)");
  solve_cmd->add_option("--out", solve_out, "report JSON-lines file (default stdout)");
  solve_cmd->add_flag("--histogram", show_histogram, "print metric histograms to stderr");

  auto* rec_cmd = app.add_subcommand("recommend", "interactive recommendation session");
  std::string rec_pool, rec_schema, session_path;
  SessionConfig session_cfg;
  rec_cmd->add_option("--pool", rec_pool, "task file")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--schema", rec_schema, "schema JSON file")->required()->check(CLI::ExistingFile);
  rec_cmd->add_option("--k", session_cfg.k, "batch size")->capture_default_str()->check(CLI::PositiveNumber);
  rec_cmd->add_option("--alpha", session_cfg.alpha, "meta-model regularization")->capture_default_str()->check(CLI::PositiveNumber);
  rec_cmd->add_option("--seed", session_cfg.seed, "cold-start seed")->capture_default_str();
  rec_cmd->add_option("--session", session_path, "append-only session log to resume and extend");

  auto* sim_cmd = app.add_subcommand("simulate", "compare recommendation with uniform sampling");
  std::string sim_pool, sim_schema, ranking_src = "synthetic:planted", sim_out, sim_csv;
  SimulationConfig sim_cfg;
  sim_cmd->add_option("--pool", sim_pool, "task file, or synthetic:<n>")->required();
  sim_cmd->add_option("--schema", sim_schema, "schema JSON file (with a task file)");
  sim_cmd->add_option("--ranking", ranking_src, "ranking JSON file or synthetic:planted")->capture_default_str();
  sim_cmd->add_option("--k", sim_cfg.k, "batch size")->capture_default_str();
  sim_cmd->add_option("--iterations", sim_cfg.iterations, "iterations per run")->capture_default_str();
  sim_cmd->add_option("--repeats", sim_cfg.repeats, "independent runs per policy")->capture_default_str();
  sim_cmd->add_option("--gamma", sim_cfg.gamma, "top fraction counted as good")->capture_default_str();
  sim_cmd->add_option("--seed", sim_cfg.seed, "base seed")->capture_default_str();
  sim_cmd->add_option("--alpha", sim_cfg.alpha, "meta-model regularization")->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "result JSON file (default stdout)");
  sim_cmd->add_option("--csv", sim_csv, "per-iteration means as CSV");

  auto* rank_cmd = app.add_subcommand("rank", "aggregate pairwise comparisons into a ranking");
  std::string comparisons_path, meaningless_path, rank_pool, rank_out;
  rank_cmd->add_option("--comparisons", comparisons_path, "comparison JSON-lines file")->required()->check(CLI::ExistingFile);
  rank_cmd->add_option("--meaningless", meaningless_path, "ids judged meaningless")->check(CLI::ExistingFile);
  rank_cmd->add_option("--pool", rank_pool, "task file listing every task to rank")->check(CLI::ExistingFile);
  rank_cmd->add_option("--out", rank_out, "ranking JSON file (default stdout)");

  auto* serve_cmd = app.add_subcommand("serve", "run the REST API");
  server::ServiceConfig serve_cfg;
  std::string host = "127.0.0.1", static_dir;
  int port = 8080;
  std::string data_dir = serve_cfg.data_dir.string();
  serve_cmd->add_option("--host", host, "bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "port")->capture_default_str();
  serve_cmd->add_option("--data-dir", data_dir, "project storage directory")->capture_default_str();
  serve_cmd->add_option("--static", static_dir, "directory served at /")->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--k", serve_cfg.k, "default batch size")->capture_default_str();
  serve_cmd->add_option("--alpha", serve_cfg.alpha, "default meta-model regularization")->capture_default_str();
  serve_cmd->add_option("--seed", serve_cfg.seed, "default session seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*load_cmd) return run_load(data, validate);
    if (*enum_cmd) return run_enumerate(schema_path, entity, count_only);
    if (*mat_cmd) return run_materialize(data, pool_args, out_dir);
    if (*solve_cmd) return run_solve(data, pool_args, solve_pool, task_id, solve_out, show_histogram);
    if (*rec_cmd) return run_recommend(rec_pool, rec_schema, session_cfg, session_path);
    if (*sim_cmd) return run_simulate(sim_pool, sim_schema, ranking_src, sim_cfg, sim_out, sim_csv);
    if (*rank_cmd) return run_rank(comparisons_path, meaningless_path, rank_pool, rank_out);
    if (*serve_cmd) {
      serve_cfg.data_dir = data_dir;
      return run_serve(serve_cfg, host, port, static_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
