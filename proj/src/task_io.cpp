#include "taskforge/task_io.hpp"

#include <fstream>
#include <sstream>

#include "taskforge/describer.hpp"
#include "taskforge/error.hpp"

namespace taskforge::io {

namespace {

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key) || j.at(key).is_null()) return out;
  const auto& v = j.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw SchemaError(std::string("schema field '") + key + "' must be a list");
  for (const auto& item : v) out.push_back(item.get<std::string>());
  return out;
}

Instant instant_field(const json& j, const char* key) {
  const auto text = j.at(key).get<std::string>();
  const auto t = parse_instant(text);
  if (!t) throw TaskDefinitionError(std::string("bad timestamp in field '") + key + "': " + text);
  return *t;
}

std::optional<std::string> optional_column(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  auto s = j.at(key).get<std::string>();
  if (s == "None") return std::nullopt;
  return s;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Schema schema_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("schema must be a JSON object");
  if (!j.contains("time") || !j.at("time").is_string()) {
    throw SchemaError("schema needs a 'time' column name");
  }
  std::vector<ColumnSpec> columns{{j.at("time").get<std::string>(), ColumnRole::Time}};
  for (const auto& [key, role] : {std::pair{"entity", ColumnRole::Entity},
                                  std::pair{"categorical", ColumnRole::Categorical},
                                  std::pair{"numerical", ColumnRole::Numerical}}) {
    for (auto& name : string_list(j, key)) columns.push_back({std::move(name), role});
  }
  return Schema(j.value("name", std::string{"dataset"}), std::move(columns));
}

json schema_to_json(const Schema& schema) {
  json j{{"name", schema.name()}, {"time", schema.time_column()}};
  j["entity"] = json::array();
  j["categorical"] = json::array();
  j["numerical"] = json::array();
  for (const auto& col : schema.columns()) {
    if (col.role != ColumnRole::Time) j[std::string(to_string(col.role))].push_back(col.name);
  }
  return j;
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  try {
    return schema_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw SchemaError("invalid schema JSON in " + path.string() + ": " + e.what());
  }
}

json task_to_json(const ExecutableTask& task) {
  const auto& t = task.task_template();
  json eps = nullptr;
  if (const auto* d = std::get_if<double>(&task.epsilon())) eps = *d;
  if (const auto* s = std::get_if<std::string>(&task.epsilon())) eps = *s;
  return json{{"task_id", task.id()},
              {"entity", t.entity.label()},
              {"filter_op", to_string(t.filter_op)},
              {"filter_col", t.filter_col ? json(*t.filter_col) : json(nullptr)},
              {"epsilon", eps},
              {"agg_op", to_string(t.agg_op)},
              {"agg_col", t.agg_col ? json(*t.agg_col) : json(nullptr)},
              {"window_seconds", task.window().count()},
              {"kind", to_string(task.kind())},
              {"description", describe(task)},
              {"t_base", format_instant(task.t_base())},
              {"t_terminate", format_instant(task.t_terminate())},
              {"t_star", format_instant(task.t_star())}};
}

ExecutableTask task_from_json(const json& j) {
  try {
    TaskTemplate t;
    t.entity = EntityChoice::parse(j.at("entity").get<std::string>());
    const auto fil = parse_filter_op(j.at("filter_op").get<std::string>());
    const auto agg = parse_agg_op(j.at("agg_op").get<std::string>());
    if (!fil || !agg) throw TaskDefinitionError("unknown operation in task record");
    t.filter_op = *fil;
    t.agg_op = *agg;
    t.filter_col = optional_column(j, "filter_col");
    t.agg_col = optional_column(j, "agg_col");
    Epsilon eps;
    const auto& e = j.at("epsilon");
    if (e.is_number()) eps = e.get<double>();
    if (e.is_string()) eps = e.get<std::string>();
    ExecutableTask task(std::move(t), std::move(eps), Duration{j.at("window_seconds").get<long long>()},
                        instant_field(j, "t_base"), instant_field(j, "t_terminate"),
                        instant_field(j, "t_star"));
    if (j.contains("task_id") && j.at("task_id").get<std::string>() != task.id()) {
      throw TaskDefinitionError("task_id " + j.at("task_id").get<std::string>() +
                                " does not match its fields (expected " + task.id() + ")");
    }
    return task;
  } catch (const json::exception& e) {
    throw TaskDefinitionError(std::string("malformed task record: ") + e.what());
  }
}

void write_tasks(std::ostream& out, std::span<const ExecutableTask> tasks) {
  for (const auto& t : tasks) out << task_to_json(t).dump() << '\n';
}

std::vector<json> read_json_lines(std::istream& in) {
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(json::parse(line));
  }
  return out;
}

std::vector<ExecutableTask> read_tasks(std::istream& in) {
  std::vector<ExecutableTask> out;
  for (const auto& j : read_json_lines(in)) out.push_back(task_from_json(j));
  return out;
}

json label_to_json(const Label& label) {
  if (const auto* d = std::get_if<double>(&label)) return *d;
  if (const auto* s = std::get_if<std::string>(&label)) return *s;
  return nullptr;
}

Label label_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  return Missing{};
}

json example_to_json(const LabeledExample& ex) {
  return json{{"entity", ex.entity},
              {"t_st", format_instant(ex.t_st)},
              {"t_ed", format_instant(ex.t_ed)},
              {"label", label_to_json(ex.label)}};
}

json report_to_json(const ModelReport& r) {
  return json{{"task_id", r.task_id},
              {"kind", to_string(r.kind)},
              {"metric_name", r.metric_name},
              {"n_train", r.n_train},
              {"n_validation", r.n_validation},
              {"metric", r.metric ? json(*r.metric) : json("NotApplicable")},
              {"baseline", optional_number(r.baseline)}};
}

ModelReport report_from_json(const json& j) {
  ModelReport r;
  r.task_id = j.at("task_id").get<std::string>();
  r.kind = j.at("kind").get<std::string>() == "classification" ? TaskKind::Classification
                                                               : TaskKind::Regression;
  r.metric_name = j.at("metric_name").get<std::string>();
  r.n_train = j.at("n_train").get<std::size_t>();
  r.n_validation = j.at("n_validation").get<std::size_t>();
  if (j.at("metric").is_number()) r.metric = j.at("metric").get<double>();
  if (j.at("baseline").is_number()) r.baseline = j.at("baseline").get<double>();
  return r;
}

json histogram_to_json(const MetricHistogram& h) {
  json bins = json::array();
  for (std::size_t i = 0; i < h.bins.size(); ++i) {
    bins.push_back({{"lo", static_cast<double>(i) / 10.0},
                    {"hi", static_cast<double>(i + 1) / 10.0},
                    {"count", h.bins[i]}});
  }
  return json{{"bins", bins}, {"below_zero", h.below_zero}, {"not_applicable", h.not_applicable}};
}

json validity_to_json(const TemplateValidity& v) {
  return json{{"template", to_string(v.tmpl)},
              {"description", describe(v.tmpl)},
              {"n_tasks", v.n_tasks},
              {"n_valid", v.n_valid}};
}

json iteration_to_json(const IterationLog& log) {
  json ratings = json::array();
  for (const auto& r : log.ratings) ratings.push_back({{"task_id", r.task_id}, {"y", r.y}});
  return json{{"iteration", log.iteration},
              {"batch", log.batch},
              {"ratings", ratings},
              {"idempotency_key", log.idempotency_key}};
}

IterationLog iteration_from_json(const json& j) {
  IterationLog log;
  log.iteration = j.at("iteration").get<std::size_t>();
  log.batch = j.at("batch").get<std::vector<std::string>>();
  for (const auto& r : j.at("ratings")) {
    log.ratings.push_back({r.at("task_id").get<std::string>(), r.at("y").get<int>()});
  }
  log.idempotency_key = j.value("idempotency_key", std::string{});
  return log;
}

std::vector<IterationLog> read_session_log(std::istream& in) {
  std::vector<IterationLog> out;
  for (const auto& j : read_json_lines(in)) out.push_back(iteration_from_json(j));
  return out;
}

Comparison comparison_from_json(const json& j) {
  Comparison c;
  c.task_a = j.at("task_a").get<std::string>();
  c.task_b = j.at("task_b").get<std::string>();
  const auto m = parse_outcome(j.at("meaningfulness").get<std::string>());
  const auto u = parse_outcome(j.at("usefulness").get<std::string>());
  if (!m || !u) throw std::invalid_argument("comparison outcomes must be a_wins, tie or b_wins");
  c.meaningfulness = *m;
  c.usefulness = *u;
  return c;
}

json comparison_to_json(const Comparison& c) {
  return json{{"task_a", c.task_a},
              {"task_b", c.task_b},
              {"meaningfulness", to_string(c.meaningfulness)},
              {"usefulness", to_string(c.usefulness)}};
}

std::vector<Comparison> read_comparisons(std::istream& in) {
  std::vector<Comparison> out;
  for (const auto& j : read_json_lines(in)) out.push_back(comparison_from_json(j));
  return out;
}

std::set<std::string> read_id_set(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    return json::parse(text).get<std::set<std::string>>();
  }
  std::set<std::string> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.insert(line.substr(b, e - b + 1));
  }
  return out;
}

json ranking_to_json(const GroundTruthRanking& r) {
  json order = json::array();
  for (const auto& t : r.order) {
    order.push_back({{"task_id", t.task_id},
                     {"rank", t.rank},
                     {"average_score", optional_number(t.average_score)},
                     {"comparisons", t.comparisons}});
  }
  return json{{"ranking", order}, {"meaningless", r.meaningless}, {"warnings", r.warnings}};
}

GroundTruthRanking ranking_from_json(const json& j) {
  GroundTruthRanking r;
  for (const auto& t : j.at("ranking")) {
    RankedTask task;
    task.task_id = t.at("task_id").get<std::string>();
    if (t.contains("average_score") && t.at("average_score").is_number()) {
      task.average_score = t.at("average_score").get<double>();
    }
    task.comparisons = t.value("comparisons", std::size_t{0});
    r.order.push_back(std::move(task));
  }
  if (j.contains("meaningless")) r.meaningless = j.at("meaningless").get<std::set<std::string>>();
  if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return finalize_ranking(std::move(r));
}

json simulation_to_json(const SimulationResult& r, const SimulationConfig& config) {
  const auto curves = [](const PolicyCurves& c) {
    return json{{"policy", to_string(c.policy)}, {"mean", c.mean}, {"per_repeat", c.per_repeat}};
  };
  return json{{"config",
               {{"iterations", config.iterations},
                {"k", config.k},
                {"repeats", config.repeats},
                {"gamma", config.gamma},
                {"seed", config.seed},
                {"alpha", config.alpha}}},
              {"top_count", r.top_count},
              {"lr", curves(r.lr)},
              {"pr", curves(r.pr)},
              {"ratio", r.ratio()},
              {"p_value", r.p_value}};
}

}  // namespace taskforge::io
