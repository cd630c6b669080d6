#pragma once

#include <filesystem>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <vector>

#include "taskforge/baseline_ml.hpp"
#include "taskforge/eval_harness.hpp"
#include "taskforge/event_table.hpp"
#include "taskforge/operationalizer.hpp"
#include "taskforge/recommender.hpp"
#include "taskforge/task_space.hpp"

// JSON and JSON-lines forms of every persisted or exported value.
namespace taskforge::io {

using nlohmann::json;

// {"name", "time", "entity": [...], "categorical": [...], "numerical": [...]}
Schema schema_from_json(const json& j);
json schema_to_json(const Schema& schema);
Schema load_schema(const std::filesystem::path& path);

// Task export line: task_id, entity, filter_op, filter_col, epsilon,
// agg_op, agg_col, window_seconds, kind, description, t_base, t_terminate,
// t_star. Reading checks that task_id matches the other fields.
json task_to_json(const ExecutableTask& task);
ExecutableTask task_from_json(const json& j);

void write_tasks(std::ostream& out, std::span<const ExecutableTask> tasks);
std::vector<ExecutableTask> read_tasks(std::istream& in);

json label_to_json(const Label& label);
Label label_from_json(const json& j);
// {entity, t_st, t_ed, label}
json example_to_json(const LabeledExample& ex);

json report_to_json(const ModelReport& report);
ModelReport report_from_json(const json& j);
json histogram_to_json(const MetricHistogram& h);

json validity_to_json(const TemplateValidity& v);

// Session log line: {iteration, batch, ratings: [{task_id, y}], idempotency_key}
json iteration_to_json(const IterationLog& log);
IterationLog iteration_from_json(const json& j);
std::vector<IterationLog> read_session_log(std::istream& in);

// {task_a, task_b, meaningfulness, usefulness} with outcomes a_wins/tie/b_wins
Comparison comparison_from_json(const json& j);
json comparison_to_json(const Comparison& c);
std::vector<Comparison> read_comparisons(std::istream& in);
// One id per line, or a JSON array of ids.
std::set<std::string> read_id_set(std::istream& in);

json ranking_to_json(const GroundTruthRanking& r);
GroundTruthRanking ranking_from_json(const json& j);

json simulation_to_json(const SimulationResult& r, const SimulationConfig& config);

// Reads every non-blank line of `in` as JSON.
std::vector<json> read_json_lines(std::istream& in);

}  // namespace taskforge::io
