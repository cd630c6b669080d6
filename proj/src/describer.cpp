#include "taskforge/describer.hpp"

namespace taskforge {

namespace {

std::string aggregate_phrase(AggOp op, const std::optional<std::string>& column) {
  const std::string col = column.value_or("");
  switch (op) {
    case AggOp::Count:
      return "the number of records";
    case AggOp::Sum:
      return "the total of " + col;
    case AggOp::Avg:
      return "the average of " + col;
    case AggOp::Min:
      return "the minimum of " + col;
    case AggOp::Max:
      return "the maximum of " + col;
    case AggOp::Majority:
      return "the most common " + col;
  }
  return {};
}

std::string filter_phrase(FilterOp op, const std::optional<std::string>& column,
                          const Epsilon& epsilon) {
  const std::string col = column.value_or("");
  const bool bound = !std::holds_alternative<std::monostate>(epsilon);
  switch (op) {
    case FilterOp::All:
      return {};
    case FilterOp::Greater:
      return "where " + col + " is greater than " + (bound ? format_epsilon(epsilon) : "a threshold");
    case FilterOp::Less:
      return "where " + col + " is less than " + (bound ? format_epsilon(epsilon) : "a threshold");
    case FilterOp::Eq:
      return "where " + col + " is " + (bound ? format_epsilon(epsilon) : "a given value");
    case FilterOp::Neq:
      return "where " + col + " is not " + (bound ? format_epsilon(epsilon) : "a given value");
  }
  return {};
}

}  // namespace

std::string describe(const TaskTemplate& tmpl, const Epsilon& epsilon,
                     std::optional<Duration> window) {
  std::string out = tmpl.entity.is_root() ? "Over all records"
                                          : "For each " + tmpl.entity.column_name();
  out += ", predict " + aggregate_phrase(tmpl.agg_op, tmpl.agg_col);
  const std::string filter = filter_phrase(tmpl.filter_op, tmpl.filter_col, epsilon);
  if (!filter.empty()) out += " " + filter + ",";
  out += " in the next ";
  out += window ? format_duration(*window) : std::string{"window"};
  out += ".";
  return out;
}

std::string describe(const ExecutableTask& task) {
  return describe(task.task_template(), task.epsilon(), task.window());
}

}  // namespace taskforge
