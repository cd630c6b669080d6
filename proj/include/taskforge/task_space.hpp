#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "taskforge/event_table.hpp"
#include "taskforge/time.hpp"

namespace taskforge {

// Declaration order is the enumeration order.
enum class FilterOp { All, Greater, Less, Eq, Neq };
enum class AggOp { Count, Sum, Avg, Min, Max, Majority };

inline constexpr std::array kFilterOps{FilterOp::All, FilterOp::Greater, FilterOp::Less,
                                       FilterOp::Eq, FilterOp::Neq};
inline constexpr std::array kAggOps{AggOp::Count, AggOp::Sum, AggOp::Avg,
                                    AggOp::Min,   AggOp::Max, AggOp::Majority};

std::string_view to_string(FilterOp op);
std::string_view to_string(AggOp op);
std::optional<FilterOp> parse_filter_op(std::string_view name);
std::optional<AggOp> parse_agg_op(std::string_view name);

// Type compatibility. `role` is nullopt for the None column.
bool supports(FilterOp op, std::optional<ColumnRole> role);
bool supports(AggOp op, std::optional<ColumnRole> role);

enum class TaskKind { Regression, Classification };
std::string_view to_string(TaskKind kind);

// (e*, fil_op, d_f, agg_op, d_g). Columns are nullopt for None.
struct TaskTemplate {
  EntityChoice entity = EntityChoice::root();
  FilterOp filter_op = FilterOp::All;
  std::optional<std::string> filter_col;
  AggOp agg_op = AggOp::Count;
  std::optional<std::string> agg_col;

  bool operator==(const TaskTemplate&) const = default;
};

// Compact form, e.g. "airline|eq_fil(is_delayed)|count_agg(None)".
std::string to_string(const TaskTemplate& t);

TaskKind task_kind(const TaskTemplate& t);

// Throws TaskDefinitionError when a column is unknown, is the time column,
// is the entity column itself, or has a role the operation does not accept.
void check_template(const Schema& schema, const TaskTemplate& t);

// Every well-typed template for one entity choice, ordered by filter op,
// filter column (None first, then schema order), agg op, agg column.
// Returns an empty list when the entity choice is not Root/Entity/Categorical.
std::vector<TaskTemplate> enumerate_templates(const Schema& schema, const EntityChoice& e_star);

// Closed-form size of enumerate_templates:
// (2M + 2N_n + 1)(M + 4N_n + 1), M = N_c + N_e (- 1 when e* is a column).
std::uint64_t template_count_bound(const Schema& schema, const EntityChoice& e_star);

// Filter hyperparameter: none (all_fil), a numeric threshold, or a category.
using Epsilon = std::variant<std::monostate, double, std::string>;
std::string format_epsilon(const Epsilon& eps);

struct Missing {
  bool operator==(const Missing&) const = default;
};
using Label = std::variant<Missing, double, std::string>;
inline bool is_missing(const Label& l) { return std::holds_alternative<Missing>(l); }
std::string format_label(const Label& l);

// A template bound to its hyperparameter and time grid. Immutable; the id
// is derived from every other field.
class ExecutableTask {
 public:
  // Throws TaskDefinitionError when epsilon does not match the filter's
  // arity and WindowError when no window fits between t_base and t_terminate
  // or t_star lies outside [t_base, t_terminate].
  ExecutableTask(TaskTemplate tmpl, Epsilon epsilon, Duration window, Instant t_base,
                 Instant t_terminate, Instant t_star);

  const TaskTemplate& task_template() const { return template_; }
  const Epsilon& epsilon() const { return epsilon_; }
  Duration window() const { return window_; }
  Instant t_base() const { return t_base_; }
  Instant t_terminate() const { return t_terminate_; }
  Instant t_star() const { return t_star_; }
  const std::string& id() const { return id_; }
  TaskKind kind() const { return task_kind(template_); }

  // Canonical text the id is hashed from.
  std::string canonical() const;

  bool operator==(const ExecutableTask& other) const { return id_ == other.id_; }

 private:
  TaskTemplate template_;
  Epsilon epsilon_;
  Duration window_;
  Instant t_base_;
  Instant t_terminate_;
  Instant t_star_;
  std::string id_;
};

// Applies one filter and one aggregate to a row subset. Column lookups
// and type checks happen once at construction.
class LabelEvaluator {
 public:
  // Throws TaskDefinitionError for ill-typed templates or an epsilon whose
  // type does not match the filter column.
  LabelEvaluator(const EventTable& table, const TaskTemplate& tmpl, Epsilon epsilon);

  bool keeps(std::size_t row) const;
  Label operator()(std::span<const std::size_t> rows) const;

 private:
  const EventTable* table_;
  FilterOp filter_op_;
  AggOp agg_op_;
  std::optional<std::size_t> filter_col_;
  std::optional<std::size_t> agg_col_;
  Epsilon epsilon_;
};

// agg_op(fil_op(rows, d_f, eps), d_g). Empty post-filter input gives 0 for
// count_agg and Missing for every other aggregate; majority ties go to the
// lexicographically smallest value.
Label compute_label(const EventTable& table, std::span<const std::size_t> rows,
                    const TaskTemplate& tmpl, const Epsilon& epsilon);

}  // namespace taskforge
