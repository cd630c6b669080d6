#include "taskforge/task_space.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <unordered_map>

#include "taskforge/error.hpp"

namespace taskforge {

std::string_view to_string(FilterOp op) {
  switch (op) {
    case FilterOp::All:
      return "all_fil";
    case FilterOp::Greater:
      return "greater_fil";
    case FilterOp::Less:
      return "less_fil";
    case FilterOp::Eq:
      return "eq_fil";
    case FilterOp::Neq:
      return "neq_fil";
  }
  return "unknown";
}

std::string_view to_string(AggOp op) {
  switch (op) {
    case AggOp::Count:
      return "count_agg";
    case AggOp::Sum:
      return "sum_agg";
    case AggOp::Avg:
      return "avg_agg";
    case AggOp::Min:
      return "min_agg";
    case AggOp::Max:
      return "max_agg";
    case AggOp::Majority:
      return "majority_agg";
  }
  return "unknown";
}

std::optional<FilterOp> parse_filter_op(std::string_view name) {
  for (auto op : kFilterOps) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

std::optional<AggOp> parse_agg_op(std::string_view name) {
  for (auto op : kAggOps) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::Classification ? "classification" : "regression";
}

namespace {

bool is_textual(std::optional<ColumnRole> role) {
  return role == ColumnRole::Entity || role == ColumnRole::Categorical;
}

}  // namespace

bool supports(FilterOp op, std::optional<ColumnRole> role) {
  switch (op) {
    case FilterOp::All:
      return !role.has_value();
    case FilterOp::Greater:
    case FilterOp::Less:
      return role == ColumnRole::Numerical;
    case FilterOp::Eq:
    case FilterOp::Neq:
      return is_textual(role);
  }
  return false;
}

bool supports(AggOp op, std::optional<ColumnRole> role) {
  switch (op) {
    case AggOp::Count:
      return !role.has_value();
    case AggOp::Sum:
    case AggOp::Avg:
    case AggOp::Min:
    case AggOp::Max:
      return role == ColumnRole::Numerical;
    case AggOp::Majority:
      return is_textual(role);
  }
  return false;
}

std::string to_string(const TaskTemplate& t) {
  std::string out = t.entity.label();
  out += '|';
  out += to_string(t.filter_op);
  out += '(' + t.filter_col.value_or("None") + ")|";
  out += to_string(t.agg_op);
  out += '(' + t.agg_col.value_or("None") + ')';
  return out;
}

TaskKind task_kind(const TaskTemplate& t) {
  return t.agg_op == AggOp::Majority ? TaskKind::Classification : TaskKind::Regression;
}

namespace {

std::optional<ColumnRole> role_of(const Schema& schema, const std::optional<std::string>& column,
                                  const EntityChoice& e_star) {
  if (!column) return std::nullopt;
  const auto idx = schema.index_of(*column);
  if (!idx) throw TaskDefinitionError("unknown column '" + *column + "'");
  if (*idx == schema.time_index()) {
    throw TaskDefinitionError("the time column cannot be filtered or aggregated");
  }
  if (!e_star.is_root() && e_star.column_name() == *column) {
    throw TaskDefinitionError("column '" + *column + "' is the prediction entity");
  }
  return schema.column(*idx).role;
}

}  // namespace

void check_template(const Schema& schema, const TaskTemplate& t) {
  try {
    check_entity_choice(schema, t.entity);
  } catch (const SchemaError& e) {
    throw TaskDefinitionError(e.what());
  }
  if (!supports(t.filter_op, role_of(schema, t.filter_col, t.entity))) {
    throw TaskDefinitionError(std::string(to_string(t.filter_op)) + " does not accept column " +
                              t.filter_col.value_or("None"));
  }
  if (!supports(t.agg_op, role_of(schema, t.agg_col, t.entity))) {
    throw TaskDefinitionError(std::string(to_string(t.agg_op)) + " does not accept column " +
                              t.agg_col.value_or("None"));
  }
}

std::vector<TaskTemplate> enumerate_templates(const Schema& schema, const EntityChoice& e_star) {
  if (!e_star.is_root()) {
    const auto idx = schema.index_of(e_star.column_name());
    if (!idx) return {};
    const auto role = schema.column(*idx).role;
    if (role != ColumnRole::Entity && role != ColumnRole::Categorical) return {};
  }

  // None, then every non-time column other than e* itself.
  struct Candidate {
    std::optional<std::string> name;
    std::optional<ColumnRole> role;
  };
  std::vector<Candidate> candidates{{std::nullopt, std::nullopt}};
  for (const auto& col : schema.columns()) {
    if (col.role == ColumnRole::Time) continue;
    if (!e_star.is_root() && col.name == e_star.column_name()) continue;
    candidates.push_back({col.name, col.role});
  }

  std::vector<TaskTemplate> out;
  for (auto fil : kFilterOps) {
    for (const auto& df : candidates) {
      if (!supports(fil, df.role)) continue;
      for (auto agg : kAggOps) {
        for (const auto& dg : candidates) {
          if (!supports(agg, dg.role)) continue;
          out.push_back(TaskTemplate{e_star, fil, df.name, agg, dg.name});
        }
      }
    }
  }
  return out;
}

std::uint64_t template_count_bound(const Schema& schema, const EntityChoice& e_star) {
  const std::uint64_t n_e = schema.count(ColumnRole::Entity);
  const std::uint64_t n_c = schema.count(ColumnRole::Categorical);
  const std::uint64_t n_n = schema.count(ColumnRole::Numerical);
  std::uint64_t m = n_c + n_e;
  if (!e_star.is_root()) m -= 1;
  return (2 * m + 2 * n_n + 1) * (m + 4 * n_n + 1);
}

std::string format_epsilon(const Epsilon& eps) {
  if (const auto* d = std::get_if<double>(&eps)) return format_number(*d);
  if (const auto* s = std::get_if<std::string>(&eps)) return *s;
  return {};
}

std::string format_label(const Label& l) {
  if (const auto* d = std::get_if<double>(&l)) return format_number(*d);
  if (const auto* s = std::get_if<std::string>(&l)) return *s;
  return "missing";
}

// --- ExecutableTask -------------------------------------------------------

namespace {

bool epsilon_matches(FilterOp op, const Epsilon& eps) {
  switch (op) {
    case FilterOp::All:
      return std::holds_alternative<std::monostate>(eps);
    case FilterOp::Greater:
    case FilterOp::Less:
      return std::holds_alternative<double>(eps);
    case FilterOp::Eq:
    case FilterOp::Neq:
      return std::holds_alternative<std::string>(eps);
  }
  return false;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ExecutableTask::ExecutableTask(TaskTemplate tmpl, Epsilon epsilon, Duration window, Instant t_base,
                               Instant t_terminate, Instant t_star)
    : template_(std::move(tmpl)),
      epsilon_(std::move(epsilon)),
      window_(window),
      t_base_(t_base),
      t_terminate_(t_terminate),
      t_star_(t_star) {
  if (!epsilon_matches(template_.filter_op, epsilon_)) {
    throw TaskDefinitionError("hyperparameter does not match " +
                              std::string(to_string(template_.filter_op)));
  }
  if (window_ <= Duration::zero()) throw WindowError("prediction window must be positive");
  if (t_base_ + window_ > t_terminate_) {
    throw WindowError("no window of " + format_duration(window_) + " fits between " +
                      format_instant(t_base_) + " and " + format_instant(t_terminate_));
  }
  if (t_star_ < t_base_ || t_star_ > t_terminate_) {
    throw WindowError("split time " + format_instant(t_star_) + " is outside [t_base, t_terminate]");
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "t%016llx",
                static_cast<unsigned long long>(fnv1a(canonical())));
  id_ = buf;
}

std::string ExecutableTask::canonical() const {
  std::string out = to_string(template_);
  out += "|eps=";
  if (std::holds_alternative<double>(epsilon_)) out += "n:";
  if (std::holds_alternative<std::string>(epsilon_)) out += "s:";
  out += format_epsilon(epsilon_);
  out += "|w=" + std::to_string(window_.count());
  out += "|" + format_instant(t_base_) + "|" + format_instant(t_terminate_) + "|" +
         format_instant(t_star_);
  return out;
}

// --- label evaluation -----------------------------------------------------

LabelEvaluator::LabelEvaluator(const EventTable& table, const TaskTemplate& tmpl, Epsilon epsilon)
    : table_(&table), filter_op_(tmpl.filter_op), agg_op_(tmpl.agg_op), epsilon_(std::move(epsilon)) {
  check_template(table.schema(), tmpl);
  if (!epsilon_matches(filter_op_, epsilon_)) {
    throw TaskDefinitionError("hyperparameter type does not match " +
                              std::string(to_string(filter_op_)) + " on column " +
                              tmpl.filter_col.value_or("None"));
  }
  if (tmpl.filter_col) filter_col_ = table.schema().require(*tmpl.filter_col);
  if (tmpl.agg_col) agg_col_ = table.schema().require(*tmpl.agg_col);
}

bool LabelEvaluator::keeps(std::size_t row) const {
  switch (filter_op_) {
    case FilterOp::All:
      return true;
    case FilterOp::Greater: {
      const auto v = table_->number(*filter_col_, row);
      return v && *v > std::get<double>(epsilon_);
    }
    case FilterOp::Less: {
      const auto v = table_->number(*filter_col_, row);
      return v && *v < std::get<double>(epsilon_);
    }
    case FilterOp::Eq: {
      const auto& v = table_->text(*filter_col_, row);
      return !v.empty() && v == std::get<std::string>(epsilon_);
    }
    case FilterOp::Neq: {
      const auto& v = table_->text(*filter_col_, row);
      return !v.empty() && v != std::get<std::string>(epsilon_);
    }
  }
  return false;
}

Label LabelEvaluator::operator()(std::span<const std::size_t> rows) const {
  if (agg_op_ == AggOp::Count) {
    return static_cast<double>(std::count_if(rows.begin(), rows.end(),
                                             [this](std::size_t r) { return keeps(r); }));
  }
  if (agg_op_ == AggOp::Majority) {
    std::unordered_map<std::string_view, std::size_t> counts;
    for (std::size_t r : rows) {
      if (!keeps(r)) continue;
      const auto& v = table_->text(*agg_col_, r);
      if (!v.empty()) ++counts[v];
    }
    if (counts.empty()) return Missing{};
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second || (it->second == best->second && it->first < best->first)) {
        best = it;
      }
    }
    return std::string(best->first);
  }

  double sum = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  for (std::size_t r : rows) {
    if (!keeps(r)) continue;
    const auto v = table_->number(*agg_col_, r);
    if (!v) continue;
    sum += *v;
    lo = std::min(lo, *v);
    hi = std::max(hi, *v);
    ++n;
  }
  if (n == 0) return Missing{};
  switch (agg_op_) {
    case AggOp::Sum:
      return sum;
    case AggOp::Avg:
      return sum / static_cast<double>(n);
    case AggOp::Min:
      return lo;
    case AggOp::Max:
      return hi;
    default:
      break;
  }
  return Missing{};
}

Label compute_label(const EventTable& table, std::span<const std::size_t> rows,
                    const TaskTemplate& tmpl, const Epsilon& epsilon) {
  return LabelEvaluator(table, tmpl, epsilon)(rows);
}

}  // namespace taskforge
