#include "taskforge/operationalizer.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <random>
#include <unordered_map>

#include "taskforge/error.hpp"

namespace taskforge {

Instant default_split(Instant t_base, Instant t_terminate, Duration window) {
  const auto k = (t_terminate - t_base) / window;
  const auto train_windows =
      static_cast<long long>(std::ceil(kDefaultTrainFraction * static_cast<double>(k)));
  return t_base + train_windows * window;
}

ResolvedBounds resolve_bounds(const EventTable& table, Duration window, const TimeBounds& bounds) {
  if (window <= Duration::zero()) throw WindowError("prediction window must be positive");
  const Instant t_base = bounds.t_base.value_or(table.min_time());
  const Instant t_terminate = bounds.t_terminate.value_or(table.max_time());
  if (t_base + window > t_terminate) {
    throw WindowError("no window of " + format_duration(window) + " fits between " +
                      format_instant(t_base) + " and " + format_instant(t_terminate));
  }
  const Instant t_star = bounds.t_star.value_or(default_split(t_base, t_terminate, window));
  return {t_base, t_terminate, t_star};
}

namespace {

std::vector<Epsilon> propose_thresholds(FilterOp op, std::size_t column, const EventTable& table,
                                        std::uint64_t seed) {
  std::vector<double> values;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    if (auto v = table.number(column, r)) values.push_back(*v);
  }
  if (values.empty()) return {};
  if (values.size() > kThresholdSampleSize) {
    std::vector<double> sample;
    sample.reserve(kThresholdSampleSize);
    std::mt19937_64 rng(seed);
    std::sample(values.begin(), values.end(), std::back_inserter(sample), kThresholdSampleSize, rng);
    values = std::move(sample);
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());

  std::vector<double> distinct;
  std::unique_copy(values.begin(), values.end(), std::back_inserter(distinct));
  std::vector<double> kept(distinct.size());
  for (std::size_t i = 0; i < distinct.size(); ++i) {
    const auto lo = std::lower_bound(values.begin(), values.end(), distinct[i]);
    const auto hi = std::upper_bound(values.begin(), values.end(), distinct[i]);
    const double count = op == FilterOp::Greater ? static_cast<double>(values.end() - hi)
                                                 : static_cast<double>(lo - values.begin());
    kept[i] = count / n;
  }

  std::vector<Epsilon> out;
  for (double target : kTargetKeepRatios) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < distinct.size(); ++i) {
      if (std::abs(kept[i] - target) < std::abs(kept[best] - target)) best = i;
    }
    const Epsilon eps = distinct[best];
    if (std::find(out.begin(), out.end(), eps) == out.end()) out.push_back(eps);
  }
  return out;
}

std::vector<Epsilon> propose_categories(std::size_t column, const EventTable& table) {
  std::unordered_map<std::string_view, std::size_t> counts;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const auto& v = table.text(column, r);
    if (!v.empty()) ++counts[v];
  }
  std::vector<std::pair<std::string_view, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<Epsilon> out;
  for (std::size_t i = 0; i < ranked.size() && i < kTopCategories; ++i) {
    out.emplace_back(std::string(ranked[i].first));
  }
  return out;
}

}  // namespace

std::vector<Epsilon> propose_hyperparameters(const TaskTemplate& tmpl, const EventTable& table,
                                             std::uint64_t seed) {
  check_template(table.schema(), tmpl);
  switch (tmpl.filter_op) {
    case FilterOp::All:
      return {Epsilon{}};
    case FilterOp::Greater:
    case FilterOp::Less:
      return propose_thresholds(tmpl.filter_op, table.schema().require(*tmpl.filter_col), table,
                                seed);
    case FilterOp::Eq:
    case FilterOp::Neq:
      return propose_categories(table.schema().require(*tmpl.filter_col), table);
  }
  return {};
}

CutoffTable build_cutoff_table(const EntityIndex& index, Duration window, Instant t_base,
                               Instant t_terminate, Instant t_star) {
  if (window <= Duration::zero()) throw WindowError("prediction window must be positive");
  const auto k = static_cast<std::size_t>((t_terminate - t_base) / window);
  if (t_terminate < t_base || k == 0) {
    throw WindowError("no window of " + format_duration(window) + " fits between " +
                      format_instant(t_base) + " and " + format_instant(t_terminate));
  }
  if (t_star < t_base || t_star > t_terminate) {
    throw WindowError("split time " + format_instant(t_star) + " is outside [t_base, t_terminate]");
  }
  CutoffTable out;
  out.entity = index.choice();
  out.window = window;
  out.t_base = t_base;
  out.t_terminate = t_terminate;
  out.t_star = t_star;
  out.num_windows = k;
  out.rows.reserve(index.entities().size() * k);
  for (const auto& entity : index.entities()) {
    for (std::size_t i = 0; i < k; ++i) {
      const Instant start = t_base + static_cast<long long>(i) * window;
      out.rows.push_back({entity, start, start + window});
    }
  }
  return out;
}

CutoffTable build_cutoff_table(const EventTable& table, const EntityChoice& e_star, Duration window,
                               Instant t_base, Instant t_terminate, Instant t_star) {
  return build_cutoff_table(EntityIndex(table, e_star), window, t_base, t_terminate, t_star);
}

std::vector<ExecutableTask> instantiate_tasks(const TaskTemplate& tmpl, const EventTable& table,
                                              Duration window, const TimeBounds& bounds) {
  const ResolvedBounds b = resolve_bounds(table, window, bounds);
  std::vector<ExecutableTask> out;
  for (auto& eps : propose_hyperparameters(tmpl, table)) {
    out.emplace_back(tmpl, std::move(eps), window, b.t_base, b.t_terminate, b.t_star);
  }
  return out;
}

TaskDataset materialize(const ExecutableTask& task, const EventTable& table,
                        const CutoffTable& cutoffs, const EntityIndex& index) {
  if (cutoffs.entity != task.task_template().entity || cutoffs.window != task.window() ||
      index.choice() != cutoffs.entity) {
    throw WindowError("cutoff table was built for a different entity or window");
  }
  const LabelEvaluator evaluate(table, task.task_template(), task.epsilon());
  TaskDataset out{task, {}, {}};
  for (const auto& row : cutoffs.rows) {
    const RowSet rows = index.slice(row.entity, row.t_st, row.t_ed);
    Label label = evaluate(rows);
    if (is_missing(label)) continue;
    auto& side = row.t_st < task.t_star() ? out.train : out.validation;
    side.push_back({row.entity, row.t_st, row.t_ed, std::move(label)});
  }
  return out;
}

TaskDataset materialize(const ExecutableTask& task, const EventTable& table,
                        const CutoffTable& cutoffs) {
  return materialize(task, table, cutoffs, EntityIndex(table, cutoffs.entity));
}

bool is_valid(std::size_t n_train, std::size_t n_validation) {
  return n_train >= kMinTrainExamples && n_validation >= kMinValidationExamples;
}

OperationalizedPool operationalize(const EventTable& table, const EntityChoice& e_star,
                                   Duration window, const TimeBounds& bounds) {
  const ResolvedBounds b = resolve_bounds(table, window, bounds);
  const EntityIndex index(table, e_star);
  const CutoffTable cutoffs = build_cutoff_table(index, window, b.t_base, b.t_terminate, b.t_star);
  const TimeBounds resolved{b.t_base, b.t_terminate, b.t_star};

  OperationalizedPool pool;
  for (const auto& tmpl : enumerate_templates(table.schema(), e_star)) {
    TemplateValidity validity{tmpl, 0, 0};
    for (auto& task : instantiate_tasks(tmpl, table, window, resolved)) {
      ++validity.n_tasks;
      if (is_valid(materialize(task, table, cutoffs, index))) {
        ++validity.n_valid;
        pool.tasks.push_back(std::move(task));
      }
    }
    pool.report.push_back(std::move(validity));
  }
  return pool;
}

}  // namespace taskforge
