#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taskforge/event_table.hpp"
#include "taskforge/task_space.hpp"

namespace taskforge {

// A task is usable when it yields at least this many examples on each side
// of the split.
inline constexpr std::size_t kMinTrainExamples = 10;
inline constexpr std::size_t kMinValidationExamples = 5;

// Numerical thresholds aim for these kept-row fractions.
inline constexpr std::array kTargetKeepRatios{0.25, 0.50, 0.75};
inline constexpr std::size_t kTopCategories = 3;
inline constexpr std::size_t kThresholdSampleSize = 10000;
inline constexpr std::uint64_t kThresholdSampleSeed = 20190411;

// Fraction of windows placed before the default split time.
inline constexpr double kDefaultTrainFraction = 0.7;

struct CutoffRow {
  std::string entity;
  Instant t_st;
  Instant t_ed;
};

// Back-to-back windows of width `window` starting at t_base, crossed with
// every entity. Rows are entity-major.
struct CutoffTable {
  EntityChoice entity = EntityChoice::root();
  Duration window{0};
  Instant t_base;
  Instant t_terminate;
  Instant t_star;
  std::size_t num_windows = 0;
  std::vector<CutoffRow> rows;
};

struct LabeledExample {
  std::string entity;
  Instant t_st;  // cutoff time
  Instant t_ed;
  Label label;
};

struct TaskDataset {
  ExecutableTask task;
  std::vector<LabeledExample> train;       // t_st < t*
  std::vector<LabeledExample> validation;  // t_st >= t*
};

// Optional overrides; unset fields take the defaults below.
struct TimeBounds {
  std::optional<Instant> t_base;
  std::optional<Instant> t_terminate;
  std::optional<Instant> t_star;
};

struct ResolvedBounds {
  Instant t_base;
  Instant t_terminate;
  Instant t_star;
};

// t_base/t_terminate default to the table's first/last timestamp and t*
// to t_base + ceil(0.7 k) windows. Throws WindowError when no window fits.
ResolvedBounds resolve_bounds(const EventTable& table, Duration window, const TimeBounds& bounds);
Instant default_split(Instant t_base, Instant t_terminate, Duration window);

// Candidate epsilons for a template: [monostate] for all_fil; up to three
// sampled thresholds whose kept fraction is closest to 25/50/75 % for
// greater/less; the three most frequent categories for eq/neq. Duplicates
// are removed; an entirely missing filter column yields [].
std::vector<Epsilon> propose_hyperparameters(const TaskTemplate& tmpl, const EventTable& table,
                                             std::uint64_t seed = kThresholdSampleSeed);

// Throws WindowError unless t_base + window <= t_terminate and
// t_base <= t_star <= t_terminate.
CutoffTable build_cutoff_table(const EventTable& table, const EntityChoice& e_star, Duration window,
                               Instant t_base, Instant t_terminate, Instant t_star);
CutoffTable build_cutoff_table(const EntityIndex& index, Duration window, Instant t_base,
                               Instant t_terminate, Instant t_star);

// One task per proposed epsilon.
std::vector<ExecutableTask> instantiate_tasks(const TaskTemplate& tmpl, const EventTable& table,
                                              Duration window, const TimeBounds& bounds = {});

// One example per cutoff row; Missing labels dropped; split at the task's t*.
TaskDataset materialize(const ExecutableTask& task, const EventTable& table,
                        const CutoffTable& cutoffs);
TaskDataset materialize(const ExecutableTask& task, const EventTable& table,
                        const CutoffTable& cutoffs, const EntityIndex& index);

bool is_valid(std::size_t n_train, std::size_t n_validation);
inline bool is_valid(const TaskDataset& d) { return is_valid(d.train.size(), d.validation.size()); }

struct TemplateValidity {
  TaskTemplate tmpl;
  std::size_t n_tasks = 0;
  std::size_t n_valid = 0;
  bool valid() const { return n_valid > 0; }
};

struct OperationalizedPool {
  std::vector<ExecutableTask> tasks;  // valid tasks, enumeration order
  std::vector<TemplateValidity> report;
};

// Enumerate, instantiate, materialize and keep the valid tasks.
OperationalizedPool operationalize(const EventTable& table, const EntityChoice& e_star,
                                   Duration window, const TimeBounds& bounds = {});

}  // namespace taskforge
