#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskforge/event_table.hpp"
#include "taskforge/operationalizer.hpp"
#include "taskforge/task_space.hpp"

namespace taskforge {

inline constexpr double kTaskModelRidge = 1.0;
inline constexpr std::size_t kMaxClasses = 20;
inline constexpr std::string_view kOtherClass = "other";

// Classes kept for a classification task: the most frequent training
// labels (ties by value) followed by the catch-all "other".
class ClassVocabulary {
 public:
  ClassVocabulary() = default;
  static ClassVocabulary from_training(std::span<const LabeledExample> train,
                                       std::size_t max_classes = kMaxClasses);

  std::size_t size() const { return classes_.size(); }
  const std::vector<std::string>& classes() const { return classes_; }
  // Index of a label; labels outside the kept set map to "other".
  std::size_t index_of(const Label& label) const;

 private:
  std::vector<std::string> classes_;
};

// Fixed-order features computed from data strictly before the cutoff:
//   regression:     lag1 lag2 lag3 rolling_mean3 prev_window_count
//                   history_count day_of_week month has_history
//   classification: one-hot(lag1 class) prev_window_count history_count
//                   day_of_week month has_history
struct FeatureVector {
  std::vector<double> values;
};

std::vector<std::string> feature_names(TaskKind kind, const ClassVocabulary& vocab = {});

// `prior` are earlier examples; only those of the same entity with
// t_st < example.t_st are used (std::invalid_argument for a later one).
FeatureVector build_features(const ExecutableTask& task, const EntityIndex& index,
                             const LabeledExample& example, std::span<const LabeledExample> prior,
                             const ClassVocabulary& vocab = {});
FeatureVector build_features(const ExecutableTask& task, const EventTable& table,
                             const LabeledExample& example, std::span<const LabeledExample> prior,
                             const ClassVocabulary& vocab = {});

struct ModelReport {
  std::string task_id;
  TaskKind kind = TaskKind::Regression;
  std::string metric_name;  // "r2" or "accuracy"
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  std::optional<double> metric;    // nullopt: not applicable
  std::optional<double> baseline;  // mean predictor / majority class
};

// Ridge regression (R^2) or one-vs-rest ridge classifier (accuracy) on
// standardized features. Throws TaskDefinitionError when the dataset does
// not meet the 10 train / 5 validation minimum.
ModelReport train_and_evaluate(const ExecutableTask& task, const TaskDataset& dataset,
                               const EventTable& table);

// Counts per metric bin of width 0.1 over [0, 1]; R^2 below zero and
// not-applicable results are counted separately.
struct MetricHistogram {
  std::array<std::size_t, 10> bins{};
  std::size_t below_zero = 0;
  std::size_t not_applicable = 0;
};

MetricHistogram histogram(std::span<const ModelReport> reports);

}  // namespace taskforge
