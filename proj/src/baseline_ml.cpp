#include "taskforge/baseline_ml.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <map>
#include <stdexcept>

#include "taskforge/error.hpp"

namespace taskforge {

ClassVocabulary ClassVocabulary::from_training(std::span<const LabeledExample> train,
                                               std::size_t max_classes) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : train) {
    if (const auto* s = std::get_if<std::string>(&ex.label)) ++counts[*s];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  ClassVocabulary vocab;
  for (std::size_t i = 0; i < ranked.size() && i < max_classes; ++i) {
    vocab.classes_.push_back(ranked[i].first);
  }
  vocab.classes_.emplace_back(kOtherClass);
  return vocab;
}

std::size_t ClassVocabulary::index_of(const Label& label) const {
  if (const auto* s = std::get_if<std::string>(&label)) {
    const auto it = std::find(classes_.begin(), classes_.end() - 1, *s);
    if (it != classes_.end() - 1) return static_cast<std::size_t>(it - classes_.begin());
  }
  return classes_.size() - 1;
}

std::vector<std::string> feature_names(TaskKind kind, const ClassVocabulary& vocab) {
  std::vector<std::string> names;
  if (kind == TaskKind::Regression) {
    names = {"lag1", "lag2", "lag3", "rolling_mean3"};
  } else {
    for (const auto& c : vocab.classes()) names.push_back("lag1=" + c);
  }
  for (const char* n : {"prev_window_count", "history_count", "day_of_week", "month", "has_history"}) {
    names.emplace_back(n);
  }
  return names;
}

FeatureVector build_features(const ExecutableTask& task, const EntityIndex& index,
                             const LabeledExample& example, std::span<const LabeledExample> prior,
                             const ClassVocabulary& vocab) {
  std::vector<const LabeledExample*> history;
  for (const auto& p : prior) {
    if (p.t_st >= example.t_st) {
      throw std::invalid_argument("prior example at " + format_instant(p.t_st) +
                                  " is not before the cutoff " + format_instant(example.t_st));
    }
    if (p.entity == example.entity && !is_missing(p.label)) history.push_back(&p);
  }
  // Most recent first.
  std::sort(history.begin(), history.end(),
            [](const auto* a, const auto* b) { return a->t_st > b->t_st; });

  FeatureVector out;
  auto& f = out.values;
  if (task.kind() == TaskKind::Regression) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t lag = 0; lag < 3; ++lag) {
      double v = 0;
      if (lag < history.size()) {
        if (const auto* d = std::get_if<double>(&history[lag]->label)) v = *d;
        sum += v;
        ++n;
      }
      f.push_back(v);
    }
    f.push_back(n ? sum / static_cast<double>(n) : 0.0);
  } else {
    const std::size_t width = vocab.size();
    f.assign(width, 0.0);
    if (!history.empty() && width > 0) f[vocab.index_of(history.front()->label)] = 1.0;
  }

  f.push_back(static_cast<double>(
      index.count_between(example.entity, example.t_st - task.window(), example.t_st)));
  f.push_back(static_cast<double>(index.count_before(example.entity, example.t_st)));

  using namespace std::chrono;
  const sys_days day = floor<days>(example.t_st);
  f.push_back(static_cast<double>(weekday{day}.c_encoding()));
  f.push_back(static_cast<double>(static_cast<unsigned>(year_month_day{day}.month())));
  f.push_back(history.empty() ? 0.0 : 1.0);
  return out;
}

FeatureVector build_features(const ExecutableTask& task, const EventTable& table,
                             const LabeledExample& example, std::span<const LabeledExample> prior,
                             const ClassVocabulary& vocab) {
  return build_features(task, EntityIndex(table, task.task_template().entity), example, prior,
                        vocab);
}

namespace {

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - s.mean;
    s.scale = (centered.colwise().squaredNorm() / static_cast<double>(x.rows())).cwiseSqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
      if (s.scale(j) < 1e-12) s.scale(j) = 1.0;
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

// Ridge with an unpenalized intercept. Columns of `y` are independent targets.
struct RidgeModel {
  Eigen::MatrixXd weights;
  Eigen::RowVectorXd intercept;

  static RidgeModel fit(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y, double lambda) {
    RidgeModel m;
    m.intercept = y.colwise().mean();
    const Eigen::MatrixXd yc = y.rowwise() - m.intercept;
    Eigen::MatrixXd gram = z.transpose() * z;
    gram.diagonal().array() += lambda;
    m.weights = gram.ldlt().solve(z.transpose() * yc);
    return m;
  }

  Eigen::MatrixXd predict(const Eigen::MatrixXd& z) const {
    return (z * weights).rowwise() + intercept;
  }
};

// Features for every example; history comes from earlier examples of the
// same entity across both splits (labels of past windows are known at the
// cutoff).
Eigen::MatrixXd feature_matrix(const ExecutableTask& task, const EntityIndex& index,
                               std::span<const LabeledExample> examples,
                               std::span<const LabeledExample> all, const ClassVocabulary& vocab) {
  std::map<std::string, std::vector<LabeledExample>> by_entity;
  for (const auto& ex : all) by_entity[ex.entity].push_back(ex);

  Eigen::MatrixXd x;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const auto& mine = by_entity[ex.entity];
    std::vector<LabeledExample> prior;
    for (const auto& p : mine) {
      if (p.t_st < ex.t_st) prior.push_back(p);
    }
    const FeatureVector f = build_features(task, index, ex, prior, vocab);
    if (i == 0) x.resize(static_cast<Eigen::Index>(examples.size()), static_cast<Eigen::Index>(f.values.size()));
    for (std::size_t j = 0; j < f.values.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.values[j];
    }
  }
  return x;
}

std::optional<double> r_squared(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  const double mean = truth.mean();
  const double ss_tot = (truth.array() - mean).square().sum();
  if (ss_tot <= 0.0) return std::nullopt;
  const double ss_res = (truth - pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

ModelReport train_and_evaluate(const ExecutableTask& task, const TaskDataset& dataset,
                               const EventTable& table) {
  if (!is_valid(dataset)) {
    throw TaskDefinitionError("task " + task.id() + " has " + std::to_string(dataset.train.size()) +
                              " training and " + std::to_string(dataset.validation.size()) +
                              " validation examples; at least " +
                              std::to_string(kMinTrainExamples) + " training and " +
                              std::to_string(kMinValidationExamples) +
                              " validation examples are required");
  }
  const EntityIndex index(table, task.task_template().entity);
  std::vector<LabeledExample> all = dataset.train;
  all.insert(all.end(), dataset.validation.begin(), dataset.validation.end());

  ModelReport report;
  report.task_id = task.id();
  report.kind = task.kind();
  report.n_train = dataset.train.size();
  report.n_validation = dataset.validation.size();

  const ClassVocabulary vocab = task.kind() == TaskKind::Classification
                                    ? ClassVocabulary::from_training(dataset.train)
                                    : ClassVocabulary{};
  const Eigen::MatrixXd x_train = feature_matrix(task, index, dataset.train, all, vocab);
  const Eigen::MatrixXd x_val = feature_matrix(task, index, dataset.validation, all, vocab);
  const Standardizer scaler = Standardizer::fit(x_train);
  const Eigen::MatrixXd z_train = scaler.apply(x_train);
  const Eigen::MatrixXd z_val = scaler.apply(x_val);

  if (task.kind() == TaskKind::Regression) {
    report.metric_name = "r2";
    const auto targets = [](std::span<const LabeledExample> exs) {
      Eigen::VectorXd y(static_cast<Eigen::Index>(exs.size()));
      for (std::size_t i = 0; i < exs.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = std::get<double>(exs[i].label);
      }
      return y;
    };
    const Eigen::VectorXd y_train = targets(dataset.train);
    const Eigen::VectorXd y_val = targets(dataset.validation);
    const RidgeModel model = RidgeModel::fit(z_train, y_train, kTaskModelRidge);
    report.metric = r_squared(y_val, model.predict(z_val).col(0));
    if (report.metric) {
      report.baseline =
          r_squared(y_val, Eigen::VectorXd::Constant(y_val.size(), y_train.mean()));
    }
    return report;
  }

  report.metric_name = "accuracy";
  const auto n_classes = static_cast<Eigen::Index>(vocab.size());
  Eigen::MatrixXd y_train = Eigen::MatrixXd::Constant(z_train.rows(), n_classes, -1.0);
  std::vector<std::size_t> train_class_counts(vocab.size(), 0);
  for (std::size_t i = 0; i < dataset.train.size(); ++i) {
    const std::size_t c = vocab.index_of(dataset.train[i].label);
    y_train(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = 1.0;
    ++train_class_counts[c];
  }
  const RidgeModel model = RidgeModel::fit(z_train, y_train, kTaskModelRidge);
  const Eigen::MatrixXd scores = model.predict(z_val);
  const auto majority = static_cast<std::size_t>(
      std::max_element(train_class_counts.begin(), train_class_counts.end()) -
      train_class_counts.begin());

  std::size_t correct = 0;
  std::size_t baseline_correct = 0;
  for (std::size_t i = 0; i < dataset.validation.size(); ++i) {
    const std::size_t truth = vocab.index_of(dataset.validation[i].label);
    Eigen::Index predicted = 0;
    scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&predicted);
    if (static_cast<std::size_t>(predicted) == truth) ++correct;
    if (majority == truth) ++baseline_correct;
  }
  const auto n = static_cast<double>(dataset.validation.size());
  report.metric = static_cast<double>(correct) / n;
  report.baseline = static_cast<double>(baseline_correct) / n;
  return report;
}

MetricHistogram histogram(std::span<const ModelReport> reports) {
  MetricHistogram h;
  for (const auto& r : reports) {
    if (!r.metric) {
      ++h.not_applicable;
    } else if (*r.metric < 0.0) {
      ++h.below_zero;
    } else {
      const auto bin = std::min<std::size_t>(static_cast<std::size_t>(*r.metric * 10.0), 9);
      ++h.bins[bin];
    }
  }
  return h;
}

}  // namespace taskforge
