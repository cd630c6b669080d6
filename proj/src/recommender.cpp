#include "taskforge/recommender.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <iterator>
#include <random>
#include <stdexcept>

#include "taskforge/error.hpp"

namespace taskforge {

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::EntityCol:
      return "entity_col";
    case Attribute::FilterCol:
      return "fil_col";
    case Attribute::AggCol:
      return "agg_col";
    case Attribute::FilterOp:
      return "fil_op";
    case Attribute::AggOp:
      return "agg_op";
  }
  return "unknown";
}

std::string attribute_value(const TaskTemplate& tmpl, Attribute a) {
  switch (a) {
    case Attribute::EntityCol:
      return tmpl.entity.label();
    case Attribute::FilterCol:
      return tmpl.filter_col.value_or("None");
    case Attribute::AggCol:
      return tmpl.agg_col.value_or("None");
    case Attribute::FilterOp:
      return std::string(to_string(tmpl.filter_op));
    case Attribute::AggOp:
      return std::string(to_string(tmpl.agg_op));
  }
  return {};
}

FeatureLayout::FeatureLayout(const Schema& schema) {
  for (const auto& e : entity_candidates(schema)) {
    blocks_[index(Attribute::EntityCol)].values.push_back(e.label());
  }
  for (Attribute a : {Attribute::FilterCol, Attribute::AggCol}) {
    auto& values = blocks_[index(a)].values;
    values.emplace_back("None");
    for (const auto& col : schema.columns()) values.push_back(col.name);
  }
  for (auto op : kFilterOps) blocks_[index(Attribute::FilterOp)].values.emplace_back(to_string(op));
  for (auto op : kAggOps) blocks_[index(Attribute::AggOp)].values.emplace_back(to_string(op));

  std::size_t offset = 0;
  for (auto& block : blocks_) {
    block.offset = offset;
    offset += block.values.size() + 1;
  }
  dimension_ = offset;
}

std::optional<std::size_t> FeatureLayout::slot(Attribute a, std::string_view value) const {
  const auto& block = blocks_[index(a)];
  const auto it = std::find(block.values.begin(), block.values.end(), value);
  if (it == block.values.end()) return std::nullopt;
  return block.offset + static_cast<std::size_t>(it - block.values.begin());
}

void GoodnessTable::add(const TaskTemplate& tmpl, int rating) {
  for (Attribute a : kAttributes) {
    auto& tally = tallies_[static_cast<std::size_t>(a)][attribute_value(tmpl, a)];
    ++tally.n;
    if (rating == 1) ++tally.good;
  }
}

std::pair<std::size_t, std::size_t> GoodnessTable::counts(Attribute a, std::string_view value) const {
  const auto& m = tallies_[static_cast<std::size_t>(a)];
  const auto it = m.find(value);
  if (it == m.end()) return {0, 0};
  return {it->second.n, it->second.good};
}

double GoodnessTable::goodness(Attribute a, std::string_view value) const {
  const auto [n, good] = counts(a, value);
  return static_cast<double>(good + 1) / static_cast<double>(n + 1);
}

TaskFeatures featurize_task(const FeatureLayout& layout, const GoodnessTable& goodness,
                            const TaskTemplate& tmpl) {
  TaskFeatures f;
  f.values.assign(layout.dimension(), 0.0);
  for (Attribute a : kAttributes) {
    const std::string value = attribute_value(tmpl, a);
    const auto slot = layout.slot(a, value);
    if (!slot) {
      throw std::invalid_argument("attribute " + std::string(to_string(a)) + " value '" + value +
                                  "' is not part of the feature layout");
    }
    f.values[*slot] = 1.0;
    f.values[layout.goodness_index(a)] = goodness.goodness(a, value);
  }
  return f;
}

double MetaModel::score(const TaskFeatures& f) const {
  double s = 0;
  for (std::size_t i = 0; i < theta.size() && i < f.values.size(); ++i) s += theta[i] * f.values[i];
  return s;
}

std::optional<MetaModel> fit_meta_model(std::span<const TaskFeatures> features,
                                        std::span<const double> ratings, double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("meta-model alpha must be positive");
  if (features.size() != ratings.size()) {
    throw std::invalid_argument("feature and rating counts differ");
  }
  if (features.empty()) return std::nullopt;

  const auto n = static_cast<Eigen::Index>(features.size());
  const auto d = static_cast<Eigen::Index>(features.front().values.size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = features[static_cast<std::size_t>(i)].values;
    if (static_cast<Eigen::Index>(row.size()) != d) {
      throw std::invalid_argument("feature vectors differ in dimension");
    }
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), d);
  }
  const Eigen::Map<const Eigen::VectorXd> y(ratings.data(), n);

  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += alpha;
  const Eigen::VectorXd theta = gram.ldlt().solve(x.transpose() * y);
  return MetaModel{std::vector<double>(theta.data(), theta.data() + theta.size()), alpha};
}

// --- session ---------------------------------------------------------------

RecommendationSession::RecommendationSession(std::shared_ptr<const TaskPool> pool,
                                             const Schema& schema, SessionConfig config)
    : pool_(std::move(pool)), config_(config), layout_(schema) {
  if (!pool_) throw std::invalid_argument("session needs a task pool");
  if (config_.k == 0) throw std::invalid_argument("batch size must be positive");
  if (!(config_.alpha > 0)) throw std::invalid_argument("meta-model alpha must be positive");
  for (std::size_t i = 0; i < pool_->size(); ++i) {
    if (!by_id_.emplace((*pool_)[i].id(), i).second) {
      throw std::invalid_argument("duplicate task id " + (*pool_)[i].id() + " in pool");
    }
  }
}

const ExecutableTask& RecommendationSession::task(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) throw FeedbackError("unknown task " + std::string(id));
  return (*pool_)[it->second];
}

const std::vector<std::string>& RecommendationSession::open_batch() const {
  if (!open_batch_) throw FeedbackError("no open batch");
  return *open_batch_;
}

TaskFeatures RecommendationSession::featurize(const ExecutableTask& task) const {
  return featurize_task(layout_, goodness_, task.task_template());
}

std::optional<MetaModel> RecommendationSession::fit() const {
  std::vector<TaskFeatures> features;
  std::vector<double> ratings;
  features.reserve(history_.size());
  for (const auto& rec : history_) {
    features.push_back(featurize(task(rec.task_id)));
    ratings.push_back(static_cast<double>(rec.rating));
  }
  return fit_meta_model(features, ratings, config_.alpha);
}

std::vector<std::string> RecommendationSession::cold_start_batch(std::size_t k) const {
  std::vector<std::string> unseen;
  for (const auto& t : *pool_) {
    if (!shown_.count(t.id())) unseen.push_back(t.id());
  }
  // One stream per iteration.
  std::seed_seq seq{static_cast<std::uint32_t>(config_.seed), static_cast<std::uint32_t>(config_.seed >> 32),
                    static_cast<std::uint32_t>(iteration_)};
  std::mt19937_64 rng(seq);
  std::vector<std::string> out;
  std::sample(unseen.begin(), unseen.end(), std::back_inserter(out), k, rng);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<std::string> RecommendationSession::ranked_batch(const MetaModel& model, std::size_t k_max) const {
  std::vector<std::pair<double, const std::string*>> scored;
  for (const auto& t : *pool_) {
    if (shown_.count(t.id())) continue;
    scored.emplace_back(model.score(featurize(t)), &t.id());
  }
  const std::size_t k = std::min(k_max, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : *a.second < *b.second;
                    });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(*scored[i].second);
  return out;
}

const std::vector<std::string>& RecommendationSession::recommend_batch(std::optional<std::size_t> k) {
  if (open_batch_) return *open_batch_;
  const std::size_t size = k.value_or(config_.k);
  if (size == 0) throw std::invalid_argument("batch size must be positive");
  const auto model = fit();
  std::vector<std::string> batch = model ? ranked_batch(*model, size) : cold_start_batch(size);
  for (const auto& id : batch) shown_.insert(id);
  open_batch_ = std::move(batch);
  return *open_batch_;
}

IterationLog RecommendationSession::record_feedback(std::span<const Rating> ratings,
                                                    std::string idempotency_key) {
  if (!open_batch_) throw FeedbackError("no open batch to rate");
  const auto& batch = *open_batch_;
  std::map<std::string, int> given;
  for (const auto& r : ratings) {
    if (std::find(batch.begin(), batch.end(), r.task_id) == batch.end()) {
      throw FeedbackError(shown_.count(r.task_id) ? "task " + r.task_id + " was already rated"
                                                  : "task " + r.task_id + " is not in the open batch");
    }
    if (r.y != 0 && r.y != 1) throw FeedbackError("rating must be 0 or 1");
    if (!given.emplace(r.task_id, r.y).second) {
      throw FeedbackError("task " + r.task_id + " rated twice");
    }
  }

  IterationLog log;
  log.iteration = iteration_;
  log.batch = batch;
  log.idempotency_key = std::move(idempotency_key);
  const auto now = std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now());
  for (const auto& id : batch) {
    const auto it = given.find(id);
    const int y = it == given.end() ? 0 : it->second;
    log.ratings.push_back({id, y});
    history_.push_back({id, y, iteration_, now});
    goodness_.add(task(id).task_template(), y);
  }
  open_batch_.reset();
  ++iteration_;
  logs_.push_back(log);
  return log;
}

void RecommendationSession::replay(const IterationLog& log) {
  if (log.iteration != iteration_) {
    throw FeedbackError("log iteration " + std::to_string(log.iteration) +
                        " does not follow session iteration " + std::to_string(iteration_));
  }
  if (open_batch_) {
    for (const auto& id : *open_batch_) shown_.erase(id);
    open_batch_.reset();
  }
  for (const auto& id : log.batch) {
    task(id);
    if (!shown_.insert(id).second) throw FeedbackError("task " + id + " shown twice in log");
  }
  open_batch_ = log.batch;
  record_feedback(log.ratings, log.idempotency_key);
}

}  // namespace taskforge
