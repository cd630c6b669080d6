#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "taskforge/event_table.hpp"
#include "taskforge/task_space.hpp"

namespace taskforge {

// The five task attributes the meta-model sees, in feature order.
enum class Attribute { EntityCol, FilterCol, AggCol, FilterOp, AggOp };
inline constexpr std::array kAttributes{Attribute::EntityCol, Attribute::FilterCol,
                                        Attribute::AggCol, Attribute::FilterOp, Attribute::AggOp};

std::string_view to_string(Attribute a);

// Value of an attribute as a string: "root", a column name, "None", or an
// operation name.
std::string attribute_value(const TaskTemplate& tmpl, Attribute a);

// Block layout of TaskFeatures for one schema: for each attribute a one-hot
// block followed by its goodness scalar. Column blocks have one slot per
// schema column plus None.
class FeatureLayout {
 public:
  explicit FeatureLayout(const Schema& schema);

  std::size_t dimension() const { return dimension_; }
  std::size_t block_offset(Attribute a) const { return blocks_[index(a)].offset; }
  std::size_t block_size(Attribute a) const { return blocks_[index(a)].values.size(); }
  std::size_t goodness_index(Attribute a) const { return block_offset(a) + block_size(a); }
  // Position of a value's one-hot bit; nullopt when the value is unknown.
  std::optional<std::size_t> slot(Attribute a, std::string_view value) const;

 private:
  static std::size_t index(Attribute a) { return static_cast<std::size_t>(a); }
  struct Block {
    std::size_t offset = 0;
    std::vector<std::string> values;
  };
  std::array<Block, kAttributes.size()> blocks_;
  std::size_t dimension_ = 0;
};

// Laplace-smoothed share of positively rated tasks per attribute value.
class GoodnessTable {
 public:
  void add(const TaskTemplate& tmpl, int rating);
  // (n_good + 1) / (n + 1); 1 when the value has never been rated.
  double goodness(Attribute a, std::string_view value) const;
  std::pair<std::size_t, std::size_t> counts(Attribute a, std::string_view value) const;

 private:
  struct Tally {
    std::size_t n = 0;
    std::size_t good = 0;
  };
  std::array<std::map<std::string, Tally, std::less<>>, kAttributes.size()> tallies_;
};

struct TaskFeatures {
  std::vector<double> values;
};

TaskFeatures featurize_task(const FeatureLayout& layout, const GoodnessTable& goodness,
                            const TaskTemplate& tmpl);

inline constexpr double kDefaultMetaAlpha = 1.0;
inline constexpr std::size_t kDefaultBatchSize = 10;

struct MetaModel {
  std::vector<double> theta;
  double alpha = kDefaultMetaAlpha;

  double score(const TaskFeatures& f) const;
};

// argmin_theta sum_i (f_i . theta - y_i)^2 + alpha |theta|^2 via the
// regularized normal equations. Returns nullopt when there is no feedback
// yet (cold start). Throws std::invalid_argument for alpha <= 0 or
// mismatched sizes.
std::optional<MetaModel> fit_meta_model(std::span<const TaskFeatures> features,
                                        std::span<const double> ratings,
                                        double alpha = kDefaultMetaAlpha);

struct FeedbackRecord {
  std::string task_id;
  int rating = 0;
  std::size_t iteration = 0;
  Instant timestamp;
};

struct Rating {
  std::string task_id;
  int y = 0;
};

// One completed iteration: the batch shown and the rating of every task in
// it (unrated tasks recorded as 0). This is the persistence unit.
struct IterationLog {
  std::size_t iteration = 0;
  std::vector<std::string> batch;
  std::vector<Rating> ratings;
  std::string idempotency_key;
};

struct SessionConfig {
  std::size_t k = kDefaultBatchSize;
  double alpha = kDefaultMetaAlpha;
  std::uint64_t seed = 7;
};

using TaskPool = std::vector<ExecutableTask>;

// The interactive loop: recommend a batch, take ratings, refit, repeat.
// Single writer; batches never repeat a task.
class RecommendationSession {
 public:
  RecommendationSession(std::shared_ptr<const TaskPool> pool, const Schema& schema,
                        SessionConfig config = {});

  // Opens a batch (or returns the open one). First iteration is a seeded
  // uniform sample; later ones are the top-k unseen tasks by meta-model
  // score, ties by task id. Returns fewer than k tasks near exhaustion.
  // `k` overrides the configured batch size for this batch.
  const std::vector<std::string>& recommend_batch(std::optional<std::size_t> k = std::nullopt);

  // Closes the open batch. Every id must be in it and y in {0,1}; tasks
  // left unrated count as 0. Throws FeedbackError otherwise.
  IterationLog record_feedback(std::span<const Rating> ratings, std::string idempotency_key = {});

  // Re-applies a logged iteration without recomputing its batch.
  void replay(const IterationLog& log);

  std::size_t iteration() const { return iteration_; }
  bool has_open_batch() const { return open_batch_.has_value(); }
  const std::vector<std::string>& open_batch() const;
  std::size_t remaining() const { return pool_->size() - shown_.size(); }
  const std::vector<FeedbackRecord>& history() const { return history_; }
  const std::vector<IterationLog>& iterations() const { return logs_; }
  const SessionConfig& config() const { return config_; }
  const FeatureLayout& layout() const { return layout_; }
  const GoodnessTable& goodness() const { return goodness_; }
  const TaskPool& pool() const { return *pool_; }

  TaskFeatures featurize(const ExecutableTask& task) const;
  // Meta-model over the current history; nullopt before any feedback.
  std::optional<MetaModel> fit() const;
  const ExecutableTask& task(std::string_view id) const;

 private:
  std::vector<std::string> cold_start_batch(std::size_t k) const;
  std::vector<std::string> ranked_batch(const MetaModel& model, std::size_t k) const;

  std::shared_ptr<const TaskPool> pool_;
  SessionConfig config_;
  FeatureLayout layout_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_set<std::string> shown_;
  std::optional<std::vector<std::string>> open_batch_;
  std::vector<FeedbackRecord> history_;
  std::vector<IterationLog> logs_;
  GoodnessTable goodness_;
  std::size_t iteration_ = 0;
};

}  // namespace taskforge
