#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "taskforge/recommender.hpp"

namespace taskforge {

// --- annotation scoring ------------------------------------------------------

enum class Outcome { AWins, Tie, BWins };
std::string_view to_string(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view text);

inline constexpr double kMeaningfulnessWeight = 0.7;
inline constexpr double kUsefulnessWeight = 0.3;

struct Comparison {
  std::string task_a;
  std::string task_b;
  Outcome meaningfulness = Outcome::Tie;
  Outcome usefulness = Outcome::Tie;
};

// Win/tie/lose points (3/1/0) per metric, weighted 0.7 meaningfulness and
// 0.3 usefulness. Returns (s_A, s_B).
std::pair<double, double> comparison_score(const Comparison& cmp);

struct RankedTask {
  std::string task_id;
  std::optional<double> average_score;  // nullopt for uncovered/meaningless
  std::size_t comparisons = 0;
  std::size_t rank = 0;  // 1 = best
};

// Ranks 1..N: compared tasks by descending average score (ties by id), then
// uncovered tasks, then meaningless tasks.
struct GroundTruthRanking {
  std::vector<RankedTask> order;
  std::set<std::string> meaningless;
  std::vector<std::string> warnings;

  std::size_t size() const { return order.size(); }
  std::optional<std::size_t> rank_of(std::string_view task_id) const;

 private:
  friend GroundTruthRanking finalize_ranking(GroundTruthRanking r);
  std::unordered_map<std::string, std::size_t> rank_index_;
};

// Fills ranks and the lookup index from `order`.
GroundTruthRanking finalize_ranking(GroundTruthRanking r);

// `universe` lists every task expected in the ranking; tasks in it with no
// comparison (and not meaningless) are ranked after all compared tasks
// with a warning. Throws std::invalid_argument for a comparison of a task
// with itself or involving a meaningless task.
GroundTruthRanking rank_tasks(std::span<const Comparison> comparisons,
                              const std::set<std::string>& meaningless,
                              std::span<const std::string> universe = {});

// Planted ground truth for simulation: each attribute value gets a seeded
// standard-normal weight; a task scores the sum over its five attributes
// plus `noise` times a normal draw, and tasks are ranked by that score.
GroundTruthRanking planted_ranking(const TaskPool& pool, std::uint64_t seed, double noise = 0.1);

// Schema and pool of `n` distinct root-entity tasks with placeholder
// hyperparameters, for exercising the recommender without data.
std::pair<Schema, TaskPool> make_synthetic_pool(std::size_t n, std::uint64_t seed);

// --- simulated annotator -------------------------------------------------------

// 1 - r/N when r < N/2, else 0 (ranks are 1-based).
double acceptance_probability(std::size_t rank, std::size_t n);
int simulate_user_feedback(std::size_t rank, std::size_t n, std::mt19937_64& rng);

enum class Policy { LR, PR };
std::string_view to_string(Policy p);

struct SimulationConfig {
  std::size_t iterations = 10;
  std::size_t k = 10;
  std::size_t repeats = 100;
  double gamma = 0.10;
  std::uint64_t seed = 7;
  double alpha = kDefaultMetaAlpha;
};

struct PolicyCurves {
  Policy policy = Policy::PR;
  // [repeat][iteration]: cumulative top-gamma tasks shown so far.
  std::vector<std::vector<std::size_t>> per_repeat;
  std::vector<double> mean;  // per iteration

  std::vector<double> finals() const;
};

struct SimulationResult {
  std::size_t top_count = 0;  // floor(gamma * N)
  PolicyCurves lr;
  PolicyCurves pr;
  double p_value = 1.0;
  double ratio() const;  // final mean LR / final mean PR
};

std::size_t top_count(double gamma, std::size_t n);

// LR: the recommendation session driven by simulate_user_feedback.
// PR: uniform sampling without replacement. Throws std::invalid_argument
// unless gamma*N >= 1 and k*iterations <= pool size.
PolicyCurves run_simulation(std::shared_ptr<const TaskPool> pool, const Schema& schema,
                            const GroundTruthRanking& ranking, Policy policy,
                            const SimulationConfig& config);

SimulationResult compare_policies(std::shared_ptr<const TaskPool> pool, const Schema& schema,
                                  const GroundTruthRanking& ranking, const SimulationConfig& config);

// Two-sided Welch t-test p-value. Needs at least two samples per side.
double significance_test(std::span<const double> a, std::span<const double> b);

}  // namespace taskforge
