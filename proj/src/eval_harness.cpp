#include "taskforge/eval_harness.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace taskforge {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::AWins:
      return "a_wins";
    case Outcome::Tie:
      return "tie";
    case Outcome::BWins:
      return "b_wins";
  }
  return "unknown";
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (auto o : {Outcome::AWins, Outcome::Tie, Outcome::BWins}) {
    if (to_string(o) == text) return o;
  }
  return std::nullopt;
}

namespace {

double points_for_a(Outcome o) {
  switch (o) {
    case Outcome::AWins:
      return 3.0;
    case Outcome::Tie:
      return 1.0;
    case Outcome::BWins:
      return 0.0;
  }
  return 0.0;
}

Outcome flipped(Outcome o) {
  if (o == Outcome::AWins) return Outcome::BWins;
  if (o == Outcome::BWins) return Outcome::AWins;
  return Outcome::Tie;
}

}  // namespace

std::pair<double, double> comparison_score(const Comparison& cmp) {
  const double s_a = kMeaningfulnessWeight * points_for_a(cmp.meaningfulness) +
                     kUsefulnessWeight * points_for_a(cmp.usefulness);
  const double s_b = kMeaningfulnessWeight * points_for_a(flipped(cmp.meaningfulness)) +
                     kUsefulnessWeight * points_for_a(flipped(cmp.usefulness));
  return {s_a, s_b};
}

std::optional<std::size_t> GroundTruthRanking::rank_of(std::string_view task_id) const {
  const auto it = rank_index_.find(std::string(task_id));
  if (it == rank_index_.end()) return std::nullopt;
  return it->second;
}

GroundTruthRanking finalize_ranking(GroundTruthRanking r) {
  r.rank_index_.clear();
  for (std::size_t i = 0; i < r.order.size(); ++i) {
    r.order[i].rank = i + 1;
    r.rank_index_[r.order[i].task_id] = i + 1;
  }
  return r;
}

GroundTruthRanking rank_tasks(std::span<const Comparison> comparisons,
                              const std::set<std::string>& meaningless,
                              std::span<const std::string> universe) {
  // Totals in tenths of a point.
  struct Total {
    long long tenths = 0;
    std::size_t n = 0;
  };
  std::map<std::string, Total> totals;
  for (const auto& c : comparisons) {
    if (c.task_a == c.task_b) throw std::invalid_argument("task " + c.task_a + " compared with itself");
    if (meaningless.count(c.task_a) || meaningless.count(c.task_b)) {
      throw std::invalid_argument("comparison " + c.task_a + " vs " + c.task_b +
                                  " involves a meaningless task");
    }
    const auto [s_a, s_b] = comparison_score(c);
    totals[c.task_a].tenths += std::llround(s_a * 10);
    ++totals[c.task_a].n;
    totals[c.task_b].tenths += std::llround(s_b * 10);
    ++totals[c.task_b].n;
  }

  GroundTruthRanking out;
  out.meaningless = meaningless;
  for (const auto& [id, t] : totals) {
    out.order.push_back({id, static_cast<double>(t.tenths) / (10.0 * static_cast<double>(t.n)), t.n, 0});
  }
  // Stable over id-ordered `totals`: equal scores stay by id.
  std::stable_sort(out.order.begin(), out.order.end(), [](const auto& a, const auto& b) {
    return *a.average_score > *b.average_score;
  });

  std::set<std::string> uncovered;
  for (const auto& id : universe) {
    if (!totals.count(id) && !meaningless.count(id)) uncovered.insert(id);
  }
  for (const auto& id : uncovered) {
    out.warnings.push_back("task " + id + " has no comparisons; ranked after all compared tasks");
    out.order.push_back({id, std::nullopt, 0, 0});
  }
  for (const auto& id : meaningless) out.order.push_back({id, std::nullopt, 0, 0});
  return finalize_ranking(std::move(out));
}

GroundTruthRanking planted_ranking(const TaskPool& pool, std::uint64_t seed, double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Weights drawn in a fixed (attribute, sorted value) order.
  std::map<std::pair<Attribute, std::string>, double> weights;
  for (const auto& t : pool) {
    for (Attribute a : kAttributes) weights.emplace(std::pair{a, attribute_value(t.task_template(), a)}, 0.0);
  }
  for (auto& [key, w] : weights) w = normal(rng);

  std::vector<std::pair<double, std::string>> scored;
  for (const auto& t : pool) {
    double s = 0;
    for (Attribute a : kAttributes) s += weights.at({a, attribute_value(t.task_template(), a)});
    scored.emplace_back(s + noise * normal(rng), t.id());
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  GroundTruthRanking out;
  for (const auto& [score, id] : scored) out.order.push_back({id, score, 0, 0});
  return finalize_ranking(std::move(out));
}

std::pair<Schema, TaskPool> make_synthetic_pool(std::size_t n, std::uint64_t seed) {
  Schema schema("synthetic", {{"ts", ColumnRole::Time},
                              {"e1", ColumnRole::Entity},
                              {"e2", ColumnRole::Entity},
                              {"c1", ColumnRole::Categorical},
                              {"c2", ColumnRole::Categorical},
                              {"n1", ColumnRole::Numerical},
                              {"n2", ColumnRole::Numerical},
                              {"n3", ColumnRole::Numerical},
                              {"n4", ColumnRole::Numerical},
                              {"n5", ColumnRole::Numerical}});
  auto templates = enumerate_templates(schema, EntityChoice::root());
  if (n > templates.size()) {
    throw std::invalid_argument("synthetic pool holds at most " + std::to_string(templates.size()) +
                                " tasks");
  }
  std::mt19937_64 rng(seed);
  std::vector<TaskTemplate> chosen;
  std::sample(templates.begin(), templates.end(), std::back_inserter(chosen), n, rng);

  const Instant t_base{std::chrono::sys_days{std::chrono::year{2020} / 1 / 1}};
  const Duration window{86400};
  TaskPool pool;
  for (auto& tmpl : chosen) {
    Epsilon eps;
    if (tmpl.filter_op == FilterOp::Greater || tmpl.filter_op == FilterOp::Less) eps = 0.0;
    if (tmpl.filter_op == FilterOp::Eq || tmpl.filter_op == FilterOp::Neq) eps = std::string("a");
    pool.emplace_back(std::move(tmpl), std::move(eps), window, t_base, t_base + 30 * window,
                      t_base + 21 * window);
  }
  return {std::move(schema), std::move(pool)};
}

// --- simulation -------------------------------------------------------------

double acceptance_probability(std::size_t rank, std::size_t n) {
  if (rank < 1 || rank > n) throw std::invalid_argument("rank must lie in [1, N]");
  if (2 * rank < n) return 1.0 - static_cast<double>(rank) / static_cast<double>(n);
  return 0.0;
}

int simulate_user_feedback(std::size_t rank, std::size_t n, std::mt19937_64& rng) {
  const double p = acceptance_probability(rank, n);
  if (p <= 0.0) return 0;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p ? 1 : 0;
}

std::string_view to_string(Policy p) { return p == Policy::LR ? "LR" : "PR"; }

std::vector<double> PolicyCurves::finals() const {
  std::vector<double> out;
  for (const auto& curve : per_repeat) out.push_back(curve.empty() ? 0.0 : static_cast<double>(curve.back()));
  return out;
}

double SimulationResult::ratio() const {
  const double pr_final = pr.mean.empty() ? 0.0 : pr.mean.back();
  const double lr_final = lr.mean.empty() ? 0.0 : lr.mean.back();
  return pr_final > 0 ? lr_final / pr_final : std::numeric_limits<double>::infinity();
}

std::size_t top_count(double gamma, std::size_t n) {
  return static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n) + 1e-9));
}

PolicyCurves run_simulation(std::shared_ptr<const TaskPool> pool, const Schema& schema,
                            const GroundTruthRanking& ranking, Policy policy,
                            const SimulationConfig& config) {
  const std::size_t n = ranking.size();
  const std::size_t top = top_count(config.gamma, n);
  if (top < 1) throw std::invalid_argument("gamma * N must be at least 1");
  if (config.k * config.iterations > pool->size()) {
    throw std::invalid_argument("k * iterations exceeds the pool size");
  }
  const auto rank_of = [&](const std::string& id) { return ranking.rank_of(id).value_or(n); };

  PolicyCurves out;
  out.policy = policy;
  out.per_repeat.reserve(config.repeats);
  for (std::size_t rep = 0; rep < config.repeats; ++rep) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(policy)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> curve;
    std::size_t found = 0;

    if (policy == Policy::PR) {
      std::vector<std::size_t> order(pool->size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t it = 0; it < config.iterations; ++it) {
        for (std::size_t j = it * config.k; j < (it + 1) * config.k; ++j) {
          if (rank_of((*pool)[order[j]].id()) <= top) ++found;
        }
        curve.push_back(found);
      }
    } else {
      RecommendationSession session(pool, schema,
                                    SessionConfig{config.k, config.alpha, rng()});
      for (std::size_t it = 0; it < config.iterations; ++it) {
        const auto batch = session.recommend_batch();
        std::vector<Rating> ratings;
        for (const auto& id : batch) {
          const std::size_t r = rank_of(id);
          if (r <= top) ++found;
          ratings.push_back({id, simulate_user_feedback(r, n, rng)});
        }
        session.record_feedback(ratings);
        curve.push_back(found);
      }
    }
    out.per_repeat.push_back(std::move(curve));
  }

  out.mean.assign(config.iterations, 0.0);
  for (const auto& curve : out.per_repeat) {
    for (std::size_t it = 0; it < curve.size(); ++it) out.mean[it] += static_cast<double>(curve[it]);
  }
  if (config.repeats > 0) {
    for (auto& m : out.mean) m /= static_cast<double>(config.repeats);
  }
  return out;
}

SimulationResult compare_policies(std::shared_ptr<const TaskPool> pool, const Schema& schema,
                                  const GroundTruthRanking& ranking, const SimulationConfig& config) {
  SimulationResult result;
  result.top_count = top_count(config.gamma, ranking.size());
  result.lr = run_simulation(pool, schema, ranking, Policy::LR, config);
  result.pr = run_simulation(pool, schema, ranking, Policy::PR, config);
  const auto a = result.lr.finals();
  const auto b = result.pr.finals();
  if (a.size() >= 2 && b.size() >= 2) result.p_value = significance_test(a, b);
  return result;
}

double significance_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("need at least two samples per side");
  const auto moments = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1)};
  };
  const auto [mean_a, var_a] = moments(a);
  const auto [mean_b, var_b] = moments(b);
  const double se_a = var_a / static_cast<double>(a.size());
  const double se_b = var_b / static_cast<double>(b.size());
  const double se = se_a + se_b;
  if (se <= 0.0) return mean_a == mean_b ? 1.0 : 0.0;

  const double t = (mean_a - mean_b) / std::sqrt(se);
  const double df = se * se / (se_a * se_a / static_cast<double>(a.size() - 1) +
                               se_b * se_b / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

}  // namespace taskforge
