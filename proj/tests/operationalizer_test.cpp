#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "taskforge/error.hpp"
#include "taskforge/operationalizer.hpp"
#include "test_support.hpp"

namespace taskforge {
namespace {

using testing::day;
using testing::kDay;

EventTable numeric_table(const std::vector<double>& values) {
  const Schema s("v", {{"t", ColumnRole::Time}, {"x", ColumnRole::Numerical}});
  EventTable::Builder b(s);
  for (std::size_t i = 0; i < values.size(); ++i) {
    b.add_row(day(2020, 1, 1) + Duration{static_cast<long long>(i)}, {"", format_number(values[i])});
  }
  return std::move(b).build();
}

std::vector<double> as_doubles(const std::vector<Epsilon>& eps) {
  std::vector<double> out;
  for (const auto& e : eps) out.push_back(std::get<double>(e));
  return out;
}

const TaskTemplate kGreaterX{EntityChoice::root(), FilterOp::Greater, "x", AggOp::Count,
                             std::nullopt};
const TaskTemplate kLessX{EntityChoice::root(), FilterOp::Less, "x", AggOp::Count, std::nullopt};

TEST(ProposeHyperparameters, FourValuesGreater) {
  const std::vector<double> values{4, 1, 3, 2};
  const auto eps = as_doubles(propose_hyperparameters(kGreaterX, numeric_table(values)));
  EXPECT_EQ(eps, testing::exhaustive_thresholds(values, true));
  // 50 % target: eps = 2 keeps {3, 4}.
  ASSERT_EQ(eps.size(), 3u);
  EXPECT_EQ(eps[1], 2.0);
}

TEST(ProposeHyperparameters, UniformHundred) {
  std::vector<double> values;
  for (int v = 1; v <= 100; ++v) values.push_back(v);
  const auto gt = as_doubles(propose_hyperparameters(kGreaterX, numeric_table(values)));
  ASSERT_EQ(gt.size(), 3u);
  EXPECT_EQ(gt[1], 50.0);
  EXPECT_EQ(gt, testing::exhaustive_thresholds(values, true));
  const auto lt = as_doubles(propose_hyperparameters(kLessX, numeric_table(values)));
  EXPECT_EQ(lt, testing::exhaustive_thresholds(values, false));
}

TEST(ProposeHyperparameters, MatchesExhaustiveSearchOnRandomColumns) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
    const int spread = std::uniform_int_distribution<int>(1, 50)(rng);
    std::vector<double> values(n);
    for (auto& v : values) v = std::uniform_int_distribution<int>(0, spread)(rng) * 0.5;
    const EventTable t = numeric_table(values);
    EXPECT_EQ(as_doubles(propose_hyperparameters(kGreaterX, t)),
              testing::exhaustive_thresholds(values, true));
    EXPECT_EQ(as_doubles(propose_hyperparameters(kLessX, t)),
              testing::exhaustive_thresholds(values, false));
  }
}

TEST(ProposeHyperparameters, LargeColumnIsSampledDeterministically) {
  std::mt19937_64 rng(2);
  std::vector<double> values(50000);
  for (auto& v : values) v = std::uniform_real_distribution<double>(0, 1)(rng);
  const EventTable t = numeric_table(values);
  const auto a = as_doubles(propose_hyperparameters(kGreaterX, t));
  EXPECT_EQ(a, as_doubles(propose_hyperparameters(kGreaterX, t)));
  ASSERT_EQ(a.size(), 3u);
  // Kept fractions over the full column stay near the targets.
  for (std::size_t i = 0; i < 3; ++i) {
    const double kept = std::count_if(values.begin(), values.end(),
                                      [&](double v) { return v > a[i]; }) /
                        static_cast<double>(values.size());
    EXPECT_NEAR(kept, kTargetKeepRatios[i], 0.02);
  }
}

TEST(ProposeHyperparameters, Categories) {
  const Schema s("c", {{"t", ColumnRole::Time}, {"c", ColumnRole::Categorical}});
  EventTable::Builder b(s);
  const std::vector<std::string> cells{"a", "b", "b", "c", "c", "c", "d", "d", "d", "d", "e", ""};
  for (const auto& v : cells) b.add_row(day(2020, 1, 1), {"", v});
  const EventTable t = std::move(b).build();
  const TaskTemplate eq{EntityChoice::root(), FilterOp::Eq, "c", AggOp::Count, std::nullopt};
  EXPECT_EQ(propose_hyperparameters(eq, t),
            (std::vector<Epsilon>{std::string("d"), std::string("c"), std::string("b")}));

  EventTable::Builder two(s);
  for (const char* v : {"x", "y", "x"}) two.add_row(day(2020, 1, 1), {"", v});
  EXPECT_EQ(propose_hyperparameters(eq, std::move(two).build()).size(), 2u);
}

TEST(ProposeHyperparameters, AllFilAndEmptyColumns) {
  const EventTable t = numeric_table({1, 2});
  EXPECT_EQ(propose_hyperparameters(TaskTemplate{}, t), (std::vector<Epsilon>{Epsilon{}}));
  const Schema s("v", {{"t", ColumnRole::Time}, {"x", ColumnRole::Numerical}});
  EventTable::Builder b(s);
  b.add_row(day(2020, 1, 1), {"", ""});
  EXPECT_TRUE(propose_hyperparameters(kGreaterX, std::move(b).build()).empty());
}

// Airlines AA and UA, one flight per day through January 2019.
EventTable january_flights() {
  EventTable::Builder b(testing::flight_schema());
  for (unsigned d = 1; d <= 31; ++d) {
    b.add_row(day(2019, 1, d, 9), {"", "AA1", "AA", d % 3 == 0 ? "1" : "0"});
    b.add_row(day(2019, 1, d, 17), {"", "UA1", "UA", d % 2 == 0 ? "1" : "0"});
  }
  return std::move(b).build();
}

TEST(CutoffTable, FourWeeklyWindows) {
  const EventTable t = january_flights();
  const auto c = build_cutoff_table(t, EntityChoice::column("airline"), 7 * kDay, day(2019, 1, 1),
                                    day(2019, 1, 31), day(2019, 1, 15));
  EXPECT_EQ(c.num_windows, 4u);
  ASSERT_EQ(c.rows.size(), 8u);
  const Instant starts[] = {day(2019, 1, 1), day(2019, 1, 8), day(2019, 1, 15), day(2019, 1, 22)};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c.rows[i].entity, "AA");
    EXPECT_EQ(c.rows[i].t_st, starts[i]);
    EXPECT_EQ(c.rows[i].t_ed, starts[i] + 7 * kDay);
    EXPECT_EQ(c.rows[i + 4].entity, "UA");
    EXPECT_EQ(c.rows[i + 4].t_st, starts[i]);
  }
}

TEST(CutoffTable, EdgeCases) {
  const EventTable t = january_flights();
  const auto root = EntityChoice::root();
  const auto one = build_cutoff_table(t, root, 30 * kDay, day(2019, 1, 1), day(2019, 1, 31),
                                      day(2019, 1, 1));
  EXPECT_EQ(one.num_windows, 1u);
  EXPECT_EQ(one.rows.size(), 1u);
  EXPECT_THROW(build_cutoff_table(t, root, 31 * kDay, day(2019, 1, 1), day(2019, 1, 31),
                                  day(2019, 1, 1)),
               WindowError);
  EXPECT_THROW(build_cutoff_table(t, root, kDay, day(2019, 1, 1), day(2019, 1, 31),
                                  day(2019, 2, 1)),
               WindowError);
}

TEST(CutoffTable, ThreeEntitiesFourWindows) {
  const Schema s("e", {{"t", ColumnRole::Time}, {"e", ColumnRole::Entity}});
  EventTable::Builder b(s);
  for (const char* e : {"a", "b", "c"}) b.add_row(day(2020, 1, 2), {"", e});
  const EventTable t = std::move(b).build();
  const auto c = build_cutoff_table(t, EntityChoice::column("e"), kDay, day(2020, 1, 1),
                                    day(2020, 1, 5), day(2020, 1, 3));
  EXPECT_EQ(c.rows.size(), 12u);
}

TEST(Materialize, TableTwoSplit) {
  const EventTable t = january_flights();
  const auto airline = EntityChoice::column("airline");
  const TaskTemplate tmpl{airline, FilterOp::Eq, "is_delayed", AggOp::Count, std::nullopt};
  const ExecutableTask task(tmpl, std::string("1"), 7 * kDay, day(2019, 1, 1), day(2019, 1, 31),
                            day(2019, 1, 15));
  const auto c = build_cutoff_table(t, airline, 7 * kDay, task.t_base(), task.t_terminate(),
                                    task.t_star());
  const TaskDataset d = materialize(task, t, c);
  for (const char* e : {"AA", "UA"}) {
    auto is = [&](const LabeledExample& x) { return x.entity == e; };
    EXPECT_EQ(std::count_if(d.train.begin(), d.train.end(), is), 2);
    EXPECT_EQ(std::count_if(d.validation.begin(), d.validation.end(), is), 2);
  }
  for (const auto& x : d.train) EXPECT_LT(x.t_st, task.t_star());
  for (const auto& x : d.validation) EXPECT_GE(x.t_st, task.t_star());
  // AA is delayed on days divisible by 3: Jan 1-7 has 3 and 6.
  EXPECT_EQ(d.train[0].label, Label(2.0));
  // UA on even days: Jan 8-14 has 8, 10, 12, 14.
  EXPECT_EQ(d.train[3].label, Label(4.0));
}

TEST(Materialize, CountLabelsMatchHandCounts) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto raw = testing::random_small_table(rng);
    const EventTable t = raw.build();
    const auto e = EntityChoice::column("e");
    const TaskTemplate tmpl{e, FilterOp::All, std::nullopt, AggOp::Count, std::nullopt};
    const ExecutableTask task(tmpl, {}, kDay, day(2020, 1, 1), day(2020, 1, 21), day(2020, 1, 15));
    const auto c = build_cutoff_table(t, e, kDay, task.t_base(), task.t_terminate(), task.t_star());
    const TaskDataset d = materialize(task, t, c);
    EXPECT_EQ(d.train.size() + d.validation.size(), c.rows.size());
    std::vector<LabeledExample> all = d.train;
    all.insert(all.end(), d.validation.begin(), d.validation.end());
    for (const auto& ex : all) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < raw.times.size(); ++i) {
        n += raw.cells[i][1] == ex.entity && raw.times[i] >= ex.t_st && raw.times[i] < ex.t_ed;
      }
      EXPECT_EQ(ex.label, Label(static_cast<double>(n)));
    }
  }
}

TEST(Materialize, AllMissingLabelsAreDropped) {
  const EventTable t = numeric_table({1, 2, 3});
  const TaskTemplate tmpl{EntityChoice::root(), FilterOp::Greater, "x", AggOp::Avg, "x"};
  const ExecutableTask task(tmpl, 100.0, Duration{1}, t.min_time(), t.min_time() + Duration{3},
                            t.min_time() + Duration{2});
  const auto c = build_cutoff_table(t, EntityChoice::root(), Duration{1}, task.t_base(),
                                    task.t_terminate(), task.t_star());
  const TaskDataset d = materialize(task, t, c);
  EXPECT_TRUE(d.train.empty());
  EXPECT_TRUE(d.validation.empty());
}

TEST(Materialize, NoLeakage) {
  std::mt19937_64 rng(99);
  int examined = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = testing::leakage_trial(rng);
    ASSERT_TRUE(r.failure.empty()) << r.failure;
    examined += r.examined;
  }
  EXPECT_GE(examined, 100);
}

TEST(Materialize, IsDeterministic) {
  std::mt19937_64 rng(4);
  const EventTable t = testing::random_small_table(rng, 200).build();
  const auto a = operationalize(t, EntityChoice::column("e"), kDay);
  const auto b = operationalize(t, EntityChoice::column("e"), kDay);
  ASSERT_EQ(a.tasks.size(), b.tasks.size());
  for (std::size_t i = 0; i < a.tasks.size(); ++i) EXPECT_EQ(a.tasks[i].id(), b.tasks[i].id());
}

TEST(InstantiateTasks, CountsPerFilterKind) {
  std::mt19937_64 rng(6);
  auto raw = testing::random_small_table(rng, 200);
  // Five categories with distinct frequencies.
  for (std::size_t i = 0; i < raw.cells.size(); ++i) raw.cells[i][2] = "c" + std::to_string(i % 5);
  const EventTable t = raw.build();
  EXPECT_EQ(instantiate_tasks(kGreaterX, t, kDay).size(), 3u);
  EXPECT_EQ(instantiate_tasks(TaskTemplate{}, t, kDay).size(), 1u);
  const TaskTemplate eq{EntityChoice::root(), FilterOp::Eq, "c", AggOp::Count, std::nullopt};
  const auto tasks = instantiate_tasks(eq, t, kDay);
  ASSERT_EQ(tasks.size(), 3u);
  for (const auto& task : tasks) {
    EXPECT_EQ(task.t_base(), t.min_time());
    EXPECT_EQ(task.t_terminate(), t.max_time());
  }
}

TEST(Bounds, DefaultSplitIsSeventyPercentOfWindows) {
  EXPECT_EQ(default_split(day(2020, 1, 1), day(2020, 1, 31), kDay), day(2020, 1, 22));
  // k = 4: ceil(2.8) = 3 windows of training.
  EXPECT_EQ(default_split(day(2019, 1, 1), day(2019, 1, 31), 7 * kDay), day(2019, 1, 22));
  const EventTable t = january_flights();
  const auto b = resolve_bounds(t, kDay, {});
  EXPECT_EQ(b.t_base, t.min_time());
  EXPECT_EQ(b.t_terminate, t.max_time());
  const auto o = resolve_bounds(t, kDay, {day(2019, 1, 1), day(2019, 1, 31), day(2019, 1, 15)});
  EXPECT_EQ(o.t_star, day(2019, 1, 15));
  EXPECT_THROW(resolve_bounds(t, 60 * kDay, {}), WindowError);
}

TEST(Validity, Boundaries) {
  EXPECT_TRUE(is_valid(12, 6));
  EXPECT_TRUE(is_valid(10, 5));
  EXPECT_FALSE(is_valid(9, 6));
  EXPECT_FALSE(is_valid(9, 5));
  EXPECT_FALSE(is_valid(10, 4));
}

TEST(Operationalize, KeepsOnlyValidTasks) {
  const EventTable t = january_flights();
  const auto e = EntityChoice::column("airline");
  const auto pool = operationalize(t, e, kDay);
  EXPECT_EQ(pool.report.size(), enumerate_templates(t.schema(), e).size());
  const EntityIndex index(t, e);
  const auto b = resolve_bounds(t, kDay, {});
  const auto c = build_cutoff_table(index, kDay, b.t_base, b.t_terminate, b.t_star);
  std::size_t valid = 0;
  for (const auto& r : pool.report) valid += r.n_valid;
  EXPECT_EQ(valid, pool.tasks.size());
  EXPECT_FALSE(pool.tasks.empty());
  for (const auto& task : pool.tasks) EXPECT_TRUE(is_valid(materialize(task, t, c, index)));
}

}  // namespace
}  // namespace taskforge
