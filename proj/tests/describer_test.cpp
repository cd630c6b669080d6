#include <gtest/gtest.h>

#include <set>

#include "taskforge/describer.hpp"
#include "test_support.hpp"

namespace taskforge {
namespace {

using testing::day;
using testing::kDay;

TEST(Describe, DelayedFlightsPerAirline) {
  const TaskTemplate t{EntityChoice::column("airline"), FilterOp::Eq, "is_delayed", AggOp::Count,
                       std::nullopt};
  const ExecutableTask task(t, std::string("1"), kDay, day(2019, 1, 1), day(2019, 1, 31),
                            day(2019, 1, 20));
  EXPECT_EQ(describe(task),
            "For each airline, predict the number of records where is_delayed is 1, in the next 1 "
            "day.");
}

TEST(Describe, RootCount) {
  EXPECT_EQ(describe(TaskTemplate{}, {}, 7 * kDay),
            "Over all records, predict the number of records in the next 7 days.");
  EXPECT_EQ(describe(TaskTemplate{}), "Over all records, predict the number of records in the next window.");
}

TEST(Describe, MajorityDestination) {
  const TaskTemplate t{EntityChoice::column("station"), FilterOp::All, std::nullopt,
                       AggOp::Majority, "destination"};
  EXPECT_EQ(describe(t, {}, kDay),
            "For each station, predict the most common destination in the next 1 day.");
}

TEST(Describe, PhrasesPerOperation) {
  const auto e = EntityChoice::column("e");
  EXPECT_EQ(describe(TaskTemplate{e, FilterOp::Greater, "x", AggOp::Avg, "y"}, 2.5, kDay),
            "For each e, predict the average of y where x is greater than 2.5, in the next 1 day.");
  EXPECT_EQ(describe(TaskTemplate{e, FilterOp::Less, "x", AggOp::Sum, "y"}),
            "For each e, predict the total of y where x is less than a threshold, in the next "
            "window.");
  EXPECT_EQ(describe(TaskTemplate{e, FilterOp::Neq, "c", AggOp::Min, "y"}, std::string("z"), kDay),
            "For each e, predict the minimum of y where c is not z, in the next 1 day.");
  EXPECT_EQ(describe(TaskTemplate{e, FilterOp::Eq, "c", AggOp::Max, "y"}),
            "For each e, predict the maximum of y where c is a given value, in the next window.");
}

TEST(Describe, TotalAndInjectiveOverReferenceSchemas) {
  for (const char* name : {"chicago_bicycle", "flight_delay", "youtube_trending"}) {
    const Schema s = testing::reference_schema(name);
    std::set<std::string> seen;
    std::size_t n = 0;
    for (const auto& e : entity_candidates(s)) {
      for (const auto& t : enumerate_templates(s, e)) {
        std::vector<Epsilon> eps{Epsilon{}};
        if (t.filter_op == FilterOp::Greater || t.filter_op == FilterOp::Less) {
          eps = {1.0, 2.5};
        } else if (t.filter_op != FilterOp::All) {
          eps = {std::string("a"), std::string("b")};
        }
        for (const auto& x : eps) {
          const std::string text = describe(t, x, kDay);
          EXPECT_FALSE(text.empty());
          EXPECT_EQ(text.back(), '.');
          seen.insert(text);
          ++n;
        }
      }
    }
    EXPECT_EQ(seen.size(), n) << name;
  }
}

}  // namespace
}  // namespace taskforge
