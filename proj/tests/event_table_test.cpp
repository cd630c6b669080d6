#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "taskforge/error.hpp"
#include "taskforge/event_table.hpp"
#include "test_support.hpp"

namespace taskforge {
namespace {

using testing::day;
using testing::kDay;

std::string flight_csv() {
  return "airline,datetime,is_delayed,flight_number\n"
         "AA,2019-01-01 08:00:00,1,AA100\n"
         "AA,2019-01-01 12:00:00,0,AA101\n"
         "UA,2019-01-02T09:30:00Z,1,UA7\n"
         "AA,2019-01-08 00:00:00,1,AA100\n";
}

TEST(Schema, CountsRoles) {
  const Schema s = testing::flight_schema();
  EXPECT_EQ(s.count(ColumnRole::Entity), 2u);
  EXPECT_EQ(s.count(ColumnRole::Categorical), 1u);
  EXPECT_EQ(s.count(ColumnRole::Numerical), 0u);
  EXPECT_EQ(s.time_column(), "datetime");
}

TEST(Schema, RejectsDuplicateNamesAndTimeCount) {
  EXPECT_THROW(Schema("x", {{"t", ColumnRole::Time}, {"t", ColumnRole::Entity}}), SchemaError);
  EXPECT_THROW(Schema("x", {{"a", ColumnRole::Entity}}), SchemaError);
  EXPECT_THROW(Schema("x", {{"t", ColumnRole::Time}, {"u", ColumnRole::Time}}), SchemaError);
}

TEST(LoadTable, FlightCsv) {
  std::istringstream in(flight_csv());
  const LoadResult r = load_table(in, testing::flight_schema());
  EXPECT_EQ(r.loaded, 4u);
  EXPECT_EQ(r.dropped, 0u);
  const EventTable& t = r.table;
  EXPECT_EQ(t.num_rows(), 4u);
  EXPECT_EQ(t.schema().count(ColumnRole::Entity), 2u);
  EXPECT_EQ(t.min_time(), day(2019, 1, 1, 8));
  EXPECT_EQ(t.max_time(), day(2019, 1, 8));
  const auto airline = t.schema().require("airline");
  EXPECT_EQ(t.text(airline, 2), "UA");
}

TEST(LoadTable, MissingHeaderColumnIsSchemaError) {
  Schema s("flights", {{"datetime", ColumnRole::Time},
                       {"airline", ColumnRole::Entity},
                       {"foo", ColumnRole::Categorical}});
  std::istringstream in(flight_csv());
  EXPECT_THROW(load_table(in, s), SchemaError);
}

TEST(LoadTable, NoParseableRowsIsEmptyTableError) {
  std::istringstream in("airline,datetime,is_delayed,flight_number\nAA,yesterday,1,AA1\n");
  EXPECT_THROW(load_table(in, testing::flight_schema()), EmptyTableError);
  std::istringstream header_only("airline,datetime,is_delayed,flight_number\n");
  EXPECT_THROW(load_table(header_only, testing::flight_schema()), EmptyTableError);
}

TEST(LoadTable, DropsMalformedTimestamps) {
  std::ostringstream csv;
  csv << "datetime,flight_number,airline,is_delayed\n";
  const std::set<int> bad{17, 500, 999};
  for (int i = 0; i < 1000; ++i) {
    if (bad.count(i)) {
      csv << (i == 17 ? "2019-13-01 00:00:00" : i == 500 ? "not a date" : "") << ",F" << i
          << ",AA,0\n";
    } else {
      csv << format_instant(day(2019, 1, 1) + Duration{i * 60}) << ",F" << i << ",AA," << i % 2
          << "\n";
    }
  }
  std::istringstream in(csv.str());
  const LoadResult r = load_table(in, testing::flight_schema());
  EXPECT_EQ(r.loaded, 997u);
  EXPECT_EQ(r.dropped, 3u);
  EXPECT_EQ(r.table.num_rows(), 997u);
  ASSERT_EQ(r.dropped_lines.size(), 3u);
  EXPECT_EQ(r.dropped_lines[0], 19u);
}

TEST(LoadTable, MissingNumbersStayMissing) {
  Schema s("n", {{"t", ColumnRole::Time}, {"x", ColumnRole::Numerical}});
  std::istringstream in("t,x\n2020-01-01,1.5\n2020-01-02,\n2020-01-03,abc\n");
  const EventTable t = load_table(in, s).table;
  ASSERT_EQ(t.num_rows(), 3u);
  EXPECT_EQ(t.number(1, 0), 1.5);
  EXPECT_FALSE(t.number(1, 1).has_value());
  EXPECT_FALSE(t.number(1, 2).has_value());
}

TEST(LoadTable, StableSortByTime) {
  Schema s("n", {{"t", ColumnRole::Time}, {"e", ColumnRole::Entity}});
  std::istringstream in("t,e\n2020-01-02,b\n2020-01-01,a\n2020-01-02,c\n2020-01-01,d\n");
  const EventTable t = load_table(in, s).table;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < t.num_rows(); ++r) order.push_back(t.text(1, r));
  EXPECT_EQ(order, (std::vector<std::string>{"a", "d", "b", "c"}));
}

TEST(EntityCandidates, ReferenceSchemas) {
  const auto yt = entity_candidates(testing::reference_schema("youtube_trending"));
  ASSERT_EQ(yt.size(), 3u);
  EXPECT_TRUE(yt[0].is_root());
  EXPECT_EQ(yt[1].column_name(), "channel_title");
  EXPECT_EQ(yt[2].column_name(), "category_id");
  EXPECT_EQ(entity_candidates(testing::reference_schema("flight_delay")).size(), 9u);
  const auto only_time = entity_candidates(Schema("t", {{"t", ColumnRole::Time}}));
  ASSERT_EQ(only_time.size(), 1u);
  EXPECT_TRUE(only_time[0].is_root());
}

TEST(EntityChoice, ParseAndCheck) {
  EXPECT_TRUE(EntityChoice::parse("root").is_root());
  EXPECT_TRUE(EntityChoice::parse("Root").is_root());
  EXPECT_EQ(EntityChoice::parse("airline").column_name(), "airline");
  const Schema s = testing::small_schema();
  EXPECT_NO_THROW(check_entity_choice(s, EntityChoice::column("c")));
  EXPECT_THROW(check_entity_choice(s, EntityChoice::column("x")), SchemaError);
  EXPECT_THROW(check_entity_choice(s, EntityChoice::column("t")), SchemaError);
  EXPECT_THROW(check_entity_choice(s, EntityChoice::column("nope")), SchemaError);
}

EventTable table2_flights() {
  EventTable::Builder b(testing::flight_schema());
  b.add_row(day(2019, 1, 1, 1), {"", "AA1", "AA", "1"});
  b.add_row(day(2019, 1, 1, 5), {"", "AA2", "AA", "0"});
  b.add_row(day(2019, 1, 3), {"", "UA1", "UA", "1"});
  b.add_row(day(2019, 1, 7, 23), {"", "AA1", "AA", "1"});
  b.add_row(day(2019, 1, 8), {"", "AA3", "AA", "0"});
  b.add_row(day(2019, 1, 20), {"", "AA1", "AA", "1"});
  return std::move(b).build();
}

TEST(SliceWindow, EntityAndHalfOpenInterval) {
  const EventTable t = table2_flights();
  const auto airline = EntityChoice::column("airline");
  EXPECT_EQ(slice_window(t, airline, "AA", day(2019, 1, 1), day(2019, 1, 8)),
            (RowSet{0, 1, 3}));
  EXPECT_EQ(slice_window(t, airline, "AA", day(2019, 1, 8), day(2019, 1, 15)), (RowSet{4}));
  EXPECT_EQ(slice_window(t, EntityChoice::root(), "", day(2019, 1, 1), day(2019, 1, 8)),
            (RowSet{0, 1, 2, 3}));
  EXPECT_TRUE(slice_window(t, airline, "AA", day(2018, 1, 1), day(2018, 2, 1)).empty());
  EXPECT_TRUE(slice_window(t, airline, "DL", day(2019, 1, 1), day(2019, 2, 1)).empty());
}

TEST(SliceWindow, RowAtEndExcludedAtStartIncluded) {
  const EventTable t = table2_flights();
  const auto airline = EntityChoice::column("airline");
  EXPECT_EQ(slice_window(t, airline, "AA", day(2019, 1, 7), day(2019, 1, 8)), (RowSet{3}));
  EXPECT_EQ(slice_window(t, airline, "AA", day(2019, 1, 8), day(2019, 1, 9)), (RowSet{4}));
}

TEST(SliceWindow, EmptyIntervalIsWindowError) {
  const EventTable t = table2_flights();
  EXPECT_THROW(slice_window(t, EntityChoice::root(), "", day(2019, 1, 8), day(2019, 1, 8)),
               WindowError);
  EXPECT_THROW(slice_window(t, EntityChoice::root(), "", day(2019, 1, 9), day(2019, 1, 8)),
               WindowError);
}

// Naive filter over the raw rows.
RowSet naive_slice(const testing::RawTable& raw, std::optional<std::size_t> entity_col,
                   const std::string& entity, Instant from, Instant to) {
  RowSet out;
  for (std::size_t i = 0; i < raw.times.size(); ++i) {
    if (raw.times[i] < from || raw.times[i] >= to) continue;
    if (entity_col && raw.cells[i][*entity_col] != entity) continue;
    out.push_back(i);
  }
  return out;
}

TEST(SliceWindow, MatchesNaiveScanAndEntityIndex) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto raw = testing::random_small_table(rng);
    const EventTable t = raw.build();
    for (const auto& choice : entity_candidates(t.schema())) {
      const EntityIndex index(t, choice);
      const std::optional<std::size_t> col =
          choice.is_root() ? std::nullopt : std::optional{t.schema().require(choice.column_name())};
      for (const auto& e : index.entities()) {
        const Instant from = day(2020, 1, 1) + Duration{trial * 3600};
        const Instant to = from + 3 * kDay;
        const RowSet expect = naive_slice(raw, col, e, from, to);
        EXPECT_EQ(slice_window(t, choice, e, from, to), expect);
        EXPECT_EQ(index.slice(e, from, to), expect);
        EXPECT_EQ(index.count_between(e, from, to), expect.size());
      }
    }
  }
}

TEST(SliceWindow, BackToBackWindowsPartitionRows) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const EventTable t = testing::random_small_table(rng).build();
    const auto choice = EntityChoice::column("e");
    const EntityIndex index(t, choice);
    const Instant base = day(2020, 1, 1);
    const Duration w = 2 * kDay;
    for (const auto& e : index.entities()) {
      std::multiset<std::size_t> seen;
      for (int k = 0; k < 10; ++k) {
        for (auto r : slice_window(t, choice, e, base + k * w, base + (k + 1) * w)) seen.insert(r);
      }
      const auto rows = index.rows_of(e);
      EXPECT_EQ(seen, std::multiset<std::size_t>(rows.begin(), rows.end()));
    }
  }
}

TEST(SliceWindow, RootIsUnionOfEntities) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const EventTable t = testing::random_small_table(rng).build();
    const Instant from = day(2020, 1, 4), to = day(2020, 1, 9);
    for (const char* col : {"e", "c"}) {
      const EntityIndex index(t, EntityChoice::column(col));
      std::set<std::size_t> u;
      for (const auto& e : index.entities()) {
        for (auto r : index.slice(e, from, to)) u.insert(r);
      }
      // Rows with a missing entity value belong to no entity.
      const auto ci = t.schema().require(col);
      std::set<std::size_t> expect;
      for (auto r : slice_window(t, EntityChoice::root(), "", from, to)) {
        if (!t.text(ci, r).empty()) expect.insert(r);
      }
      EXPECT_EQ(u, expect);
    }
  }
}

TEST(WriteCsv, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const EventTable a = testing::random_small_table(rng).build();
    std::stringstream buf;
    write_csv(a, buf);
    const EventTable b = load_table(buf, a.schema()).table;
    ASSERT_EQ(a.num_rows(), b.num_rows());
    for (std::size_t r = 0; r < a.num_rows(); ++r) {
      EXPECT_EQ(a.time(r), b.time(r));
      EXPECT_EQ(a.text(1, r), b.text(1, r));
      EXPECT_EQ(a.text(2, r), b.text(2, r));
      EXPECT_EQ(a.number(3, r), b.number(3, r));
      EXPECT_EQ(a.number(4, r), b.number(4, r));
    }
  }
}

TEST(WriteCsv, ShortestNumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e21, 123456789.125}) {
    EXPECT_EQ(parse_number(format_number(v)), v);
  }
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_FALSE(parse_number("1.5x").has_value());
}

TEST(Summarize, CountsMissingAndRanges) {
  Schema s("n", {{"t", ColumnRole::Time}, {"e", ColumnRole::Entity}, {"x", ColumnRole::Numerical}});
  std::istringstream in("t,e,x\n2020-01-01,a,3\n2020-01-02,,\n2020-01-03,b,-1\n");
  const auto sum = summarize(load_table(in, s).table);
  ASSERT_EQ(sum.size(), 3u);
  EXPECT_EQ(sum[1].cardinality, 2u);
  EXPECT_EQ(sum[1].missing, 1u);
  EXPECT_EQ(sum[2].min, -1.0);
  EXPECT_EQ(sum[2].max, 3.0);
  EXPECT_EQ(sum[2].missing, 1u);
  EXPECT_EQ(sum[0].first, day(2020, 1, 1));
}

TEST(Time, ParsesFormats) {
  EXPECT_EQ(parse_instant("2019-01-01"), day(2019, 1, 1));
  EXPECT_EQ(parse_instant("2019-01-01 08:00:00"), day(2019, 1, 1, 8));
  EXPECT_EQ(parse_instant("2019-01-01T08:00:00Z"), day(2019, 1, 1, 8));
  EXPECT_EQ(parse_instant("2019-01-01T10:00:00+02:00"), day(2019, 1, 1, 8));
  EXPECT_EQ(parse_instant("2019-01-01T08:00:00.250Z"), day(2019, 1, 1, 8));
  EXPECT_FALSE(parse_instant("2019-02-30").has_value());
  EXPECT_FALSE(parse_instant("01/02/2019").has_value());
  EXPECT_EQ(format_instant(day(2019, 1, 1, 8)), "2019-01-01T08:00:00Z");
  EXPECT_EQ(parse_duration("1d"), kDay);
  EXPECT_EQ(parse_duration("2w"), 14 * kDay);
  EXPECT_EQ(parse_duration("90"), Duration{90});
  EXPECT_FALSE(parse_duration("0d").has_value());
  EXPECT_EQ(format_duration(kDay), "1 day");
  EXPECT_EQ(format_duration(7 * kDay), "7 days");
}

}  // namespace
}  // namespace taskforge
