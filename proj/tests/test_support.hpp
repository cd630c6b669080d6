#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "taskforge/event_table.hpp"
#include "taskforge/task_io.hpp"
#include "taskforge/task_space.hpp"
#include "taskforge/time.hpp"

namespace taskforge::testing {

inline Instant day(int y, unsigned m, unsigned d, int hour = 0) {
  using namespace std::chrono;
  return Instant{sys_days{year{y} / month{m} / d}} + hours{hour};
}

inline constexpr Duration kDay{86400};

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(TASKFORGE_FIXTURE_DIR) / name;
}

inline Schema reference_schema(const std::string& name) {
  return io::load_schema(fixture(name + ".schema.json"));
}

// datetime, flight_number (entity), airline (entity), is_delayed (categorical).
inline Schema flight_schema() {
  return Schema("flights", {{"datetime", ColumnRole::Time},
                            {"flight_number", ColumnRole::Entity},
                            {"airline", ColumnRole::Entity},
                            {"is_delayed", ColumnRole::Categorical}});
}

// time t, entity e, categorical c, numerical x and y.
inline Schema small_schema() {
  return Schema("small", {{"t", ColumnRole::Time},
                          {"e", ColumnRole::Entity},
                          {"c", ColumnRole::Categorical},
                          {"x", ColumnRole::Numerical},
                          {"y", ColumnRole::Numerical}});
}

// Raw rows kept alongside a built table so oracles can work without the
// table's accessors. `cells` is in schema order (time cell unused).
struct RawTable {
  Schema schema;
  std::vector<Instant> times;
  std::vector<std::vector<std::string>> cells;

  EventTable build() const {
    EventTable::Builder b(schema);
    for (std::size_t i = 0; i < times.size(); ++i) b.add_row(times[i], cells[i]);
    return std::move(b).build();
  }
};

// Up to `max_rows` rows over 20 days, times sorted; roughly 10% of the
// numerical and categorical cells are missing.
inline RawTable random_small_table(std::mt19937_64& rng, std::size_t max_rows = 200) {
  RawTable raw{small_schema(), {}, {}};
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_rows)(rng);
  std::uniform_int_distribution<long long> second(0, 20 * 86400 - 1);
  std::vector<long long> offsets(n);
  for (auto& o : offsets) o = second(rng);
  std::sort(offsets.begin(), offsets.end());
  std::uniform_int_distribution<int> entity(0, 3), category(0, 4), value(-20, 20), coin(0, 9);
  for (std::size_t i = 0; i < n; ++i) {
    raw.times.push_back(day(2020, 1, 1) + Duration{offsets[i]});
    std::vector<std::string> row(5);
    row[1] = "e" + std::to_string(entity(rng));
    row[2] = coin(rng) == 0 ? "" : "c" + std::to_string(category(rng));
    row[3] = coin(rng) == 0 ? "" : std::to_string(value(rng) * 0.25);
    row[4] = coin(rng) == 0 ? "" : std::to_string(value(rng) * 0.5);
    raw.cells.push_back(std::move(row));
  }
  return raw;
}


// Flight log for service tests: AA, UA, DL and WN fly 3, 5, 2 and 4 times a
// day for `days` days from 2019-01-01; delays are seeded noise.
inline std::string synthetic_flights_csv(int days, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::string out = "datetime,airline,origin,is_delayed,delay\n";
  const std::pair<const char*, int> airlines[] = {{"AA", 3}, {"UA", 5}, {"DL", 2}, {"WN", 4}};
  const char* origins[] = {"ORD", "JFK", "SFO"};
  for (int d = 0; d < days; ++d) {
    for (const auto& [airline, n] : airlines) {
      for (int i = 0; i < n; ++i) {
        const Instant t = day(2019, 1, 1) + d * kDay + Duration{3600 * (6 + 2 * i)};
        const int delay = static_cast<int>(rng() % 60) - 10;
        out += format_instant(t) + "," + airline + "," + origins[rng() % 3] + "," +
               (delay > 15 ? "1" : "0") + "," + std::to_string(delay) + "\n";
      }
    }
  }
  return out;
}

inline nlohmann::json synthetic_flights_schema() {
  return {{"name", "flights"},
          {"time", "datetime"},
          {"entity", {"airline"}},
          {"categorical", {"origin", "is_delayed"}},
          {"numerical", {"delay"}}};
}

}  // namespace taskforge::testing
