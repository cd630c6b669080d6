#include "taskforge/event_table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include "taskforge/csv.hpp"
#include "taskforge/error.hpp"

namespace taskforge {

std::string_view to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::Time:
      return "time";
    case ColumnRole::Entity:
      return "entity";
    case ColumnRole::Categorical:
      return "categorical";
    case ColumnRole::Numerical:
      return "numerical";
  }
  return "unknown";
}

Schema::Schema(std::string name, std::vector<ColumnSpec> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
  std::unordered_set<std::string> seen;
  std::size_t time_columns = 0;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& col = columns_[i];
    if (col.name.empty()) throw SchemaError("schema column with empty name");
    if (!seen.insert(col.name).second) throw SchemaError("duplicate schema column '" + col.name + "'");
    if (col.role == ColumnRole::Time) {
      time_index_ = i;
      ++time_columns;
    }
  }
  if (time_columns != 1) {
    throw SchemaError("schema must have exactly one time column, found " +
                      std::to_string(time_columns));
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view column) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == column) return i;
  }
  return std::nullopt;
}

std::size_t Schema::require(std::string_view column) const {
  if (auto idx = index_of(column)) return *idx;
  throw SchemaError("unknown column '" + std::string(column) + "'");
}

std::size_t Schema::count(ColumnRole role) const {
  return static_cast<std::size_t>(std::count_if(
      columns_.begin(), columns_.end(), [role](const ColumnSpec& c) { return c.role == role; }));
}

EntityChoice EntityChoice::parse(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "root" || text == "Φ") return root();
  return column(std::string(text));
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string{"nan"};
}

std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// --- EventTable ---------------------------------------------------------

EventTable::Builder::Builder(Schema schema)
    : schema_(std::move(schema)), text_(schema_.size()), numbers_(schema_.size()) {}

void EventTable::Builder::add_row(Instant t, std::span<const std::string> cells) {
  if (cells.size() != schema_.size()) {
    throw SchemaError("row has " + std::to_string(cells.size()) + " cells, schema has " +
                      std::to_string(schema_.size()));
  }
  times_.push_back(t);
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    switch (schema_.column(c).role) {
      case ColumnRole::Time:
        break;
      case ColumnRole::Entity:
      case ColumnRole::Categorical:
        text_[c].push_back(cells[c]);
        break;
      case ColumnRole::Numerical:
        numbers_[c].push_back(parse_number(cells[c]).value_or(std::numeric_limits<double>::quiet_NaN()));
        break;
    }
  }
}

void EventTable::Builder::add_row(Instant t, std::initializer_list<std::string> cells) {
  add_row(t, std::span<const std::string>(cells.begin(), cells.size()));
}

EventTable EventTable::Builder::build() && {
  return EventTable(std::move(schema_), std::move(times_), std::move(text_), std::move(numbers_));
}

EventTable::EventTable(Schema schema, std::vector<Instant> times,
                       std::vector<std::vector<std::string>> text,
                       std::vector<std::vector<double>> numbers)
    : schema_(std::move(schema)) {
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  times_.reserve(order.size());
  for (std::size_t i : order) times_.push_back(times[i]);
  text_.resize(schema_.size());
  numbers_.resize(schema_.size());
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (!text[c].empty()) {
      text_[c].reserve(order.size());
      for (std::size_t i : order) text_[c].push_back(std::move(text[c][i]));
    }
    if (!numbers[c].empty()) {
      numbers_[c].reserve(order.size());
      for (std::size_t i : order) numbers_[c].push_back(numbers[c][i]);
    }
  }
}

std::optional<double> EventTable::number(std::size_t column, std::size_t row) const {
  const double v = numbers_[column][row];
  if (std::isnan(v)) return std::nullopt;
  return v;
}

std::string_view EventTable::entity_of(const EntityChoice& choice, std::size_t row) const {
  if (choice.is_root()) return kRootEntity;
  return text_[schema_.require(choice.column_name())][row];
}

// --- loading ------------------------------------------------------------

LoadResult load_table(std::istream& csv_source, const Schema& schema) {
  csv::Reader reader(csv_source);
  auto header = reader.next();
  if (!header) throw SchemaError("CSV input has no header row");

  // schema column -> CSV field index
  std::vector<std::size_t> field_of(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& name = schema.column(c).name;
    const auto it = std::find(header->begin(), header->end(), name);
    if (it == header->end()) {
      throw SchemaError("schema column '" + name + "' is not present in the CSV header");
    }
    field_of[c] = static_cast<std::size_t>(it - header->begin());
  }

  EventTable::Builder builder(schema);
  std::size_t loaded = 0;
  std::size_t dropped = 0;
  std::vector<std::size_t> dropped_lines;
  std::vector<std::string> cells(schema.size());
  const std::size_t time_field = field_of[schema.time_index()];
  while (auto record = reader.next()) {
    if (record->size() == 1 && record->front().empty()) continue;  // blank line
    std::optional<Instant> t;
    if (record->size() == header->size()) t = parse_instant((*record)[time_field]);
    if (!t) {
      ++dropped;
      if (dropped_lines.size() < 10) dropped_lines.push_back(reader.line());
      continue;
    }
    for (std::size_t c = 0; c < schema.size(); ++c) cells[c] = (*record)[field_of[c]];
    builder.add_row(*t, cells);
    ++loaded;
  }
  if (loaded == 0) {
    throw EmptyTableError("no parseable rows (" + std::to_string(dropped) + " dropped)");
  }
  return LoadResult{std::move(builder).build(), loaded, dropped, std::move(dropped_lines)};
}

void write_csv(const EventTable& table, std::ostream& out) {
  const Schema& schema = table.schema();
  csv::Record record(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) record[c] = schema.column(c).name;
  csv::write_record(out, record);
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      switch (schema.column(c).role) {
        case ColumnRole::Time:
          record[c] = format_instant(table.time(r));
          break;
        case ColumnRole::Entity:
        case ColumnRole::Categorical:
          record[c] = table.text(c, r);
          break;
        case ColumnRole::Numerical: {
          const auto v = table.number(c, r);
          record[c] = v ? format_number(*v) : std::string{};
          break;
        }
      }
    }
    csv::write_record(out, record);
  }
}

// --- entities and windows -------------------------------------------------

std::vector<EntityChoice> entity_candidates(const Schema& schema) {
  std::vector<EntityChoice> out{EntityChoice::root()};
  for (const auto& col : schema.columns()) {
    if (col.role == ColumnRole::Entity || col.role == ColumnRole::Categorical) {
      out.push_back(EntityChoice::column(col.name));
    }
  }
  return out;
}

void check_entity_choice(const Schema& schema, const EntityChoice& choice) {
  if (choice.is_root()) return;
  const auto& col = schema.column(schema.require(choice.column_name()));
  if (col.role != ColumnRole::Entity && col.role != ColumnRole::Categorical) {
    throw SchemaError("column '" + col.name + "' has role " + std::string(to_string(col.role)) +
                      " and cannot be a prediction entity");
  }
}

RowSet slice_window(const EventTable& table, const EntityChoice& e_star, std::string_view entity,
                    Instant t_st, Instant t_ed) {
  if (t_st >= t_ed) {
    throw WindowError("window start " + format_instant(t_st) + " is not before end " +
                      format_instant(t_ed));
  }
  const auto times = table.times();
  const auto lo = std::lower_bound(times.begin(), times.end(), t_st);
  const auto hi = std::lower_bound(lo, times.end(), t_ed);
  RowSet rows;
  std::optional<std::size_t> col;
  if (!e_star.is_root()) col = table.schema().require(e_star.column_name());
  for (auto it = lo; it != hi; ++it) {
    const auto r = static_cast<std::size_t>(it - times.begin());
    if (!col || table.text(*col, r) == entity) rows.push_back(r);
  }
  return rows;
}

EntityIndex::EntityIndex(const EventTable& table, const EntityChoice& e_star)
    : table_(&table), choice_(e_star) {
  check_entity_choice(table.schema(), e_star);
  if (e_star.is_root()) {
    entities_.emplace_back(kRootEntity);
    auto& all = rows_[std::string(kRootEntity)];
    all.resize(table.num_rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return;
  }
  const std::size_t col = table.schema().require(e_star.column_name());
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const auto& value = table.text(col, r);
    if (value.empty()) continue;
    rows_[value].push_back(r);
  }
  entities_.reserve(rows_.size());
  for (const auto& [value, _] : rows_) entities_.push_back(value);
  std::sort(entities_.begin(), entities_.end());
}

std::span<const std::size_t> EntityIndex::rows_of(std::string_view entity) const {
  const auto it = rows_.find(std::string(entity));
  if (it == rows_.end()) return {};
  return it->second;
}

std::pair<std::size_t, std::size_t> EntityIndex::bounds(std::span<const std::size_t> rows,
                                                        Instant from, Instant to) const {
  const auto before = [this](std::size_t row, Instant t) { return table_->time(row) < t; };
  const auto lo = std::lower_bound(rows.begin(), rows.end(), from, before);
  const auto hi = std::lower_bound(lo, rows.end(), to, before);
  return {static_cast<std::size_t>(lo - rows.begin()), static_cast<std::size_t>(hi - rows.begin())};
}

RowSet EntityIndex::slice(std::string_view entity, Instant t_st, Instant t_ed) const {
  if (t_st >= t_ed) {
    throw WindowError("window start " + format_instant(t_st) + " is not before end " +
                      format_instant(t_ed));
  }
  const auto rows = rows_of(entity);
  const auto [lo, hi] = bounds(rows, t_st, t_ed);
  return RowSet(rows.begin() + static_cast<std::ptrdiff_t>(lo),
                rows.begin() + static_cast<std::ptrdiff_t>(hi));
}

std::size_t EntityIndex::count_between(std::string_view entity, Instant from, Instant to) const {
  if (from >= to) return 0;
  const auto [lo, hi] = bounds(rows_of(entity), from, to);
  return hi - lo;
}

std::size_t EntityIndex::count_before(std::string_view entity, Instant t) const {
  const auto rows = rows_of(entity);
  const auto before = [this](std::size_t row, Instant x) { return table_->time(row) < x; };
  return static_cast<std::size_t>(std::lower_bound(rows.begin(), rows.end(), t, before) -
                                  rows.begin());
}

std::vector<ColumnSummary> summarize(const EventTable& table) {
  std::vector<ColumnSummary> out;
  const Schema& schema = table.schema();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    ColumnSummary s;
    s.name = schema.column(c).name;
    s.role = schema.column(c).role;
    switch (s.role) {
      case ColumnRole::Time:
        if (!table.empty()) {
          s.first = table.min_time();
          s.last = table.max_time();
        }
        break;
      case ColumnRole::Entity:
      case ColumnRole::Categorical: {
        std::set<std::string_view> distinct;
        for (std::size_t r = 0; r < table.num_rows(); ++r) {
          const auto& v = table.text(c, r);
          if (v.empty()) {
            ++s.missing;
          } else {
            distinct.insert(v);
          }
        }
        s.cardinality = distinct.size();
        break;
      }
      case ColumnRole::Numerical:
        for (std::size_t r = 0; r < table.num_rows(); ++r) {
          const auto v = table.number(c, r);
          if (!v) {
            ++s.missing;
            continue;
          }
          s.min = s.min ? std::min(*s.min, *v) : *v;
          s.max = s.max ? std::max(*s.max, *v) : *v;
        }
        break;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace taskforge
