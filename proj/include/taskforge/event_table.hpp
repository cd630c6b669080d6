#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "taskforge/time.hpp"

namespace taskforge {

enum class ColumnRole { Time, Entity, Categorical, Numerical };

std::string_view to_string(ColumnRole role);

struct ColumnSpec {
  std::string name;
  ColumnRole role;
};

// Ordered, named column roles. Construction enforces unique names and
// exactly one time column.
class Schema {
 public:
  Schema(std::string name, std::vector<ColumnSpec> columns);

  const std::string& name() const { return name_; }
  std::span<const ColumnSpec> columns() const { return columns_; }
  std::size_t size() const { return columns_.size(); }
  const ColumnSpec& column(std::size_t index) const { return columns_.at(index); }

  std::optional<std::size_t> index_of(std::string_view column) const;
  // Throws SchemaError when the column does not exist.
  std::size_t require(std::string_view column) const;

  std::size_t time_index() const { return time_index_; }
  const std::string& time_column() const { return columns_[time_index_].name; }
  std::size_t count(ColumnRole role) const;

 private:
  std::string name_;
  std::vector<ColumnSpec> columns_;
  std::size_t time_index_ = 0;
};

// The entity a task predicts for: the pseudo root entity (every row) or
// an Entity/Categorical column.
class EntityChoice {
 public:
  static EntityChoice root() { return EntityChoice{}; }
  static EntityChoice column(std::string name) { return EntityChoice{std::move(name)}; }
  // "root" (any case) or a column name.
  static EntityChoice parse(std::string_view text);

  bool is_root() const { return !column_.has_value(); }
  const std::string& column_name() const { return *column_; }
  // "root" or the column name.
  std::string label() const { return column_ ? *column_ : std::string{"root"}; }

  bool operator==(const EntityChoice&) const = default;
  auto operator<=>(const EntityChoice&) const = default;

 private:
  EntityChoice() = default;
  explicit EntityChoice(std::string name) : column_(std::move(name)) {}
  std::optional<std::string> column_;
};

// Entity value that every row carries under the root entity choice.
inline constexpr std::string_view kRootEntity = "*";

using RowSet = std::vector<std::size_t>;

// Immutable, time-sorted, columnar event table. Text cells (entity and
// categorical) are empty when missing; numerical cells are nullopt.
class EventTable {
 public:
  class Builder {
   public:
    explicit Builder(Schema schema);
    // `cells` holds one raw string per schema column; the time cell is
    // ignored in favour of `t`. Numerical cells that are empty or do not
    // parse are stored as missing.
    void add_row(Instant t, std::span<const std::string> cells);
    void add_row(Instant t, std::initializer_list<std::string> cells);
    EventTable build() &&;

   private:
    Schema schema_;
    std::vector<Instant> times_;
    std::vector<std::vector<std::string>> text_;
    std::vector<std::vector<double>> numbers_;
  };

  const Schema& schema() const { return schema_; }
  std::size_t num_rows() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  Instant time(std::size_t row) const { return times_[row]; }
  std::span<const Instant> times() const { return times_; }
  Instant min_time() const { return times_.front(); }
  Instant max_time() const { return times_.back(); }

  // Entity or categorical cell; empty string means missing.
  const std::string& text(std::size_t column, std::size_t row) const {
    return text_[column][row];
  }
  std::optional<double> number(std::size_t column, std::size_t row) const;

  // Value of an entity choice for a row (kRootEntity under root).
  std::string_view entity_of(const EntityChoice& choice, std::size_t row) const;

 private:
  EventTable(Schema schema, std::vector<Instant> times, std::vector<std::vector<std::string>> text,
             std::vector<std::vector<double>> numbers);

  Schema schema_;
  std::vector<Instant> times_;
  // Indexed by schema column; only the matching role's vector is filled.
  std::vector<std::vector<std::string>> text_;
  std::vector<std::vector<double>> numbers_;
};

struct LoadResult {
  EventTable table;
  std::size_t loaded = 0;
  std::size_t dropped = 0;
  // Physical line numbers of the first few dropped rows.
  std::vector<std::size_t> dropped_lines;
};

// Parses CSV with a header row. Rows with unparseable timestamps or the
// wrong number of fields are dropped and counted.
LoadResult load_table(std::istream& csv_source, const Schema& schema);

// Writes the header (schema order) and every row. Timestamps use
// format_instant, numbers the shortest round-tripping representation.
void write_csv(const EventTable& table, std::ostream& out);

// Root followed by every Entity and Categorical column in schema order.
std::vector<EntityChoice> entity_candidates(const Schema& schema);

// Throws SchemaError unless `choice` is root or an Entity/Categorical column.
void check_entity_choice(const Schema& schema, const EntityChoice& choice);

// {r : r[e*] = entity, t_st <= r[t] < t_ed}. Under root the entity
// predicate is ignored. Throws WindowError when t_st >= t_ed.
RowSet slice_window(const EventTable& table, const EntityChoice& e_star, std::string_view entity,
                    Instant t_st, Instant t_ed);

// Per-entity row lists for one entity choice, for repeated slicing.
class EntityIndex {
 public:
  EntityIndex(const EventTable& table, const EntityChoice& e_star);

  const EntityChoice& choice() const { return choice_; }
  // Distinct non-missing entity values, sorted; {kRootEntity} under root.
  const std::vector<std::string>& entities() const { return entities_; }
  // Row ids of one entity in time order; empty for unknown entities.
  std::span<const std::size_t> rows_of(std::string_view entity) const;

  RowSet slice(std::string_view entity, Instant t_st, Instant t_ed) const;
  std::size_t count_between(std::string_view entity, Instant from, Instant to) const;
  std::size_t count_before(std::string_view entity, Instant t) const;

 private:
  std::pair<std::size_t, std::size_t> bounds(std::span<const std::size_t> rows, Instant from,
                                             Instant to) const;

  const EventTable* table_;
  EntityChoice choice_;
  std::vector<std::string> entities_;
  std::unordered_map<std::string, std::vector<std::size_t>> rows_;
};

struct ColumnSummary {
  std::string name;
  ColumnRole role;
  std::size_t missing = 0;
  std::size_t cardinality = 0;  // text columns
  std::optional<double> min;    // numerical columns
  std::optional<double> max;
  std::optional<Instant> first;  // time column
  std::optional<Instant> last;
};

std::vector<ColumnSummary> summarize(const EventTable& table);

// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);
std::optional<double> parse_number(std::string_view text);

}  // namespace taskforge
