#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace sqem {

enum class Role { response, predictor, identifier, excluded };
enum class Kind { numeric, categorical, binary };
enum class Transform { none, ln, ln1p };

std::string_view to_string(Role role);
std::string_view to_string(Kind kind);
std::string_view to_string(Transform transform);
Role parse_role(std::string_view text);
Kind parse_kind(std::string_view text);
Transform parse_transform(std::string_view text);

struct VariableSpec {
  std::string name;
  Role role = Role::predictor;
  Kind kind = Kind::numeric;
  Transform transform = Transform::none;
  /// Ordered labels; categorical and binary kinds only. Empty means "learn from data".
  std::vector<std::string> categories;

  bool is_categorical() const { return kind != Kind::numeric; }
  std::optional<std::size_t> category_index(std::string_view label) const;

  friend bool operator==(const VariableSpec&, const VariableSpec&) = default;
};

/// Checks names are unique, exactly one response exists and category counts
/// fit the kind. `allow_open_categories` accepts empty lists (load-time schemas).
void validate_schema(std::span<const VariableSpec> schema, bool allow_open_categories = false);

using CellValue = std::variant<double, std::string>;
/// A single record keyed by variable name. Categorical cells hold labels.
/// Missing cells are absent.
using Row = std::map<std::string, CellValue, std::less<>>;

/// A numeric column with its missing mask.
struct NumericColumn {
  std::vector<double> values;
  std::vector<std::uint8_t> missing;

  std::size_t size() const { return values.size(); }
  /// Non-missing values in row order.
  std::vector<double> present() const;
};

/// Immutable typed table of project records.
///
/// Numeric cells hold their value; categorical cells hold the category index
/// as a double. Missing cells keep a value of 0 and a set mask bit.
class Dataset {
 public:
  Dataset(std::vector<VariableSpec> schema, std::vector<std::vector<double>> columns,
          std::vector<std::vector<std::uint8_t>> missing, bool transformed = false);

  /// An empty table over `schema`.
  explicit Dataset(std::vector<VariableSpec> schema);

  const std::vector<VariableSpec>& schema() const { return schema_; }
  std::size_t row_count() const { return row_count_; }
  std::size_t column_count() const { return schema_.size(); }
  /// True once declared transforms have been applied to the values.
  bool transformed() const { return transformed_; }

  bool has_column(std::string_view name) const;
  /// Throws ConfigError naming the variable when absent.
  std::size_t column_index(std::string_view name) const;
  const VariableSpec& spec(std::string_view name) const { return schema_[column_index(name)]; }
  const VariableSpec& spec(std::size_t col) const { return schema_[col]; }
  const VariableSpec& response() const;

  std::span<const double> values(std::size_t col) const { return columns_[col]; }
  std::span<const std::uint8_t> missing_mask(std::size_t col) const { return missing_[col]; }
  bool is_missing(std::size_t col, std::size_t row) const { return missing_[col][row] != 0; }
  double value(std::size_t col, std::size_t row) const { return columns_[col][row]; }
  std::size_t category(std::size_t col, std::size_t row) const;
  const std::string& label(std::size_t col, std::size_t row) const;

  NumericColumn numeric_column(std::string_view name) const;
  Row row(std::size_t index) const;

  Dataset select_rows(std::span<const std::size_t> rows) const;
  /// Copy with column `col` replaced.
  Dataset with_column(std::size_t col, VariableSpec spec, std::vector<double> values,
                      std::vector<std::uint8_t> missing) const;
  Dataset with_transformed(bool transformed) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  void check_invariants() const;

  std::vector<VariableSpec> schema_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<std::uint8_t>> missing_;
  std::size_t row_count_ = 0;
  bool transformed_ = false;
};

/// Parses RFC 4180 CSV with a header row. Extra header columns are ignored.
///
/// An empty cell is missing. For categorical variables with an empty category
/// list, labels are appended in first-seen order; with a declared list, an
/// unknown label is a DataError.
Dataset load_csv(std::istream& source, std::vector<VariableSpec> schema);
Dataset load_csv_file(const std::string& path, std::vector<VariableSpec> schema);

/// Writes the schema's columns; numbers use round-trip precision.
void write_csv(std::ostream& out, const Dataset& ds);

struct InSet {
  std::vector<std::string> labels;
};
struct NonMissing {};
struct Range {
  double lo;
  double hi;
};

struct FilterRule {
  std::string variable;
  std::variant<InSet, NonMissing, Range> predicate;
};

/// Rows satisfying every rule, in original order.
Dataset apply_filters(const Dataset& ds, std::span<const FilterRule> rules);

/// Rows with no missing cell among `vars`.
Dataset listwise_complete(const Dataset& ds, std::span<const std::string> vars);

struct VariableSummary {
  std::string name;
  Kind kind = Kind::numeric;
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> sd;
  std::vector<std::pair<std::string, std::size_t>> frequencies;
};

struct SummaryReport {
  std::size_t row_count = 0;
  std::vector<VariableSummary> variables;
};

SummaryReport summarize(const Dataset& ds);

nlohmann::json to_json(const SummaryReport& report);
nlohmann::json to_json(const VariableSpec& spec);
VariableSpec variable_spec_from_json(const nlohmann::json& j);

}  // namespace sqem
