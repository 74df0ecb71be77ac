#include "sqem/dataset.hpp"

#include <algorithm>
#include <set>

#include "detail.hpp"
#include "sqem/error.hpp"

namespace sqem {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::response: return "response";
    case Role::predictor: return "predictor";
    case Role::identifier: return "identifier";
    case Role::excluded: return "excluded";
  }
  return "?";
}

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::numeric: return "numeric";
    case Kind::categorical: return "categorical";
    case Kind::binary: return "binary";
  }
  return "?";
}

std::string_view to_string(Transform transform) {
  switch (transform) {
    case Transform::none: return "none";
    case Transform::ln: return "ln";
    case Transform::ln1p: return "ln1p";
  }
  return "?";
}

Role parse_role(std::string_view text) {
  if (text == "response") return Role::response;
  if (text == "predictor") return Role::predictor;
  if (text == "identifier") return Role::identifier;
  if (text == "excluded") return Role::excluded;
  throw ConfigError("unknown role '" + std::string(text) + "'");
}

Kind parse_kind(std::string_view text) {
  if (text == "numeric") return Kind::numeric;
  if (text == "categorical") return Kind::categorical;
  if (text == "binary") return Kind::binary;
  throw ConfigError("unknown kind '" + std::string(text) + "'");
}

Transform parse_transform(std::string_view text) {
  if (text == "none") return Transform::none;
  if (text == "ln") return Transform::ln;
  if (text == "ln1p") return Transform::ln1p;
  throw ConfigError("unknown transform '" + std::string(text) + "'");
}

std::optional<std::size_t> VariableSpec::category_index(std::string_view label) const {
  const auto it = std::find(categories.begin(), categories.end(), label);
  if (it == categories.end()) return std::nullopt;
  return static_cast<std::size_t>(it - categories.begin());
}

void validate_schema(std::span<const VariableSpec> schema, bool allow_open_categories) {
  std::set<std::string, std::less<>> names;
  std::size_t responses = 0;
  for (const auto& v : schema) {
    if (v.name.empty()) throw ConfigError("schema: variable with empty name");
    if (!names.insert(v.name).second) throw ConfigError("schema: duplicate variable '" + v.name + "'");
    if (v.role == Role::response) ++responses;
    std::set<std::string_view> labels(v.categories.begin(), v.categories.end());
    if (labels.size() != v.categories.size()) {
      throw ConfigError("schema: duplicate category label in '" + v.name + "'");
    }
    const bool open = allow_open_categories && v.categories.empty();
    if (v.kind == Kind::numeric && !v.categories.empty()) {
      throw ConfigError("schema: numeric variable '" + v.name + "' declares categories");
    }
    if (v.kind == Kind::binary && !open && v.categories.size() != 2) {
      throw ConfigError("schema: binary variable '" + v.name + "' needs exactly 2 categories");
    }
    if (v.kind == Kind::categorical && !open && v.categories.size() < 2) {
      throw ConfigError("schema: categorical variable '" + v.name + "' needs at least 2 categories");
    }
    if (v.is_categorical() && v.transform != Transform::none) {
      throw ConfigError("schema: categorical variable '" + v.name + "' cannot be transformed");
    }
  }
  if (responses != 1) {
    throw ConfigError("schema: exactly one response variable required, found " +
                      std::to_string(responses));
  }
}

std::vector<double> NumericColumn::present() const {
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!missing[i]) out.push_back(values[i]);
  }
  return out;
}

Dataset::Dataset(std::vector<VariableSpec> schema, std::vector<std::vector<double>> columns,
                 std::vector<std::vector<std::uint8_t>> missing, bool transformed)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      missing_(std::move(missing)),
      transformed_(transformed) {
  row_count_ = columns_.empty() ? 0 : columns_.front().size();
  check_invariants();
}

Dataset::Dataset(std::vector<VariableSpec> schema)
    : schema_(std::move(schema)), columns_(schema_.size()), missing_(schema_.size()) {
  check_invariants();
}

void Dataset::check_invariants() const {
  validate_schema(schema_);
  if (columns_.size() != schema_.size() || missing_.size() != schema_.size()) {
    throw ConfigError("dataset: column count does not match schema");
  }
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].size() != row_count_ || missing_[c].size() != row_count_) {
      throw ConfigError("dataset: column '" + schema_[c].name + "' has wrong length");
    }
    if (!schema_[c].is_categorical()) continue;
    const auto count = static_cast<double>(schema_[c].categories.size());
    for (std::size_t r = 0; r < row_count_; ++r) {
      if (missing_[c][r]) continue;
      const double v = columns_[c][r];
      if (v < 0.0 || v >= count || v != std::floor(v)) {
        throw ConfigError("dataset: invalid category index in '" + schema_[c].name + "'");
      }
    }
  }
}

bool Dataset::has_column(std::string_view name) const {
  return std::any_of(schema_.begin(), schema_.end(), [&](const auto& v) { return v.name == name; });
}

std::size_t Dataset::column_index(std::string_view name) const {
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (schema_[c].name == name) return c;
  }
  throw ConfigError("unknown variable '" + std::string(name) + "'");
}

const VariableSpec& Dataset::response() const {
  for (const auto& v : schema_) {
    if (v.role == Role::response) return v;
  }
  throw ConfigError("dataset has no response variable");
}

std::size_t Dataset::category(std::size_t col, std::size_t row) const {
  return static_cast<std::size_t>(columns_[col][row]);
}

const std::string& Dataset::label(std::size_t col, std::size_t row) const {
  return schema_[col].categories[category(col, row)];
}

NumericColumn Dataset::numeric_column(std::string_view name) const {
  const auto c = column_index(name);
  if (schema_[c].is_categorical()) {
    throw ConfigError("variable '" + std::string(name) + "' is not numeric");
  }
  return NumericColumn{columns_[c], missing_[c]};
}

Row Dataset::row(std::size_t index) const {
  Row out;
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (missing_[c][index]) continue;
    if (schema_[c].is_categorical()) {
      out.emplace(schema_[c].name, label(c, index));
    } else {
      out.emplace(schema_[c].name, columns_[c][index]);
    }
  }
  return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> cols(schema_.size());
  std::vector<std::vector<std::uint8_t>> miss(schema_.size());
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    cols[c].reserve(rows.size());
    miss[c].reserve(rows.size());
    for (auto r : rows) {
      if (r >= row_count_) throw ConfigError("select_rows: row index out of range");
      cols[c].push_back(columns_[c][r]);
      miss[c].push_back(missing_[c][r]);
    }
  }
  Dataset out(schema_, std::move(cols), std::move(miss), transformed_);
  out.row_count_ = rows.size();
  return out;
}

Dataset Dataset::with_column(std::size_t col, VariableSpec spec, std::vector<double> values,
                             std::vector<std::uint8_t> missing) const {
  auto schema = schema_;
  auto cols = columns_;
  auto miss = missing_;
  schema.at(col) = std::move(spec);
  cols.at(col) = std::move(values);
  miss.at(col) = std::move(missing);
  Dataset out(std::move(schema), std::move(cols), std::move(miss), transformed_);
  out.row_count_ = row_count_;
  out.check_invariants();
  return out;
}

Dataset Dataset::with_transformed(bool transformed) const {
  Dataset out = *this;
  out.transformed_ = transformed;
  return out;
}

namespace {

bool rule_holds(const Dataset& ds, std::size_t col, const FilterRule& rule, std::size_t row) {
  if (ds.is_missing(col, row)) return false;
  return std::visit(
      [&](const auto& p) -> bool {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NonMissing>) {
          return true;
        } else if constexpr (std::is_same_v<P, InSet>) {
          const auto& lbl = ds.label(col, row);
          return std::find(p.labels.begin(), p.labels.end(), lbl) != p.labels.end();
        } else {
          const double v = ds.value(col, row);
          return v >= p.lo && v <= p.hi;
        }
      },
      rule.predicate);
}

}  // namespace

Dataset apply_filters(const Dataset& ds, std::span<const FilterRule> rules) {
  std::vector<std::size_t> cols;
  for (const auto& rule : rules) {
    const auto c = ds.column_index(rule.variable);
    const auto& spec = ds.spec(c);
    if (std::holds_alternative<InSet>(rule.predicate) && !spec.is_categorical()) {
      throw ConfigError("filter in_set on numeric variable '" + rule.variable + "'");
    }
    if (std::holds_alternative<Range>(rule.predicate) && spec.is_categorical()) {
      throw ConfigError("filter range on categorical variable '" + rule.variable + "'");
    }
    cols.push_back(c);
  }
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    bool ok = true;
    for (std::size_t i = 0; i < rules.size() && ok; ++i) ok = rule_holds(ds, cols[i], rules[i], r);
    if (ok) keep.push_back(r);
  }
  return ds.select_rows(keep);
}

Dataset listwise_complete(const Dataset& ds, std::span<const std::string> vars) {
  std::vector<std::size_t> cols;
  for (const auto& v : vars) cols.push_back(ds.column_index(v));
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    if (std::none_of(cols.begin(), cols.end(), [&](auto c) { return ds.is_missing(c, r); })) {
      keep.push_back(r);
    }
  }
  return ds.select_rows(keep);
}

SummaryReport summarize(const Dataset& ds) {
  SummaryReport report;
  report.row_count = ds.row_count();
  for (std::size_t c = 0; c < ds.column_count(); ++c) {
    const auto& spec = ds.spec(c);
    VariableSummary s;
    s.name = spec.name;
    s.kind = spec.kind;
    if (spec.is_categorical()) {
      std::vector<std::size_t> counts(spec.categories.size(), 0);
      for (std::size_t r = 0; r < ds.row_count(); ++r) {
        if (ds.is_missing(c, r)) continue;
        ++counts[ds.category(c, r)];
        ++s.n;
      }
      for (std::size_t k = 0; k < counts.size(); ++k) {
        s.frequencies.emplace_back(spec.categories[k], counts[k]);
      }
    } else {
      const auto present = ds.numeric_column(spec.name).present();
      s.n = present.size();
      if (!present.empty()) s.mean = detail::mean(present);
      if (present.size() >= 2) s.sd = detail::sample_sd(present);
    }
    report.variables.push_back(std::move(s));
  }
  return report;
}

nlohmann::json to_json(const SummaryReport& report) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : report.variables) {
    nlohmann::json j{{"name", v.name}, {"kind", to_string(v.kind)}, {"n", v.n}};
    if (v.kind == Kind::numeric) {
      j["mean"] = v.mean ? nlohmann::json(*v.mean) : nlohmann::json(nullptr);
      j["sd"] = v.sd ? nlohmann::json(*v.sd) : nlohmann::json(nullptr);
    } else {
      nlohmann::json freq = nlohmann::json::array();
      for (const auto& [label, count] : v.frequencies) freq.push_back({{"label", label}, {"count", count}});
      j["frequencies"] = std::move(freq);
    }
    vars.push_back(std::move(j));
  }
  return {{"row_count", report.row_count}, {"variables", std::move(vars)}};
}

nlohmann::json to_json(const VariableSpec& spec) {
  nlohmann::json j{{"name", spec.name},
                   {"role", to_string(spec.role)},
                   {"kind", to_string(spec.kind)},
                   {"transform", to_string(spec.transform)}};
  if (spec.is_categorical()) j["categories"] = spec.categories;
  return j;
}

VariableSpec variable_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("schema entry must be an object");
  VariableSpec v;
  if (!j.contains("name") || !j["name"].is_string()) throw ConfigError("schema entry needs a string 'name'");
  v.name = j["name"].get<std::string>();
  for (const auto& [key, _] : j.items()) {
    if (key != "name" && key != "role" && key != "kind" && key != "transform" && key != "categories") {
      throw ConfigError("schema entry '" + v.name + "': unknown key '" + key + "'");
    }
  }
  if (j.contains("role")) v.role = parse_role(j["role"].get<std::string>());
  if (j.contains("kind")) v.kind = parse_kind(j["kind"].get<std::string>());
  if (j.contains("transform")) v.transform = parse_transform(j["transform"].get<std::string>());
  if (j.contains("categories")) {
    if (!j["categories"].is_array()) throw ConfigError("schema entry '" + v.name + "': categories must be an array");
    v.categories = j["categories"].get<std::vector<std::string>>();
  }
  return v;
}

}  // namespace sqem
