#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "detail.hpp"
#include "sqem/dataset.hpp"
#include "sqem/error.hpp"

namespace sqem {
namespace {

using Record = std::vector<std::string>;

// RFC 4180 records. Accepts LF or CRLF line endings.
std::vector<Record> parse_records(const std::string& text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool record_open = false;
  std::size_t line = 1;

  const auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  const auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current.clear();
    record_open = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw DataError("malformed CSV at line " + std::to_string(line) + ": stray quote");
        }
        in_quotes = true;
        field_was_quoted = true;
        record_open = true;
        break;
      case ',':
        end_field();
        record_open = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (field_was_quoted) {
          throw DataError("malformed CSV at line " + std::to_string(line) +
                          ": text after closing quote");
        }
        field.push_back(ch);
        record_open = true;
    }
  }
  if (in_quotes) throw DataError("malformed CSV: unterminated quoted field");
  if (record_open || !field.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view token, double& out) {
  token = trim(token);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size() && std::isfinite(out);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Dataset load_csv(std::istream& source, std::vector<VariableSpec> schema) {
  validate_schema(schema, /*allow_open_categories=*/true);
  const std::string text((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  auto records = parse_records(text);
  if (records.empty()) throw DataError("malformed CSV: missing header row");
  // Trailing blank lines show up as a single empty field; with one column that is a missing cell.
  if (records.front().size() > 1) {
    while (records.size() > 1 && records.back().size() == 1 && records.back()[0].empty()) {
      records.pop_back();
    }
  }

  auto& header = records.front();
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
  std::vector<std::size_t> source_col(schema.size());
  for (std::size_t v = 0; v < schema.size(); ++v) {
    const auto it = std::find(header.begin(), header.end(), schema[v].name);
    if (it == header.end()) throw ConfigError("CSV header is missing column '" + schema[v].name + "'");
    source_col[v] = static_cast<std::size_t>(it - header.begin());
  }

  const std::size_t rows = records.size() - 1;
  std::vector<std::vector<double>> columns(schema.size(), std::vector<double>(rows, 0.0));
  std::vector<std::vector<std::uint8_t>> missing(schema.size(), std::vector<std::uint8_t>(rows, 0));
  std::vector<bool> open(schema.size());
  for (std::size_t v = 0; v < schema.size(); ++v) open[v] = schema[v].categories.empty();

  for (std::size_t r = 0; r < rows; ++r) {
    const auto& rec = records[r + 1];
    if (rec.size() != header.size()) {
      throw DataError("malformed CSV at row " + std::to_string(r + 1) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(rec.size()));
    }
    for (std::size_t v = 0; v < schema.size(); ++v) {
      const std::string& cell = rec[source_col[v]];
      if (cell.empty()) {
        missing[v][r] = 1;
        continue;
      }
      auto& spec = schema[v];
      if (spec.is_categorical()) {
        auto idx = spec.category_index(cell);
        if (!idx) {
          if (!open[v]) {
            throw DataError("unknown category '" + cell + "' for '" + spec.name + "' at row " +
                            std::to_string(r + 1));
          }
          spec.categories.push_back(cell);
          idx = spec.categories.size() - 1;
        }
        columns[v][r] = static_cast<double>(*idx);
      } else {
        double value = 0.0;
        if (!parse_number(cell, value)) {
          throw DataError("non-numeric value '" + cell + "' for '" + spec.name + "' at row " +
                          std::to_string(r + 1));
        }
        columns[v][r] = value;
      }
    }
  }

  for (const auto& spec : schema) {
    if (spec.is_categorical() && spec.categories.size() < 2) {
      throw DataError("variable '" + spec.name + "' has fewer than 2 categories in the data");
    }
    if (spec.kind == Kind::binary && spec.categories.size() != 2) {
      throw DataError("binary variable '" + spec.name + "' has " +
                      std::to_string(spec.categories.size()) + " categories in the data");
    }
  }
  Dataset out(std::move(schema), std::move(columns), std::move(missing));
  return out;
}

Dataset load_csv_file(const std::string& path, std::vector<VariableSpec> schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  return load_csv(in, std::move(schema));
}

void write_csv(std::ostream& out, const Dataset& ds) {
  for (std::size_t c = 0; c < ds.column_count(); ++c) {
    if (c) out << ',';
    out << quote_if_needed(ds.spec(c).name);
  }
  out << '\n';
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    for (std::size_t c = 0; c < ds.column_count(); ++c) {
      if (c) out << ',';
      if (ds.is_missing(c, r)) continue;
      if (ds.spec(c).is_categorical()) {
        out << quote_if_needed(ds.label(c, r));
      } else {
        out << detail::format_double(ds.value(c, r));
      }
    }
    out << '\n';
  }
}

}  // namespace sqem
