#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "fairlens/data.hpp"
#include "fairlens/error.hpp"
#include "json.hpp"

namespace fairlens {
namespace {

using Record = std::vector<std::string>;

// RFC-4180 reader: comma separator, double-quote quoting with "" escapes,
// LF or CRLF line endings.
std::vector<Record> parse_records(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A record holding one empty field is a blank line.
    if (!(current.size() == 1 && current[0].empty())) records.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty()) {
          throw DataError("stray quote on line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field");
  if (field_started || !field.empty() || !current.empty()) end_record();
  return records;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_field(std::string& out, std::string_view s) {
  if (!needs_quotes(s)) {
    out += s;
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

Dataset parse_csv(std::string_view text, std::string_view target_column,
                  const LoadOptions& options) {
  auto records = parse_records(text);
  if (records.empty()) throw DataError("CSV has no header row");
  const Record header = std::move(records.front());
  records.erase(records.begin());

  std::optional<std::size_t> target_pos;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == target_column) target_pos = c;
  }
  if (!target_pos) throw DataError("target column '" + std::string(target_column) + "' not found");

  std::size_t empty_rows = 0;
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      throw DataError("ragged row " + std::to_string(r + 1) + ": " +
                      std::to_string(records[r].size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    if (std::any_of(records[r].begin(), records[r].end(), [](const auto& f) { return f.empty(); })) {
      ++empty_rows;
    }
  }
  if (empty_rows > 0) {
    throw DataError(std::to_string(empty_rows) + " rows contain empty cells (missing values are not supported)");
  }

  std::vector<std::size_t> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != *target_pos) columns.push_back(c);
  }
  if (columns.empty()) throw DataError("CSV has no feature columns");
  for (const auto& [name, kind] : options.hints) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw ConfigError("schema hint names unknown column '" + name + "'");
    }
  }

  const std::size_t n = records.size();
  Schema schema;
  if (options.reference != nullptr) {
    if (options.reference->size() != columns.size()) {
      throw DataError("CSV columns do not match the reference schema");
    }
    for (std::size_t f = 0; f < columns.size(); ++f) {
      if ((*options.reference)[f].name != header[columns[f]]) {
        throw DataError("column '" + header[columns[f]] + "' does not match reference feature '" +
                        (*options.reference)[f].name + "'");
      }
    }
    schema = *options.reference;
  } else {
    for (auto c : columns) {
      FeatureSchema fs{header[c], FeatureKind::kContinuous, {}};
      if (auto it = options.hints.find(header[c]); it != options.hints.end()) {
        fs.kind = it->second;
      } else {
        const bool numeric = std::all_of(records.begin(), records.end(),
                                         [c](const Record& r) { return parse_number(r[c]).has_value(); });
        fs.kind = numeric && n > 0 ? FeatureKind::kContinuous : FeatureKind::kCategorical;
      }
      schema.push_back(std::move(fs));
    }
  }

  std::vector<double> cells(n * columns.size());
  for (std::size_t f = 0; f < columns.size(); ++f) {
    const std::size_t c = columns[f];
    FeatureSchema& fs = schema[f];
    if (!fs.is_categorical()) {
      for (std::size_t r = 0; r < n; ++r) {
        auto v = parse_number(records[r][c]);
        if (!v) {
          throw DataError("row " + std::to_string(r + 1) + ", column '" + fs.name +
                          "': cannot parse '" + records[r][c] + "' as a number");
        }
        cells[r * columns.size() + f] = *v;
      }
      continue;
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < fs.categories.size(); ++k) index.emplace(fs.categories[k], k);
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& value = records[r][c];
      auto it = index.find(value);
      if (it == index.end()) {
        if (options.reference != nullptr) {
          throw DataError("row " + std::to_string(r + 1) + ", column '" + fs.name +
                          "': unseen category '" + value + "'");
        }
        it = index.emplace(value, fs.categories.size()).first;
        fs.categories.push_back(value);
      }
      cells[r * columns.size() + f] = static_cast<double>(it->second);
    }
  }

  std::vector<std::string> distinct;
  for (const auto& r : records) {
    const std::string& v = r[*target_pos];
    if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
  }
  if (distinct.size() != 2) {
    throw DataError("target column '" + std::string(target_column) + "' has " +
                    std::to_string(distinct.size()) + " distinct values; exactly 2 required");
  }
  TargetEncoding encoding;
  encoding.column = std::string(target_column);
  if (options.positive_label) {
    if (std::find(distinct.begin(), distinct.end(), *options.positive_label) == distinct.end()) {
      throw ConfigError("positive label '" + *options.positive_label + "' not present in target");
    }
    encoding.positive_label = *options.positive_label;
    encoding.negative_label = distinct[0] == encoding.positive_label ? distinct[1] : distinct[0];
  } else {
    std::sort(distinct.begin(), distinct.end());
    encoding.negative_label = distinct[0];
    encoding.positive_label = distinct[1];
  }
  std::vector<std::uint8_t> target(n);
  for (std::size_t r = 0; r < n; ++r) {
    target[r] = records[r][*target_pos] == encoding.positive_label ? 1 : 0;
  }
  return Dataset(std::move(schema), std::move(cells), std::move(target), options.sensitive,
                 std::move(encoding));
}

Dataset load_csv(const std::filesystem::path& path, std::string_view target_column,
                 const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), target_column, options);
}

std::string to_csv(const Dataset& d) {
  std::string out;
  for (const auto& f : d.schema()) {
    append_field(out, f.name);
    out.push_back(',');
  }
  append_field(out, d.target_encoding().column);
  out.push_back('\n');
  char buf[64];
  for (std::size_t i = 0; i < d.num_rows(); ++i) {
    for (std::size_t j = 0; j < d.num_features(); ++j) {
      const double v = d.cell(i, j);
      if (d.feature(j).is_categorical()) {
        append_field(out, d.feature(j).categories[static_cast<std::size_t>(v)]);
      } else {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        out.append(buf, ptr);
      }
      out.push_back(',');
    }
    const auto& enc = d.target_encoding();
    append_field(out, d.label(i) == 1 ? enc.positive_label : enc.negative_label);
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  const std::string text = to_csv(d);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::map<std::string, FeatureKind> load_schema_hints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema hints '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schema hints '" + path.string() + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("schema hints must be a JSON object");
  std::map<std::string, FeatureKind> hints;
  for (const auto& [name, kind] : j.items()) {
    if (!kind.is_string()) throw ConfigError("schema hint for '" + name + "' must be a string");
    hints.emplace(name, parse_feature_kind(kind.get<std::string>()));
  }
  return hints;
}

std::map<std::string, FeatureKind> schema_hints(const Schema& schema) {
  std::map<std::string, FeatureKind> hints;
  for (const auto& f : schema) hints.emplace(f.name, f.kind);
  return hints;
}

}  // namespace fairlens
