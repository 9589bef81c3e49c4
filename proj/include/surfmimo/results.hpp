#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "surfmimo/error.hpp"

#ifndef SURFMIMO_VERSION
#define SURFMIMO_VERSION "0.0.0"
#endif

namespace surfmimo {

inline constexpr const char* kToolVersion = SURFMIMO_VERSION;

enum class ColumnType { integer, real, text };

struct Column {
  std::string name;
  ColumnType type = ColumnType::real;

  bool operator==(const Column&) const = default;
};

using Cell = std::variant<std::int64_t, double, std::string>;

/// Provenance of a result file. Extra entries are written in insertion order.
struct ResultMetadata {
  std::string tool_version = kToolVersion;
  std::string kind;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;

  bool operator==(const ResultMetadata&) const = default;
};

/// Typed table of results with a fixed column order.
class ResultSet {
 public:
  ResultSet() = default;
  ResultSet(ResultMetadata meta, std::vector<Column> columns) : meta_(std::move(meta)), columns_(std::move(columns)) {}

  const ResultMetadata& metadata() const { return meta_; }
  ResultMetadata& metadata() { return meta_; }
  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) {
      throw ModelError("result row has " + std::to_string(row.size()) + " cells, expected " +
                       std::to_string(columns_.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i].index() != static_cast<std::size_t>(columns_[i].type)) {
        throw ModelError("result column '" + columns_[i].name + "' has the wrong cell type");
      }
    }
    rows_.push_back(std::move(row));
  }

  bool operator==(const ResultSet&) const = default;

 private:
  ResultMetadata meta_;
  std::vector<Column> columns_;
  std::vector<std::vector<Cell>> rows_;
};

namespace detail {

inline const char* type_tag(ColumnType t) {
  switch (t) {
    case ColumnType::integer: return "int";
    case ColumnType::real: return "real";
    case ColumnType::text: return "text";
  }
  return "?";
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
  return quote_csv(std::get<std::string>(c));
}

// Splits one CSV record starting at `pos`; quoted fields may span lines.
inline bool next_record(const std::string& text, std::size_t& pos, std::vector<std::string>& fields) {
  fields.clear();
  if (pos >= text.size()) return false;
  std::string cur;
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          cur += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw IoError("unterminated quoted field");
  fields.push_back(std::move(cur));
  return true;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

}  // namespace detail

/// Serialized form: a `#`-comment block with the metadata and column types,
/// then a CSV header and one line per row. Doubles use round-trip precision.
inline std::string to_csv(const ResultSet& rs) {
  std::ostringstream os;
  const auto& m = rs.metadata();
  os << "# tool: surfmimo " << m.tool_version << '\n';
  os << "# kind: " << m.kind << '\n';
  os << "# config_hash: " << m.config_hash << '\n';
  os << "# seed: " << m.seed << '\n';
  for (const auto& [k, v] : m.extra) os << "# " << k << ": " << v << '\n';
  os << "# types: ";
  for (std::size_t i = 0; i < rs.columns().size(); ++i) {
    os << (i ? "," : "") << detail::type_tag(rs.columns()[i].type);
  }
  os << '\n';
  for (std::size_t i = 0; i < rs.columns().size(); ++i) os << (i ? "," : "") << detail::quote_csv(rs.columns()[i].name);
  os << '\n';
  for (const auto& row : rs.rows()) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::format_cell(row[i]);
    os << '\n';
  }
  return os.str();
}

inline ResultSet parse_results(const std::string& text, const std::string& origin = "<results>") {
  ResultMetadata meta;
  meta.tool_version.clear();
  std::vector<ColumnType> types;
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) { return IoError(origin + ": " + msg); };

  while (pos < text.size() && text[pos] == '#') {
    auto eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos + 1, eol - pos - 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = eol + 1;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = detail::trim(line.substr(0, colon));
    const std::string value = detail::trim(line.substr(colon + 1));
    if (key == "tool") {
      meta.tool_version = value.rfind("surfmimo ", 0) == 0 ? value.substr(9) : value;
    } else if (key == "kind") {
      meta.kind = value;
    } else if (key == "config_hash") {
      meta.config_hash = value;
    } else if (key == "seed") {
      meta.seed = std::strtoull(value.c_str(), nullptr, 10);
    } else if (key == "types") {
      std::stringstream ss(value);
      std::string t;
      while (std::getline(ss, t, ',')) {
        if (t == "int") types.push_back(ColumnType::integer);
        else if (t == "real") types.push_back(ColumnType::real);
        else if (t == "text") types.push_back(ColumnType::text);
        else throw fail("unknown column type '" + t + "'");
      }
    } else {
      meta.extra.emplace_back(key, value);
    }
  }

  std::vector<std::string> fields;
  if (!detail::next_record(text, pos, fields)) throw fail("missing header line");
  if (types.empty()) types.assign(fields.size(), ColumnType::text);
  if (types.size() != fields.size()) throw fail("header and type list differ in length");
  std::vector<Column> cols;
  for (std::size_t i = 0; i < fields.size(); ++i) cols.push_back({fields[i], types[i]});
  ResultSet rs(meta, cols);

  std::size_t line_no = 0;
  while (detail::next_record(text, pos, fields)) {
    ++line_no;
    if (fields.size() == 1 && fields[0].empty() && pos >= text.size()) break;
    if (fields.size() != cols.size()) throw fail("row " + std::to_string(line_no) + " has the wrong number of fields");
    std::vector<Cell> row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto& f = fields[i];
      char* end = nullptr;
      errno = 0;
      switch (cols[i].type) {
        case ColumnType::integer: {
          const long long v = std::strtoll(f.c_str(), &end, 10);
          if (f.empty() || *end != '\0' || errno == ERANGE) throw fail("bad integer '" + f + "'");
          row.emplace_back(static_cast<std::int64_t>(v));
          break;
        }
        case ColumnType::real: {
          const double v = std::strtod(f.c_str(), &end);
          if (f.empty() || *end != '\0') throw fail("bad number '" + f + "'");
          row.emplace_back(v);
          break;
        }
        case ColumnType::text: row.emplace_back(f); break;
      }
    }
    rs.add_row(std::move(row));
  }
  return rs;
}

inline void write_results(const ResultSet& rs, const std::filesystem::path& path) {
  const std::string text = to_csv(rs);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

inline ResultSet read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_results(os.str(), path.string());
}

}  // namespace surfmimo
