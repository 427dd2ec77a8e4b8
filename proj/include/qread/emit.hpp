#ifndef QREAD_EMIT_HPP
#define QREAD_EMIT_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qread/errors.hpp"

namespace qread {

using Field = std::variant<double, std::int64_t, bool, std::string>;

/// 12 significant digits; the C library rounds correctly, so output is platform-stable.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Named scalars in insertion order.
struct Record {
  std::vector<std::pair<std::string, Field>> fields;

  Record& add(std::string name, Field value) {
    fields.emplace_back(std::move(name), std::move(value));
    return *this;
  }
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Field>> rows;
};

namespace detail {

inline std::string csv_field(const Field& f) {
  if (const auto* d = std::get_if<double>(&f)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&f)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&f)) return *b ? "1" : "0";
  const auto& s = std::get<std::string>(f);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string json_field(const Field& f) {
  if (const auto* d = std::get_if<double>(&f)) return std::isfinite(*d) ? format_number(*d) : "null";
  if (const auto* i = std::get_if<std::int64_t>(&f)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&f)) return *b ? "true" : "false";
  return nlohmann::json(std::get<std::string>(f)).dump();
}

inline std::string json_key(const std::string& k) { return nlohmann::json(k).dump(); }

}  // namespace detail

inline std::string to_json(const Record& r) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < r.fields.size(); ++i) {
    os << (i ? ",\n  " : "\n  ") << detail::json_key(r.fields[i].first) << ": " << detail::json_field(r.fields[i].second);
  }
  os << (r.fields.empty() ? "}\n" : "\n}\n");
  return os.str();
}

inline std::string to_json(const Table& t) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    os << (i ? ",\n  {" : "\n  {");
    for (std::size_t j = 0; j < t.columns.size(); ++j)
      os << (j ? ", " : "") << detail::json_key(t.columns[j]) << ": " << detail::json_field(t.rows[i][j]);
    os << "}";
  }
  os << (t.rows.empty() ? "]\n" : "\n]\n");
  return os.str();
}

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << t.columns[j];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << detail::csv_field(row[j]);
    os << "\n";
  }
  return os.str();
}

inline std::string to_csv(const Record& r) {
  Table t;
  t.rows.emplace_back();
  for (const auto& [k, v] : r.fields) {
    t.columns.push_back(k);
    t.rows.back().push_back(v);
  }
  return to_csv(t);
}

enum class Format { Json, Csv };

inline Format parse_format(const std::string& s) {
  if (s == "json") return Format::Json;
  if (s == "csv") return Format::Csv;
  throw Error(ErrorKind::InvalidInput, "format must be json or csv");
}

template <class Data>
std::string render(const Data& d, Format f) {
  return f == Format::Json ? to_json(d) : to_csv(d);
}

/// Writes to `path` when given, else to `fallback`.
inline void emit_text(const std::string& text, const std::optional<std::string>& path, std::ostream& fallback) {
  if (!path) {
    fallback << text;
    return;
  }
  std::ofstream f(*path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(f), ErrorKind::InvalidInput, "cannot open output file " + *path);
  f << text;
  f.flush();
  require(static_cast<bool>(f), ErrorKind::InvalidInput, "cannot write output file " + *path);
}

}  // namespace qread

#endif  // QREAD_EMIT_HPP
