#include "mixsel/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mixsel/error.hpp"

namespace mixsel {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_missing(const std::string& token) { return token.empty() || token == "NA"; }

std::optional<double> parse_number(const std::string& token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

Kind parse_kind(const std::string& s, const std::string& where) {
  if (s == "cont") return Kind::Continuous;
  if (s == "int") return Kind::Integer;
  if (s == "cat") return Kind::Categorical;
  throw Error(ErrorCode::Parse, where + ": unknown kind '" + s + "' (expected cont, int or cat)");
}

const char* kind_token(Kind kind) {
  switch (kind) {
    case Kind::Continuous: return "cont";
    case Kind::Integer: return "int";
    case Kind::Categorical: return "cat";
  }
  return "?";
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

const SchemaEntry* Schema::find(const std::string& name) const {
  for (const SchemaEntry& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

Schema read_schema(std::istream& in) {
  Schema schema;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = "schema line " + std::to_string(lineno);
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::Parse, where + ": expected name:kind");
    SchemaEntry e;
    e.name = trim(line.substr(0, colon));
    std::string rest = line.substr(colon + 1);
    const auto second = rest.find(':');
    e.kind = parse_kind(trim(rest.substr(0, second)), where);
    if (second != std::string::npos) {
      if (e.kind != Kind::Categorical) throw Error(ErrorCode::Parse, where + ": only cat columns take levels");
      std::stringstream levels(rest.substr(second + 1));
      std::string level;
      while (std::getline(levels, level, '|')) e.levels.push_back(trim(level));
      if (std::set<std::string>(e.levels.begin(), e.levels.end()).size() != e.levels.size())
        throw Error(ErrorCode::Parse, where + ": duplicate level");
    }
    schema.entries.push_back(std::move(e));
  }
  return schema;
}

Schema read_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open schema '" + path + "'");
  return read_schema(in);
}

void write_schema(std::ostream& out, const Schema& schema) {
  for (const SchemaEntry& e : schema.entries) {
    out << e.name << ':' << kind_token(e.kind);
    if (!e.levels.empty()) {
      out << ':';
      for (std::size_t h = 0; h < e.levels.size(); ++h) out << (h ? "|" : "") << e.levels[h];
    }
    out << '\n';
  }
}

Schema schema_of(const Dataset& data) {
  Schema schema;
  for (const Column& col : data.columns()) {
    SchemaEntry e{col.name, col.kind.tag, {}};
    if (col.kind.tag == Kind::Categorical) {
      e.levels = col.level_names;
      if (e.levels.empty())
        for (int h = 1; h <= col.kind.levels; ++h) e.levels.push_back(std::to_string(h));
    }
    schema.entries.push_back(std::move(e));
  }
  return schema;
}

CsvTable read_csv(std::istream& in, const std::optional<Schema>& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "empty input, expected a header row");
  const std::vector<std::string> names = split_csv_line(line);
  const std::size_t d = names.size();
  std::vector<std::vector<std::string>> cells(d);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != d)
      throw Error(ErrorCode::Parse, "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                        " fields, header has " + std::to_string(d));
    for (std::size_t j = 0; j < d; ++j) cells[j].push_back(std::move(fields[j]));
  }
  if (row == 0) throw Error(ErrorCode::Parse, "no data rows");

  CsvTable table;
  std::vector<Column> cols(d);
  for (std::size_t j = 0; j < d; ++j) {
    Column& col = cols[j];
    col.name = names[j];
    const std::vector<std::string>& tokens = cells[j];
    ColumnOrigin origin{col.name, "", true, {}};

    const SchemaEntry* entry = schema ? schema->find(col.name) : nullptr;
    if (schema && !entry) throw Error(ErrorCode::Parse, "column '" + col.name + "' missing from schema");
    Kind kind = Kind::Categorical;
    if (entry) {
      kind = entry->kind;
      origin.inferred = false;
    } else {
      bool numeric = true;
      bool whole = true;
      bool any = false;
      for (const std::string& t : tokens) {
        if (is_missing(t)) continue;
        any = true;
        const auto v = parse_number(t);
        if (!v) {
          numeric = false;
          break;
        }
        if (t.find_first_of(".eE") != std::string::npos || *v != std::floor(*v) || *v < 0) whole = false;
      }
      if (any && numeric) kind = whole ? Kind::Integer : Kind::Continuous;
    }

    bool masked = false;
    col.values.assign(tokens.size(), std::numeric_limits<double>::quiet_NaN());
    col.observed.assign(tokens.size(), 1);
    std::map<std::string, int> codes;
    if (kind == Kind::Categorical) {
      if (entry && !entry->levels.empty()) {
        origin.levels = entry->levels;
      } else {
        std::set<std::string> distinct;
        for (const std::string& t : tokens)
          if (!is_missing(t)) distinct.insert(t);
        origin.levels.assign(distinct.begin(), distinct.end());
      }
      for (std::size_t h = 0; h < origin.levels.size(); ++h) codes[origin.levels[h]] = static_cast<int>(h) + 1;
      col.kind = VariableKind::categorical(static_cast<int>(origin.levels.size()));
      col.level_names = origin.levels;
    } else {
      col.kind = kind == Kind::Integer ? VariableKind::integer() : VariableKind::continuous();
    }
    origin.kind = kind_token(kind);

    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::string& t = tokens[i];
      if (is_missing(t)) {
        col.observed[i] = 0;
        masked = true;
        continue;
      }
      const std::string where = "cell (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")";
      if (kind == Kind::Categorical) {
        const auto it = codes.find(t);
        if (it == codes.end()) throw Error(ErrorCode::OutOfRangeCategorical, where + ": undeclared level '" + t + "'");
        col.values[i] = it->second;
      } else {
        const auto v = parse_number(t);
        if (!v) throw Error(ErrorCode::Parse, where + ": '" + t + "' is not a number");
        col.values[i] = *v;
      }
    }
    if (!masked) col.observed.clear();
    table.origins.push_back(std::move(origin));
  }
  table.data = Dataset(std::move(cols));
  validate(table.data);
  return table;
}

CsvTable read_csv_file(const std::string& path, const std::optional<Schema>& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open '" + path + "'");
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.d(); ++j) out << (j ? "," : "") << quote_if_needed(data.column(j).name);
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.d(); ++j) {
      if (j) out << ',';
      const Column& col = data.column(j);
      if (!col.is_observed(i)) {
        out << "NA";
        continue;
      }
      const double x = col.values[i];
      switch (col.kind.tag) {
        case Kind::Continuous:
          out << format_double(x);
          break;
        case Kind::Integer:
          out << static_cast<long long>(x);
          break;
        case Kind::Categorical: {
          const auto h = static_cast<std::size_t>(x);
          out << quote_if_needed(col.level_names.empty() ? std::to_string(h) : col.level_names[h - 1]);
          break;
        }
      }
    }
    out << '\n';
  }
}

}  // namespace mixsel
