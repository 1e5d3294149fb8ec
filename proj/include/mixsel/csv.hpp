#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mixsel/dataset.hpp"

namespace mixsel {

// Sidecar schema: one `name:kind` line per column, kind in {cont, int, cat}.
// Categorical lines may declare their levels: `name:cat:low|mid|high`.
struct SchemaEntry {
  std::string name;
  Kind kind = Kind::Continuous;
  std::vector<std::string> levels;  // declared categorical levels, in code order
};

struct Schema {
  std::vector<SchemaEntry> entries;

  const SchemaEntry* find(const std::string& name) const;
};

Schema read_schema(std::istream& in);
Schema read_schema_file(const std::string& path);
void write_schema(std::ostream& out, const Schema& schema);
Schema schema_of(const Dataset& data);

// How a column's kind and level coding were decided.
struct ColumnOrigin {
  std::string name;
  std::string kind;     // cont | int | cat
  bool inferred = false;
  std::vector<std::string> levels;  // categorical only, level h is levels[h - 1]
};

struct CsvTable {
  Dataset data;
  std::vector<ColumnOrigin> origins;
};

// Header row with column names; `NA` or an empty field marks a missing cell.
// Without a schema entry a column is continuous when every observed token is a
// number and one of them is fractional (or negative), integer when all are
// nonnegative whole numbers, categorical otherwise. The result is validated.
CsvTable read_csv(std::istream& in, const std::optional<Schema>& schema = std::nullopt);
CsvTable read_csv_file(const std::string& path, const std::optional<Schema>& schema = std::nullopt);

// 17 significant digits for continuous cells, `NA` for missing ones.
void write_csv(std::ostream& out, const Dataset& data);

// Splits one CSV record; handles double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace mixsel
