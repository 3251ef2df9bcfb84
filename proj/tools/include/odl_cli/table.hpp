#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace odl::cli {

/// Small CSV table; fields holding commas or quotes are quoted.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  /// Column index by name; throws IngestionError when absent.
  std::size_t column(const std::string& name) const;
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
  /// Space-aligned text rendering.
  void write_text(std::ostream& out) const;
};

Table read_csv(std::istream& in);
Table read_csv_file(const std::string& path);

/// Shortest round-trip decimal form.
std::string num(double v);

}  // namespace odl::cli
