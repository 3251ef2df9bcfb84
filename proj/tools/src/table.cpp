#include "odl_cli/table.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "odl/error.hpp"

namespace odl::cli {

namespace {

std::string quote(const std::string& f) {
  if (f.find_first_of(",\"\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> parse_line(const std::string& line, std::size_t row) {
  std::vector<std::string> out;
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
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw IngestionError("csv row " + std::to_string(row) + ": unterminated quote");
  out.push_back(cur);
  return out;
}

}  // namespace

void Table::add(std::vector<std::string> row) {
  if (row.size() != header.size()) throw ContractViolation("table row width does not match the header");
  rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IngestionError("csv has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

void Table::write_csv(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << quote(r[k]);
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void Table::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw RunError("cannot write '" + path + "'");
  write_csv(out);
  if (!out) throw RunError("short write on '" + path + "'");
}

void Table::write_text(std::ostream& out) const {
  std::vector<std::size_t> w(header.size());
  for (std::size_t k = 0; k < header.size(); ++k) w[k] = header[k].size();
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) w[k] = std::max(w[k], r[k].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) out << "  ";
      // Left-align the first column, right-align the rest.
      out << (k == 0 ? std::left : std::right) << std::setw(static_cast<int>(w[k])) << r[k];
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  out << std::left;
}

Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto fields = parse_line(line, row);
    if (t.header.empty()) {
      t.header = std::move(fields);
    } else {
      if (fields.size() != t.header.size()) {
        throw IngestionError("csv row " + std::to_string(row) + ": expected " + std::to_string(t.header.size()) +
                             " fields, got " + std::to_string(fields.size()));
      }
      t.rows.push_back(std::move(fields));
    }
  }
  if (t.header.empty()) throw IngestionError("csv is empty");
  return t;
}

Table read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  return read_csv(in);
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace odl::cli
