#pragma once

// CSV logging and key/value report files. All numeric formatting goes
// through one shortest-round-trip printer so identical runs produce
// byte-identical files.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dekf/errors.hpp"

namespace dekf {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : path_(path), cols_(header.size()), out_(path) {
    if (!out_) throw IoError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
      out_ << (i ? "," : "") << header[i];
    }
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    if (values.size() != cols_) {
      throw IoError("column count mismatch writing " + path_);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      out_ << (i ? "," : "") << format_double(values[i]);
    }
    out_ << "\n";
    if (!out_) throw IoError("write failed: " + path_);
  }

  void close() {
    out_.close();
    if (out_.fail()) throw IoError("close failed: " + path_);
  }

 private:
  std::string path_;
  std::size_t cols_;
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    throw IoError("csv column not found: " + name);
  }

  std::vector<double> col(const std::string& name) const {
    const int c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(c)]);
    return out;
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.header.size()) {
      throw IoError("ragged csv row in " + path);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Ordered key/value report ("key = value" lines), round-trippable.
inline void write_report(const std::string& path,
                         const std::vector<std::pair<std::string, double>>& kv) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& [k, v] : kv) out << k << " = " << format_double(v) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

inline std::map<std::string, double> read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::map<std::string, double> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = std::stod(line.substr(eq + 3));
  }
  return kv;
}

}  // namespace dekf
