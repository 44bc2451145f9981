// Column-table writers for the command line tools. Floats go through
// to_chars at 17 significant digits so values round-trip exactly and a rerun
// with the same configuration produces byte-identical files; nothing
// time- or environment-dependent is ever written.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "densgrad/errors.hpp"

namespace densgrad {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";  // pin the spelling, sign of NaN is noise
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string format_integer(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), (long long)(std::llround(v)));
  return std::string(buf, res.ptr);
}

struct Column {
  std::string name;
  std::vector<double> values;
  bool as_integer = false;
};

struct Table {
  std::vector<Column> cols;

  Table& add(std::string name, std::vector<double> values, bool as_integer = false) {
    cols.push_back({std::move(name), std::move(values), as_integer});
    return *this;
  }

  std::size_t rows() const {
    if (cols.empty()) return 0;
    std::size_t n = cols.front().values.size();
    for (const auto& c : cols)
      if (c.values.size() != n)
        throw GridMismatch("table column " + c.name + " has mismatched length");
    return n;
  }
};

inline void write_csv(const Table& t, const std::string& path) {
  std::size_t n = t.rows();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (std::size_t c = 0; c < t.cols.size(); ++c) {
    if (c) out << ',';
    out << t.cols[c].name;
  }
  out << '\n';
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < t.cols.size(); ++c) {
      if (c) out << ',';
      double v = t.cols[c].values[r];
      out << (t.cols[c].as_integer ? format_integer(v) : format_double(v));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed on " + path);
}

// Column-oriented JSON mirror of the CSV layout. NaN has no JSON encoding
// and serializes as null.
inline void write_table_json(const Table& t, const std::string& path) {
  std::size_t n = t.rows();
  Json j;
  j["rows"] = n;
  Json cols = Json::object();
  for (const auto& c : t.cols) {
    if (c.as_integer) {
      std::vector<long long> iv;
      iv.reserve(c.values.size());
      for (double v : c.values) iv.push_back((long long)(std::llround(v)));
      cols[c.name] = iv;
    } else {
      cols[c.name] = c.values;
    }
  }
  j["columns"] = std::move(cols);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed on " + path);
}

inline void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed on " + path);
}

// Every table gets a sidecar holding the fully resolved configuration that
// produced it, so a file can be reproduced from its sidecar alone.
inline void write_table(const Table& t, const std::string& dir, const std::string& stem,
                        const std::string& format, const Json& config) {
  std::string base = dir + "/" + stem;
  if (format == "json")
    write_table_json(t, base + ".json");
  else
    write_csv(t, base + ".csv");
  write_json_file(config, base + ".meta.json");
}

}  // namespace densgrad
