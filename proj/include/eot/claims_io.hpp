#pragma once

// Claim-severity ingestion from delimiter-separated text files. The
// delimiter is autodetected (comma, else whitespace) and can be forced; the
// selected column is 1-based. A single leading header line is tolerated;
// any other non-numeric field, a non-positive claim, or a short row is an
// error that names the offending line.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eot/errors.hpp"

namespace eot {

struct ClaimDataset {
  std::vector<double> values;
  std::string source;
  long n = 0;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  if (delimiter == ' ') {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
  } else {
    std::string tok;
    std::istringstream ss(line);
    while (std::getline(ss, tok, delimiter)) {
      const auto b = tok.find_first_not_of(" \t\r");
      const auto e = tok.find_last_not_of(" \t\r");
      fields.push_back(b == std::string::npos ? std::string() : tok.substr(b, e - b + 1));
    }
  }
  return fields;
}

inline bool parse_field(const std::string& field, double& out) {
  if (field.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(field, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == field.size();
}

}  // namespace detail

// column is 1-based; delimiter 0 requests autodetection.
inline ClaimDataset load_claims(const std::string& path, int column = 1, char delimiter = 0) {
  if (column < 1) throw std::invalid_argument("load_claims: column must be >= 1");
  std::ifstream in(path);
  if (!in) throw data_error("load_claims: cannot open " + path);

  ClaimDataset ds;
  ds.source = path;
  std::string line;
  long lineno = 0;
  bool saw_data = false;
  char delim = delimiter;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto nonblank = line.find_first_not_of(" \t");
    if (nonblank == std::string::npos) continue;
    if (delim == 0) delim = line.find(',') != std::string::npos ? ',' : ' ';

    const auto fields = detail::split_fields(line, delim);
    if (static_cast<std::size_t>(column) > fields.size()) {
      throw data_error(path + ":" + std::to_string(lineno) + ": row has " +
                       std::to_string(fields.size()) + " fields, column " +
                       std::to_string(column) + " requested");
    }
    double value = 0.0;
    if (!detail::parse_field(fields[static_cast<std::size_t>(column - 1)], value)) {
      if (!saw_data) continue;  // header line
      throw data_error(path + ":" + std::to_string(lineno) + ": non-numeric value '" +
                       fields[static_cast<std::size_t>(column - 1)] + "'");
    }
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw data_error(path + ":" + std::to_string(lineno) +
                       ": claim must be positive and finite, got " +
                       fields[static_cast<std::size_t>(column - 1)]);
    }
    ds.values.push_back(value);
    saw_data = true;
  }
  if (ds.values.empty()) throw data_error("load_claims: no data rows in " + path);
  ds.n = static_cast<long>(ds.values.size());
  return ds;
}

}  // namespace eot
