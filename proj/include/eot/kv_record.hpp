#pragma once

// Flat key-value text records: one "key = value" pair per line, '#' comments,
// insertion order preserved on output. Doubles render with 12 significant
// digits. Used for model round-tripping, experiment configs and reports.

#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "eot/errors.hpp"

namespace eot {

class KvRecord {
 public:
  KvRecord() = default;

  static KvRecord parse(std::istream& in) {
    KvRecord rec;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw data_error("record line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw data_error("record line " + std::to_string(lineno) + ": empty key");
      rec.set(key, value);
    }
    return rec;
  }

  static KvRecord parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  void set(const std::string& key, const std::string& value) {
    const auto it = index_.find(key);
    if (it == index_.end()) {
      index_[key] = entries_.size();
      entries_.emplace_back(key, value);
    } else {
      entries_[it->second].second = value;
    }
  }

  void set_f64(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    set(key, buf);
  }

  void set_i64(const std::string& key, long long value) { set(key, std::to_string(value)); }
  void set_u64(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

  bool has(const std::string& key) const { return index_.count(key) > 0; }

  const std::string& str(const std::string& key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) throw data_error("record: missing key '" + key + "'");
    return entries_[it->second].second;
  }

  std::string str_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
  }

  double f64(const std::string& key) const {
    const std::string& v = str(key);
    std::size_t pos = 0;
    double out;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw data_error("record: key '" + key + "' is not numeric: " + v);
    }
    if (pos != v.size()) throw data_error("record: key '" + key + "' is not numeric: " + v);
    return out;
  }

  double f64_or(const std::string& key, double fallback) const {
    return has(key) ? f64(key) : fallback;
  }

  long long i64(const std::string& key) const {
    const std::string& v = str(key);
    std::size_t pos = 0;
    long long out;
    try {
      out = std::stoll(v, &pos);
    } catch (const std::exception&) {
      throw data_error("record: key '" + key + "' is not an integer: " + v);
    }
    if (pos != v.size()) throw data_error("record: key '" + key + "' is not an integer: " + v);
    return out;
  }

  long long i64_or(const std::string& key, long long fallback) const {
    return has(key) ? i64(key) : fallback;
  }

  std::uint64_t u64(const std::string& key) const {
    const std::string& v = str(key);
    std::size_t pos = 0;
    unsigned long long out;
    try {
      out = std::stoull(v, &pos);
    } catch (const std::exception&) {
      throw data_error("record: key '" + key + "' is not an unsigned integer: " + v);
    }
    if (pos != v.size())
      throw data_error("record: key '" + key + "' is not an unsigned integer: " + v);
    return out;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

// FNV-1a digest of a text record, rendered as 16 hex digits.
inline std::string text_digest(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace eot
