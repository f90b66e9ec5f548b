/**
 * @file config.hpp
 *
 * Minimal key-value configuration reader. Files are plain text,
 * `key = value` per line, `#` comments, dotted keys for grouping.
 */
#pragma once

#include "vdse/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vdse {

class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list of doubles.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

  /// Overlay other's entries on top of this one.
  void merge(const Config& other);

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace vdse
