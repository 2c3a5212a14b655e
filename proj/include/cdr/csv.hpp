#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cdr {

/// Shortest round-trip-safe text for a double (17 significant digits).
std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by name; throws std::out_of_range if absent.
  int column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Plain-text configuration: `key = value` lines, optional `[section]`
/// headers, `#` comments. Keys may repeat; all values are kept in order.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  /// Last value for the key; throws std::out_of_range if absent.
  const std::string& get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::vector<std::string> get_all(const std::string& section, const std::string& key) const;
  std::vector<std::string> sections() const;
  /// Every (key, value) pair of a section in file order.
  std::vector<std::pair<std::string, std::string>> entries(const std::string& section) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  void add(const std::string& section, const std::string& key, const std::string& value);
  std::string to_string() const;
  void save(const std::string& path) const;

 private:
  using Entries = std::vector<std::pair<std::string, std::string>>;
  std::vector<std::pair<std::string, Entries>> sections_;
  Entries& section(const std::string& name);
  const Entries* find(const std::string& name) const;
};

}  // namespace cdr
