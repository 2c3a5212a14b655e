#include "cdr/csv.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cdr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw std::out_of_range("csv: no column '" + name + "'");
}

std::vector<double> CsvTable::column_values(const std::string& name) const {
  const int c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  table.header = split(trim(line), ',');
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != table.header.size()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(table.header.size()) + " columns");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty()) {
        if (c == "nan" || c == "-nan") v = std::numeric_limits<double>::quiet_NaN();
        else if (c == "inf") v = std::numeric_limits<double>::infinity();
        else if (c == "-inf") v = -std::numeric_limits<double>::infinity();
        else throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& r : table.rows) {
    for (size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_double(r[i]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error("config line " + std::to_string(lineno) + ": bad section");
      current = trim(line.substr(1, line.size() - 2));
      cfg.section(current);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    }
    cfg.add(current, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Config::Entries& Config::section(const std::string& name) {
  for (auto& s : sections_) {
    if (s.first == name) return s.second;
  }
  sections_.emplace_back(name, Entries{});
  return sections_.back().second;
}

const Config::Entries* Config::find(const std::string& name) const {
  for (const auto& s : sections_) {
    if (s.first == name) return &s.second;
  }
  return nullptr;
}

bool Config::has(const std::string& sec, const std::string& key) const {
  const Entries* e = find(sec);
  if (!e) return false;
  for (const auto& kv : *e) {
    if (kv.first == key) return true;
  }
  return false;
}

const std::string& Config::get(const std::string& sec, const std::string& key) const {
  const Entries* e = find(sec);
  if (e) {
    for (auto it = e->rbegin(); it != e->rend(); ++it) {
      if (it->first == key) return it->second;
    }
  }
  throw std::out_of_range("config: missing " + (sec.empty() ? key : sec + "." + key));
}

std::string Config::get_or(const std::string& sec, const std::string& key, const std::string& fallback) const {
  return has(sec, key) ? get(sec, key) : fallback;
}

double Config::get_double(const std::string& sec, const std::string& key, double fallback) const {
  return has(sec, key) ? std::stod(get(sec, key)) : fallback;
}

int Config::get_int(const std::string& sec, const std::string& key, int fallback) const {
  return has(sec, key) ? std::stoi(get(sec, key)) : fallback;
}

std::vector<std::pair<std::string, std::string>> Config::entries(const std::string& sec) const {
  const Entries* e = find(sec);
  return e ? *e : Entries{};
}

std::vector<std::string> Config::get_all(const std::string& sec, const std::string& key) const {
  std::vector<std::string> out;
  if (const Entries* e = find(sec)) {
    for (const auto& kv : *e) {
      if (kv.first == key) out.push_back(kv.second);
    }
  }
  return out;
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& s : sections_) out.push_back(s.first);
  return out;
}

void Config::set(const std::string& sec, const std::string& key, const std::string& value) {
  Entries& e = section(sec);
  std::erase_if(e, [&](const auto& kv) { return kv.first == key; });
  e.emplace_back(key, value);
}

void Config::add(const std::string& sec, const std::string& key, const std::string& value) {
  section(sec).emplace_back(key, value);
}

std::string Config::to_string() const {
  std::ostringstream out;
  // Unsectioned keys must come before the first header to keep their scope.
  if (const Entries* global = find("")) {
    for (const auto& kv : *global) out << kv.first << " = " << kv.second << '\n';
    if (!global->empty()) out << '\n';
  }
  for (const auto& s : sections_) {
    if (s.first.empty()) continue;
    out << '[' << s.first << "]\n";
    for (const auto& kv : s.second) out << kv.first << " = " << kv.second << '\n';
    out << '\n';
  }
  return out.str();
}

void Config::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_string();
}

}  // namespace cdr
