#include "cdr/csv.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

using namespace cdr;

TEST_CASE("doubles survive a text round trip") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = U(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "cdr_csv_test.csv").string();
  CsvTable t;
  t.header = {"t", "x1", "u"};
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int r = 0; r < 50; ++r) t.rows.push_back({N(rng), N(rng), N(rng)});
  t.rows.push_back({std::numeric_limits<double>::quiet_NaN(), 1e-300, -0.0});
  write_csv(path, t);
  const CsvTable b = read_csv(path);
  CHECK(b.header == t.header);
  REQUIRE(b.rows.size() == t.rows.size());
  for (size_t r = 0; r + 1 < t.rows.size(); ++r) {
    for (int c = 0; c < 3; ++c) CHECK(b.rows[r][c] == t.rows[r][c]);
  }
  CHECK(std::isnan(b.rows.back()[0]));
  CHECK(b.rows.back()[1] == 1e-300);
  CHECK(b.column("u") == 2);
  CHECK(b.column_values("x1").size() == t.rows.size());
  CHECK_THROWS_AS(b.column("v"), std::out_of_range);
  CHECK_THROWS(read_csv(path + ".missing"));
}

TEST_CASE("config parsing") {
  const Config c = Config::parse(
      "# comment\n"
      "seed = 4\n"
      "\n"
      "[ex1]\n"
      "  lr = 1e-4   \n"
      "phase = 0 10 1 0 0\n"
      "phase = 10 20 1 1 0\n"
      "[ex2]\n"
      "n = 32\n");
  CHECK(c.get("", "seed") == "4");
  CHECK(c.get_int("", "seed", 0) == 4);
  CHECK(c.get_double("ex1", "lr", 0.0) == 1e-4);
  CHECK(c.get_all("ex1", "phase").size() == 2u);
  CHECK(c.get("ex1", "phase") == "10 20 1 1 0");
  CHECK(c.get_or("ex2", "missing", "x") == "x");
  CHECK(c.get_int("ex2", "missing", 7) == 7);
  CHECK(c.has("ex2", "n"));
  CHECK_FALSE(c.has("ex3", "n"));
  CHECK_THROWS_AS(c.get("ex2", "missing"), std::out_of_range);
  CHECK(c.entries("ex1").size() == 3u);
  const auto s = c.sections();
  CHECK(std::find(s.begin(), s.end(), "ex2") != s.end());
  CHECK_THROWS(Config::parse("no equals sign here\n"));
  CHECK_THROWS(Config::parse("k = abc").get_int("", "k", 0));
}

TEST_CASE("config set, add and save") {
  Config c;
  c.set("run", "id", "ex3");
  c.set("run", "id", "ex4");
  c.add("run", "tag", "a");
  c.add("run", "tag", "b");
  c.set("", "seed", "9");
  CHECK(c.get("run", "id") == "ex4");
  CHECK(c.get_all("run", "id").size() == 1u);
  CHECK(c.get_all("run", "tag").size() == 2u);
  const auto path = (std::filesystem::temp_directory_path() / "cdr_cfg_test.txt").string();
  c.save(path);
  const Config d = Config::load(path);
  CHECK(d.get("run", "id") == "ex4");
  CHECK(d.get_all("run", "tag") == std::vector<std::string>{"a", "b"});
  CHECK(d.get("", "seed") == "9");
  CHECK(Config::parse(c.to_string()).to_string() == c.to_string());
}
