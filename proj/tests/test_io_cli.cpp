#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "conflab/cli.hpp"
#include "conflab/io.hpp"

using namespace conflab;
using nlohmann::json;

namespace {

json e1_config() {
  return json::parse(R"({
    "instance": {
      "mu": 0.5, "c": 1,
      "dist": {"kind": "uniform", "lo": 0, "hi": 1},
      "estimator": {"kind": "beta_mean", "a": 1, "b": 1}
    },
    "price": 1.0
  })");
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& contents)
      : path("/tmp/conflab_test_" + name) {
    std::ofstream f(path);
    f << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

}  // namespace

TEST_CASE("config parsing and serialization round trip") {
  const auto cfg = io::parse_config(e1_config());
  REQUIRE(cfg.instance.has_value());
  CHECK(cfg.instance->mu == 0.5);
  CHECK(cfg.instance->c == 1);
  CHECK(cfg.price == 1.0);

  const json round = io::to_json(*cfg.instance);
  const auto again = io::instance_from_json(round, "instance");
  CHECK(again.mu == cfg.instance->mu);
  CHECK(again.dist.hi == cfg.instance->dist.hi);
  CHECK(again.estimator.a == cfg.instance->estimator.a);
}

TEST_CASE("policy serialization round trip, including state tables") {
  const auto counts = PricingPolicy::count_table({0.25, 0.5, 0.75});
  const auto counts2 =
      io::policy_from_json(io::to_json(counts, 2), "pricing");
  CHECK(counts2.count_prices == counts.count_prices);

  std::unordered_map<std::uint64_t, double> sp = {
      {0, 1.0}, {1, 1.25}, {2, 1.5}, {3, 1.75}};
  const auto states = PricingPolicy::state_table(sp);
  const json j = io::to_json(states, 2);
  const auto states2 = io::policy_from_json(j, "pricing");
  for (const auto& [idx, price] : sp) {
    CHECK(states2.price_for_state(idx, 0) == price);
  }
}

TEST_CASE("config errors carry the offending field") {
  json bad = e1_config();
  bad["instance"]["mu"] = 1.5;
  try {
    io::parse_config(bad);
    FAIL("expected ConfigInvalid");
  } catch (const ConfigInvalid& e) {
    CHECK(std::string(e.what()).find("instance") != std::string::npos);
  }

  bad = e1_config();
  bad["instance"]["dist"]["kind"] = "warp";
  try {
    io::parse_config(bad);
    FAIL("expected ConfigInvalid");
  } catch (const ConfigInvalid& e) {
    CHECK(std::string(e.what()).find("instance.dist.kind") != std::string::npos);
  }
}

TEST_CASE("csv format: 12 significant digits, LF endings") {
  std::ostringstream os;
  io::CsvWriter csv(os, {"a", "b"});
  csv.row({1.0 / 3.0, 2.0});
  CHECK(os.str() == "a,b\n0.333333333333,2\n");
  CHECK(io::format_number(0.1234567890123456) == "0.123456789012");
}

TEST_CASE("cli analyze prints the worked numbers") {
  TempFile cfg("e1.json", e1_config().dump());
  std::string out;
  const int rc = run_cli({"analyze", "--config", cfg.path}, &out);
  CHECK(rc == 0);
  CHECK(out.find("rev_random = 0.5\n") != std::string::npos);
  CHECK(out.find("rev_newest = 0.444444444444\n") != std::string::npos);
  CHECK(out.find("chi = 1.125\n") != std::string::npos);
}

TEST_CASE("cli analyze writes a result file that re-parses identically") {
  TempFile cfg("e1b.json", e1_config().dump());
  const std::string out_path = "/tmp/conflab_test_result.json";
  std::string out;
  REQUIRE(run_cli({"analyze", "--config", cfg.path, "--out", out_path}, &out) == 0);
  std::ifstream f(out_path);
  REQUIRE(f.good());
  json j;
  f >> j;
  CHECK(j["rev_random"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(j["chi"].get<double>() == doctest::Approx(1.125).epsilon(1e-12));
  // Serialize again: values survive the round trip bit for bit.
  const json j2 = json::parse(j.dump());
  CHECK(j2 == j);
  std::remove(out_path.c_str());
}

TEST_CASE("cli rejects malformed configs with exit code 1") {
  TempFile cfg("bad.json", R"({"instance": {"mu": "high"}})");
  std::string err;
  CHECK(run_cli({"analyze", "--config", cfg.path}, nullptr, &err) == 1);
  CHECK(err.find("instance") != std::string::npos);
  CHECK(run_cli({"analyze", "--config", "/nonexistent.json"}, nullptr, &err) == 1);
}

TEST_CASE("cli sweep over the attention budget") {
  json cfg_json = json::parse(R"({
    "instance": {
      "mu": 0.1, "c": 1,
      "dist": {"kind": "uniform", "lo": -1, "hi": 1},
      "estimator": {"kind": "beta_mean", "a": 0.1, "b": 0.9}
    },
    "price": 1.0
  })");
  TempFile cfg("sweep.json", cfg_json.dump());
  std::string out;
  const int rc = run_cli({"sweep", "--config", cfg.path, "--axis", "c",
                          "--values", "1..10"},
                         &out);
  REQUIRE(rc == 0);
  std::istringstream lines(out);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "c,rev_random,rev_newest,chi");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ++rows;
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    std::getline(cells, cell, ',');
    CHECK(std::stod(cell) == doctest::Approx(0.05).epsilon(1e-9));
  }
  CHECK(rows == 10);
}

TEST_CASE("cli sweep rejects unknown axes") {
  TempFile cfg("sweep2.json", e1_config().dump());
  std::string err;
  CHECK(run_cli({"sweep", "--config", cfg.path, "--axis", "flux", "--values",
                 "1,2"},
                nullptr, &err) == 1);
  CHECK(err.find("axis") != std::string::npos);
}

TEST_CASE("cli simulate smoke run with overrides") {
  json cfg_json = e1_config();
  cfg_json["ordering"] = "newest";
  cfg_json["simulation"] = {{"rounds", 4000}, {"replications", 4}, {"seed", 5}};
  TempFile cfg("sim.json", cfg_json.dump());
  std::string out;
  const int rc = run_cli(
      {"simulate", "--config", cfg.path, "--rounds", "2000", "--reps", "3"},
      &out);
  CHECK(rc == 0);
  CHECK(out.find("avg_revenue_per_round = ") != std::string::npos);
}

TEST_CASE("cli sweep over the quality-switch rate") {
  json cfg_json = json::parse(R"({
    "instance": {
      "mu": 0.5, "c": 1,
      "dist": {"kind": "uniform", "lo": 0, "hi": 1},
      "estimator": {"kind": "table", "values": [0.25, 0.75]}
    },
    "price": 1.0,
    "simulation": {"variant": {"kind": "markov_quality",
                               "mu_lo": 0.25, "mu_hi": 0.75, "xi": 0.5}}
  })");
  TempFile cfg("xi.json", cfg_json.dump());
  std::string out;
  REQUIRE(run_cli({"sweep", "--config", cfg.path, "--axis", "xi", "--values",
                   "0.25,0.5,0.75"},
                  &out) == 0);
  std::istringstream lines(out);
  std::string header;
  std::getline(lines, header);
  CHECK(header.rfind("xi,", 0) == 0);
  // The xi = 0.5 row carries the worked belief errors.
  std::string row;
  std::getline(lines, row);
  std::getline(lines, row);
  CHECK(row.find("0.109042553191") != std::string::npos);
  CHECK(row.find("0.125") != std::string::npos);
}

TEST_CASE("cli sweep over the prior feedback weight runs the engine") {
  json cfg_json = e1_config();
  cfg_json["simulation"] = {{"rounds", 500}, {"replications", 4}, {"seed", 3}};
  TempFile cfg("gamma.json", cfg_json.dump());
  std::string out;
  REQUIRE(run_cli({"sweep", "--config", cfg.path, "--axis", "gamma",
                   "--values", "0,0.1"},
                  &out) == 0);
  std::istringstream lines(out);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "gamma,rev_newest,rev_random_finite,rev_random,se_newest,"
        "se_random_finite,se_random");
  int rows = 0;
  std::string row;
  while (std::getline(lines, row)) rows += !row.empty();
  CHECK(rows == 2);
}

TEST_CASE("cli analyze can dump the explicit chain") {
  TempFile cfg("chain.json", e1_config().dump());
  const std::string csv_path = "/tmp/conflab_test_chain.csv";
  std::string out;
  REQUIRE(run_cli({"analyze", "--config", cfg.path, "--chain-csv", csv_path},
                  &out) == 0);
  std::ifstream f(csv_path);
  std::string header;
  std::getline(f, header);
  CHECK(header == "state,0,1");
  std::string row;
  std::getline(f, row);
  CHECK(row.rfind("0,0.8333", 0) == 0);
  std::remove(csv_path.c_str());
}

TEST_CASE("cli verify exits cleanly and deterministically") {
  std::string out1, out2;
  CHECK(run_cli({"verify", "--seed", "5"}, &out1) == 0);
  CHECK(run_cli({"verify", "--seed", "5"}, &out2) == 0);
  CHECK(out1 == out2);
}
