#pragma once

// Config parsing (JSON) and result serialization (JSON + CSV).

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conflab/analytics.hpp"
#include "conflab/model.hpp"
#include "conflab/pricing.hpp"
#include "conflab/simulator.hpp"

namespace conflab::io {

struct SimSettings {
  std::int64_t rounds = 100000;
  int replications = 16;
  std::uint64_t seed = 0;
  SimVariant variant;
  bool record_trajectories = false;
  std::optional<std::int64_t> burn_in;
};

struct SweepSpec {
  std::string axis;
  std::vector<double> values;
};

struct Config {
  std::optional<Instance> instance;
  std::optional<double> price;
  std::optional<PricingPolicy> pricing;
  std::optional<SimOrdering> ordering;
  int window_w = 0;
  SimSettings sim;
  std::optional<SweepSpec> sweep;
};

// Throws ConfigInvalid with a field-level message ("instance.mu: ...").
Config parse_config(const nlohmann::json& j);
Config load_config_file(const std::string& path);

nlohmann::json to_json(const ValuationDistribution& dist);
nlohmann::json to_json(const Estimator& est);
nlohmann::json to_json(const Instance& inst);
nlohmann::json to_json(const PricingPolicy& policy, int c);
nlohmann::json to_json(const ConfReport& report);
nlohmann::json to_json(const OptimizedPricing& opt, int c);
nlohmann::json to_json(const SimResult& result);

// Parsers for the pieces (used by tests for round trips).
ValuationDistribution dist_from_json(const nlohmann::json& j,
                                     const std::string& where);
Estimator estimator_from_json(const nlohmann::json& j, const std::string& where);
Instance instance_from_json(const nlohmann::json& j, const std::string& where);
PricingPolicy policy_from_json(const nlohmann::json& j, const std::string& where);

// %.12g, the golden-file number format.
std::string format_number(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header);
  void row(const std::vector<double>& cells);

 private:
  std::ostream& os_;
};

}  // namespace conflab::io
