#include "conflab/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

namespace conflab::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigInvalid(where + ": " + what);
}

double need_number(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    fail(where + "." + key, "expected a number");
  }
  return j[key].get<double>();
}

double number_or(const json& j, const char* key, double fallback,
                 const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) fail(where + "." + key, "expected a number");
  return j[key].get<double>();
}

std::string need_string(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    fail(where + "." + key, "expected a string");
  }
  return j[key].get<std::string>();
}

}  // namespace

ValuationDistribution dist_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string kind = need_string(j, where, "kind");
  try {
    if (kind == "uniform") {
      return ValuationDistribution::uniform(need_number(j, where, "lo"),
                                            need_number(j, where, "hi"));
    }
    if (kind == "exponential") {
      return ValuationDistribution::exponential(need_number(j, where, "rate"));
    }
    if (kind == "normal") {
      return ValuationDistribution::normal(need_number(j, where, "mean"),
                                           need_number(j, where, "sd"));
    }
    if (kind == "bernoulli") {
      return ValuationDistribution::bernoulli(
          need_number(j, where, "success_prob"),
          number_or(j, "on_value", 1.0, where),
          number_or(j, "off_value", 0.0, where));
    }
  } catch (const InvalidDistribution& e) {
    fail(where, e.what());
  }
  fail(where + ".kind", "unknown kind '" + kind + "'");
}

Estimator estimator_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string kind = need_string(j, where, "kind");
  try {
    if (kind == "beta_mean") {
      return Estimator::beta_mean(need_number(j, where, "a"),
                                  need_number(j, where, "b"));
    }
    if (kind == "beta_quantile") {
      return Estimator::beta_quantile(need_number(j, where, "a"),
                                      need_number(j, where, "b"),
                                      need_number(j, where, "phi"));
    }
    if (kind == "table") {
      if (!j.contains("values") || !j["values"].is_array()) {
        fail(where + ".values", "expected an array");
      }
      return Estimator::table(j["values"].get<std::vector<double>>());
    }
  } catch (const InvalidEstimator& e) {
    fail(where, e.what());
  }
  fail(where + ".kind", "unknown kind '" + kind + "'");
}

Instance instance_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  if (!j.contains("dist")) fail(where + ".dist", "missing");
  if (!j.contains("estimator")) fail(where + ".estimator", "missing");
  const double mu = need_number(j, where, "mu");
  const double c_raw = need_number(j, where, "c");
  const int c = static_cast<int>(c_raw);
  if (c != c_raw) fail(where + ".c", "expected an integer");
  try {
    return make_instance(mu, dist_from_json(j["dist"], where + ".dist"), c,
                         estimator_from_json(j["estimator"], where + ".estimator"));
  } catch (const ConfigInvalid&) {
    throw;  // nested parsers already carry the field path
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

PricingPolicy policy_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return PricingPolicy::static_price_of(j.get<double>());
  if (!j.is_object()) fail(where, "expected an object or a number");
  const std::string kind = need_string(j, where, "kind");
  try {
    if (kind == "static") {
      return PricingPolicy::static_price_of(need_number(j, where, "price"));
    }
    if (kind == "count_table") {
      if (!j.contains("prices") || !j["prices"].is_array()) {
        fail(where + ".prices", "expected an array");
      }
      return PricingPolicy::count_table(j["prices"].get<std::vector<double>>());
    }
    if (kind == "state_table") {
      if (!j.contains("prices") || !j["prices"].is_object()) {
        fail(where + ".prices", "expected an object keyed by bitstrings");
      }
      std::unordered_map<std::uint64_t, double> prices;
      for (const auto& [bits, price] : j["prices"].items()) {
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < bits.size(); ++i) {
          if (bits[i] == '1') {
            idx |= (std::uint64_t{1} << i);
          } else if (bits[i] != '0') {
            fail(where + ".prices", "key '" + bits + "' is not a bitstring");
          }
        }
        if (!price.is_number()) fail(where + ".prices." + bits, "expected a number");
        prices[idx] = price.get<double>();
      }
      return PricingPolicy::state_table(std::move(prices));
    }
  } catch (const InvalidPolicy& e) {
    fail(where, e.what());
  }
  fail(where + ".kind", "unknown kind '" + kind + "'");
}

namespace {

SimVariant variant_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string kind = need_string(j, where, "kind");
  if (kind == "baseline") return SimVariant::baseline();
  if (kind == "time_varying_prior") {
    return SimVariant::time_varying_prior(need_number(j, where, "gamma"));
  }
  if (kind == "increasing_quality") {
    return SimVariant::increasing_quality(need_number(j, where, "mu_lo"),
                                          need_number(j, where, "mu_hi"));
  }
  if (kind == "markov_quality") {
    return SimVariant::markov_quality(need_number(j, where, "mu_lo"),
                                      need_number(j, where, "mu_hi"),
                                      need_number(j, where, "xi"));
  }
  if (kind == "coarse_ratings") return SimVariant::coarse_ratings();
  fail(where + ".kind", "unknown kind '" + kind + "'");
}

void ordering_from_json(const json& j, const std::string& where, Config& cfg) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "newest") {
      cfg.ordering = SimOrdering::Newest;
    } else if (s == "random_iid") {
      cfg.ordering = SimOrdering::RandomIid;
    } else if (s == "random_finite_pool") {
      cfg.ordering = SimOrdering::RandomFinitePool;
    } else {
      fail(where, "unknown ordering '" + s + "'");
    }
    return;
  }
  if (j.is_object()) {
    const std::string kind = need_string(j, where, "kind");
    if (kind != "window") fail(where + ".kind", "unknown kind '" + kind + "'");
    const double w = need_number(j, where, "w");
    cfg.ordering = SimOrdering::Window;
    cfg.window_w = static_cast<int>(w);
    if (cfg.window_w != w || cfg.window_w < 1) fail(where + ".w", "expected a positive integer");
    return;
  }
  fail(where, "expected a string or {\"kind\":\"window\",...}");
}

}  // namespace

Config parse_config(const json& j) {
  if (!j.is_object()) throw ConfigInvalid("config root must be an object");
  Config cfg;
  if (j.contains("instance")) {
    cfg.instance = instance_from_json(j["instance"], "instance");
  }
  if (j.contains("price")) {
    if (!j["price"].is_number()) throw ConfigInvalid("price: expected a number");
    cfg.price = j["price"].get<double>();
  }
  if (j.contains("pricing")) {
    cfg.pricing = policy_from_json(j["pricing"], "pricing");
  }
  if (j.contains("ordering")) {
    ordering_from_json(j["ordering"], "ordering", cfg);
  }
  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    const std::string where = "simulation";
    if (!s.is_object()) throw ConfigInvalid("simulation: expected an object");
    cfg.sim.rounds = static_cast<std::int64_t>(number_or(s, "rounds", 100000, where));
    cfg.sim.replications = static_cast<int>(number_or(s, "replications", 16, where));
    cfg.sim.seed = static_cast<std::uint64_t>(number_or(s, "seed", 0, where));
    if (s.contains("variant")) {
      cfg.sim.variant = variant_from_json(s["variant"], where + ".variant");
    }
    if (s.contains("record_trajectories")) {
      if (!s["record_trajectories"].is_boolean()) {
        fail(where + ".record_trajectories", "expected a boolean");
      }
      cfg.sim.record_trajectories = s["record_trajectories"].get<bool>();
    }
    if (s.contains("burn_in")) {
      cfg.sim.burn_in = static_cast<std::int64_t>(need_number(s, where, "burn_in"));
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (!s.is_object()) throw ConfigInvalid("sweep: expected an object");
    SweepSpec spec;
    spec.axis = need_string(s, "sweep", "axis");
    if (!s.contains("values") || !s["values"].is_array()) {
      throw ConfigInvalid("sweep.values: expected an array");
    }
    spec.values = s["values"].get<std::vector<double>>();
    cfg.sweep = std::move(spec);
  }
  return cfg;
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ValuationDistribution& dist) {
  switch (dist.kind) {
    case ValuationDistribution::Kind::Uniform:
      return {{"kind", "uniform"}, {"lo", dist.lo}, {"hi", dist.hi}};
    case ValuationDistribution::Kind::Exponential:
      return {{"kind", "exponential"}, {"rate", dist.rate}};
    case ValuationDistribution::Kind::Normal:
      return {{"kind", "normal"}, {"mean", dist.mean}, {"sd", dist.sd}};
    case ValuationDistribution::Kind::Bernoulli:
      return {{"kind", "bernoulli"},
              {"success_prob", dist.success_prob},
              {"on_value", dist.on_value},
              {"off_value", dist.off_value}};
  }
  return {};
}

json to_json(const Estimator& est) {
  switch (est.kind) {
    case Estimator::Kind::BetaMean:
      return {{"kind", "beta_mean"}, {"a", est.a}, {"b", est.b}};
    case Estimator::Kind::BetaQuantile:
      return {{"kind", "beta_quantile"}, {"a", est.a}, {"b", est.b}, {"phi", est.phi}};
    case Estimator::Kind::Table:
      return {{"kind", "table"}, {"values", est.table_values}};
  }
  return {};
}

json to_json(const Instance& inst) {
  return {{"mu", inst.mu},
          {"c", inst.c},
          {"dist", to_json(inst.dist)},
          {"estimator", to_json(inst.estimator)}};
}

json to_json(const PricingPolicy& policy, int c) {
  switch (policy.kind) {
    case PricingPolicy::Kind::Static:
      return {{"kind", "static"}, {"price", policy.static_price}};
    case PricingPolicy::Kind::CountTable:
      return {{"kind", "count_table"}, {"prices", policy.count_prices}};
    case PricingPolicy::Kind::StateTable: {
      json prices = json::object();
      for (const auto& [idx, price] : policy.state_prices) {
        prices[ReviewState::from_index(idx, c).to_string()] = price;
      }
      return {{"kind", "state_table"}, {"prices", std::move(prices)}};
    }
  }
  return {};
}

json to_json(const ConfReport& report) {
  return {{"rev_random", report.rev_random},
          {"rev_newest", report.rev_newest},
          {"chi", report.chi},
          {"beta", report.beta},
          {"non_degenerate", report.non_degenerate}};
}

json to_json(const OptimizedPricing& opt, int c) {
  json j = {{"policy", to_json(opt.policy, c)}, {"revenue", opt.revenue}};
  json diag = json::object();
  if (opt.diagnostics.offset) diag["offset"] = *opt.diagnostics.offset;
  if (opt.diagnostics.per_count_prices) {
    diag["per_count_prices"] = *opt.diagnostics.per_count_prices;
  }
  if (opt.diagnostics.expected_price_ratio) {
    diag["expected_price_ratio"] = *opt.diagnostics.expected_price_ratio;
  }
  if (opt.diagnostics.max_demand_ratio) {
    diag["max_demand_ratio"] = *opt.diagnostics.max_demand_ratio;
  }
  j["diagnostics"] = std::move(diag);
  return j;
}

json to_json(const SimResult& result) {
  json j = {{"avg_revenue_per_round", result.avg_revenue_per_round},
            {"purchase_rate", result.purchase_rate},
            {"stderr", result.std_error}};
  if (result.avg_belief_error) j["avg_belief_error"] = *result.avg_belief_error;
  if (result.std_error_belief_error) {
    j["stderr_belief_error"] = *result.std_error_belief_error;
  }
  if (result.revenue_trajectory) {
    j["revenue_trajectory"] = *result.revenue_trajectory;
  }
  if (result.avg_displayed_rating_trajectory) {
    j["avg_displayed_rating_trajectory"] = *result.avg_displayed_rating_trajectory;
  }
  return j;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header)
    : os_(os) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    os_ << (i ? "," : "") << header[i];
  }
  os_ << "\n";
}

void CsvWriter::row(const std::vector<double>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    os_ << (i ? "," : "") << format_number(cells[i]);
  }
  os_ << "\n";
}

}  // namespace conflab::io
