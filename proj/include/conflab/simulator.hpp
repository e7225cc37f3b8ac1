#pragma once

// Seeded Monte Carlo market simulator. Serves as the independent oracle for
// every closed form and covers the model variants that only exist
// numerically (time-varying prior, increasing quality, coarse ratings).
//
// Reproducibility contract: every random draw is a pure function of
// (seed, replication, round, draw index), generated with Philox4x32-10, so a
// config+seed pair yields a bit-identical result regardless of thread count
// or kernel backend.

#include <cstdint>
#include <optional>
#include <vector>

#include "conflab/model.hpp"

namespace conflab {

enum class SimOrdering { Newest, RandomIid, RandomFinitePool, Window };

struct SimVariant {
  enum class Kind {
    Baseline,
    TimeVaryingPrior,   // prior Beta(a + gamma*P_t, b + gamma*N_t), cold start
    IncreasingQuality,  // mu_t linear from mu_lo to mu_hi over the horizon
    MarkovQuality,      // two-point quality, flips with probability xi/2
    CoarseRatings       // reviews reveal Theta_s + X_s; purchase if > price
  };
  Kind kind = Kind::Baseline;
  double gamma = 0.0;
  double mu_lo = 0.0;
  double mu_hi = 0.0;
  double xi = 0.0;

  static SimVariant baseline() { return {}; }
  static SimVariant time_varying_prior(double gamma);
  static SimVariant increasing_quality(double mu_lo, double mu_hi);
  static SimVariant markov_quality(double mu_lo, double mu_hi, double xi);
  static SimVariant coarse_ratings();
};

struct SimConfig {
  Instance inst;
  SimOrdering ordering = SimOrdering::Newest;
  int window_w = 0;  // Window ordering only
  PricingPolicy pricing;
  std::int64_t rounds = 1;
  int replications = 1;
  std::uint64_t seed = 0;
  SimVariant variant;
  bool record_trajectories = false;
  // Overrides the default burn-in (steady-state variants discard
  // max(1e4, 100*2^c) rounds, capped at half the horizon; trajectory
  // variants discard nothing).
  std::optional<std::int64_t> burn_in_override;
};

struct SimResult {
  double avg_revenue_per_round = 0.0;
  double purchase_rate = 0.0;
  double std_error = 0.0;  // sample std of per-replication means / sqrt(reps)
  std::optional<double> avg_belief_error;        // MarkovQuality only
  std::optional<double> std_error_belief_error;  // MarkovQuality, reps >= 2
  std::optional<std::vector<double>> revenue_trajectory;
  std::optional<std::vector<double>> avg_displayed_rating_trajectory;
};

std::int64_t default_burn_in(const SimConfig& config);

SimResult run(const SimConfig& config);

}  // namespace conflab
