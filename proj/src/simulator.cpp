#include "conflab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "conflab/kernels.hpp"
#include "conflab/parallel.hpp"

namespace conflab {

SimVariant SimVariant::time_varying_prior(double gamma) {
  SimVariant v;
  v.kind = Kind::TimeVaryingPrior;
  v.gamma = gamma;
  return v;
}

SimVariant SimVariant::increasing_quality(double mu_lo, double mu_hi) {
  SimVariant v;
  v.kind = Kind::IncreasingQuality;
  v.mu_lo = mu_lo;
  v.mu_hi = mu_hi;
  return v;
}

SimVariant SimVariant::markov_quality(double mu_lo, double mu_hi, double xi) {
  SimVariant v;
  v.kind = Kind::MarkovQuality;
  v.mu_lo = mu_lo;
  v.mu_hi = mu_hi;
  v.xi = xi;
  return v;
}

SimVariant SimVariant::coarse_ratings() {
  SimVariant v;
  v.kind = Kind::CoarseRatings;
  return v;
}

namespace {

using Kind = SimVariant::Kind;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// All draws are keyed by (seed, replication, round, draw index, domain).
// Domain 0 is the per-round stream, domain 1 the initial review pool,
// domain 2 one-off state such as the starting quality level.
struct RepRng {
  kernels::PhiloxKey key;

  RepRng(std::uint64_t seed, int rep) {
    const std::uint64_t mixed =
        splitmix64(seed ^ splitmix64(0xC0F1AB5Eull + static_cast<std::uint64_t>(rep)));
    key = kernels::PhiloxKey{static_cast<std::uint32_t>(mixed),
                             static_cast<std::uint32_t>(mixed >> 32)};
  }

  kernels::PhiloxCtr ctr(std::uint64_t round, std::uint32_t idx,
                         std::uint32_t domain) const {
    return kernels::PhiloxCtr{static_cast<std::uint32_t>(round),
                              static_cast<std::uint32_t>(round >> 32), idx,
                              domain};
  }

  double unit(std::uint64_t round, std::uint32_t idx, std::uint32_t domain) const {
    return kernels::block_to_unit_double(kernels::philox4x32(key, ctr(round, idx, domain)));
  }
};

// Per-round draw slots (fixed indices so variants sharing semantics see the
// same values): 0 theta, 1 fresh rating, 2 quality flip, 4+j display picks.
constexpr std::uint32_t kIdxTheta = 0;
constexpr std::uint32_t kIdxRating = 1;
constexpr std::uint32_t kIdxFlip = 2;
constexpr std::uint32_t kIdxPick0 = 4;

// Pre-generates the per-round draws for a chunk of rounds in one batched
// Philox pass.
struct DrawChunk {
  static constexpr std::int64_t kChunkRounds = 4096;

  const RepRng& rng;
  std::vector<std::uint32_t> idxs;  // slot -> draw index
  std::vector<kernels::PhiloxCtr> ctrs;
  std::vector<kernels::PhiloxBlock> blocks;
  std::int64_t begin = 0;
  std::int64_t len = 0;

  DrawChunk(const RepRng& r, bool need_flip, int n_picks) : rng(r) {
    idxs = {kIdxTheta, kIdxRating};
    if (need_flip) idxs.push_back(kIdxFlip);
    for (int j = 0; j < n_picks; ++j) {
      idxs.push_back(kIdxPick0 + static_cast<std::uint32_t>(j));
    }
    ctrs.resize(static_cast<std::size_t>(kChunkRounds) * idxs.size());
    blocks.resize(ctrs.size());
  }

  void fill(std::int64_t round_begin, std::int64_t n_rounds) {
    begin = round_begin;
    len = n_rounds;
    const std::size_t slots = idxs.size();
    for (std::int64_t r = 0; r < n_rounds; ++r) {
      const std::uint64_t round = static_cast<std::uint64_t>(round_begin + r);
      for (std::size_t s = 0; s < slots; ++s) {
        ctrs[static_cast<std::size_t>(r) * slots + s] = rng.ctr(round, idxs[s], 0);
      }
    }
    kernels::philox_many(rng.key, ctrs.data(), blocks.data(),
                         static_cast<std::size_t>(n_rounds) * slots);
  }

  double unit(std::int64_t round, std::size_t slot) const {
    const std::size_t at =
        static_cast<std::size_t>(round - begin) * idxs.size() + slot;
    return kernels::block_to_unit_double(blocks[at]);
  }
};

struct RepOutcome {
  double mean_revenue = 0.0;
  double purchase_rate = 0.0;
  double mean_belief_error = 0.0;
};

struct Trajectories {
  std::vector<double> revenue;
  std::vector<double> rating;
};

void validate_config(const SimConfig& cfg) {
  if (cfg.rounds < 1) throw ConfigInvalid("rounds must be >= 1");
  if (cfg.replications < 1) throw ConfigInvalid("replications must be >= 1");
  try {
    validate_policy(cfg.pricing, cfg.inst.c);
  } catch (const Error& e) {
    throw ConfigInvalid(std::string("pricing: ") + e.what());
  }
  if (cfg.ordering == SimOrdering::Window && cfg.window_w < cfg.inst.c) {
    throw ConfigInvalid("window must be at least c");
  }
  switch (cfg.variant.kind) {
    case Kind::Baseline:
      break;
    case Kind::TimeVaryingPrior:
      if (!(cfg.variant.gamma >= 0)) throw ConfigInvalid("gamma must be >= 0");
      if (cfg.inst.estimator.kind == Estimator::Kind::Table) {
        throw ConfigInvalid("time-varying prior needs a Beta estimator");
      }
      break;
    case Kind::IncreasingQuality:
      if (!(cfg.variant.mu_lo > 0 && cfg.variant.mu_lo <= cfg.variant.mu_hi &&
            cfg.variant.mu_hi < 1)) {
        throw ConfigInvalid("need 0 < mu_lo <= mu_hi < 1");
      }
      break;
    case Kind::MarkovQuality:
      if (cfg.inst.c != 1) throw ConfigInvalid("two-point quality needs c = 1");
      if (!(cfg.variant.mu_lo > 0 && cfg.variant.mu_lo < cfg.variant.mu_hi &&
            cfg.variant.mu_hi < 1)) {
        throw ConfigInvalid("need 0 < mu_lo < mu_hi < 1");
      }
      if (!(cfg.variant.xi > 0 && cfg.variant.xi <= 1)) {
        throw ConfigInvalid("xi must lie in (0,1]");
      }
      break;
    case Kind::CoarseRatings:
      if (cfg.inst.c != 1) throw ConfigInvalid("coarse ratings needs c = 1");
      if (cfg.ordering != SimOrdering::Newest &&
          cfg.ordering != SimOrdering::RandomFinitePool) {
        throw ConfigInvalid(
            "coarse ratings supports newest or random_finite_pool ordering");
      }
      break;
  }
}

RepOutcome run_replication(const SimConfig& cfg, int rep, std::int64_t burn_in,
                           const std::vector<double>& h_table,
                           Trajectories* traj) {
  const Instance& inst = cfg.inst;
  const int c = inst.c;
  const Kind kind = cfg.variant.kind;
  const bool coarse = kind == Kind::CoarseRatings;
  const bool markov = kind == Kind::MarkovQuality;
  const bool tvp = kind == Kind::TimeVaryingPrior;
  const bool state_pricing = cfg.pricing.depends_on_state_bits();
  const RepRng rng(cfg.seed, rep);

  // Current quality (two-point model starts at a fair coin flip).
  int quality_level = 0;
  double mu_cur = inst.mu;
  if (markov) {
    quality_level = rng.unit(0, 0, 2) < 0.5 ? 0 : 1;
    mu_cur = quality_level ? cfg.variant.mu_hi : cfg.variant.mu_lo;
  } else if (kind == Kind::IncreasingQuality) {
    mu_cur = cfg.variant.mu_lo;
  }

  // Seed the review pool. Stationary runs emulate the infinite initial pool
  // (a full display right away); the cold-start variants begin with c. The
  // time-varying prior keeps the pool even under i.i.d. display because its
  // tallies feed the prior.
  const bool uses_pool = cfg.ordering != SimOrdering::RandomIid || tvp;
  int n_seeds = c;
  if (cfg.ordering == SimOrdering::Window && kind != Kind::IncreasingQuality &&
      !tvp) {
    n_seeds = std::max(c, cfg.window_w);
  }
  std::vector<std::uint8_t> pool;
  std::vector<double> pool_values;  // coarse ratings only
  double tally_pos = 0.0, tally_neg = 0.0;
  int recent_count = 0;  // positives among the last c pool entries
  if (uses_pool) {
    pool.reserve(static_cast<std::size_t>(n_seeds + cfg.rounds));
    if (coarse) pool_values.reserve(pool.capacity());
    for (int k = 0; k < n_seeds; ++k) {
      const std::uint8_t x =
          rng.unit(0, static_cast<std::uint32_t>(k), 1) < mu_cur ? 1 : 0;
      pool.push_back(x);
      if (coarse) {
        const double theta_s = sample_from_uniform(
            inst.dist,
            rng.unit(0, static_cast<std::uint32_t>(n_seeds + k), 1));
        pool_values.push_back(theta_s + x);
      }
      tally_pos += x;
      tally_neg += 1 - x;
      if (k >= n_seeds - c) recent_count += x;
    }
  }

  const int n_picks =
      (cfg.ordering == SimOrdering::RandomIid ||
       cfg.ordering == SimOrdering::RandomFinitePool ||
       cfg.ordering == SimOrdering::Window)
          ? c
          : 0;
  DrawChunk drws(rng, markov, n_picks);

  const double mu_mid = 0.5 * (cfg.variant.mu_lo + cfg.variant.mu_hi);
  const double mu_step =
      (kind == Kind::IncreasingQuality && cfg.rounds > 1)
          ? (cfg.variant.mu_hi - cfg.variant.mu_lo) / static_cast<double>(cfg.rounds - 1)
          : 0.0;

  std::vector<int> picked(static_cast<std::size_t>(c));
  std::vector<std::pair<int, int>> swap_map;  // virtual Fisher-Yates
  swap_map.reserve(static_cast<std::size_t>(c));

  double revenue_sum = 0.0;
  std::int64_t purchases = 0;
  double belief_err_sum = 0.0;
  const std::int64_t counted_rounds = cfg.rounds - burn_in;

  for (std::int64_t t = 0; t < cfg.rounds; ++t) {
    if (t >= drws.begin + drws.len) {
      drws.fill(t, std::min<std::int64_t>(DrawChunk::kChunkRounds, cfg.rounds - t));
    }
    std::size_t slot = 0;
    const double u_theta = drws.unit(t, slot++);
    const double u_rating = drws.unit(t, slot++);
    const double u_flip = markov ? drws.unit(t, slot++) : 0.0;

    // Form the displayed reviews.
    int n_shown = 0;
    double coarse_value = 0.0;
    std::uint64_t state_idx = 0;
    switch (cfg.ordering) {
      case SimOrdering::Newest: {
        n_shown = recent_count;
        if (state_pricing) {
          const std::size_t m = pool.size();
          for (int i = 0; i < c; ++i) {
            if (pool[m - 1 - static_cast<std::size_t>(i)]) {
              state_idx |= (std::uint64_t{1} << i);
            }
          }
        }
        if (coarse) coarse_value = pool_values.back();
        break;
      }
      case SimOrdering::RandomIid: {
        const double mu_display = markov ? mu_mid : mu_cur;
        for (int j = 0; j < c; ++j) {
          const bool pos = drws.unit(t, slot + static_cast<std::size_t>(j)) < mu_display;
          n_shown += pos;
          if (state_pricing && pos) state_idx |= (std::uint64_t{1} << j);
        }
        break;
      }
      case SimOrdering::RandomFinitePool:
      case SimOrdering::Window: {
        const int m_total = static_cast<int>(pool.size());
        const int m_eff = cfg.ordering == SimOrdering::Window
                              ? std::min(cfg.window_w, m_total)
                              : m_total;
        const int base = m_total - m_eff;
        // c distinct picks from the window via virtual Fisher-Yates. The
        // most recent remap of a position wins.
        swap_map.clear();
        const auto lookup = [&](int i) {
          for (auto it = swap_map.rbegin(); it != swap_map.rend(); ++it) {
            if (it->first == i) return it->second;
          }
          return i;
        };
        for (int j = 0; j < c; ++j) {
          const double u = drws.unit(t, slot + static_cast<std::size_t>(j));
          int r = static_cast<int>(u * static_cast<double>(m_eff - j));
          r = std::min(r, m_eff - j - 1);
          const int chosen = lookup(r);
          const int tail = lookup(m_eff - j - 1);
          swap_map.emplace_back(r, tail);
          picked[static_cast<std::size_t>(j)] = base + chosen;
        }
        // Most recent first for the state encoding.
        std::sort(picked.begin(), picked.end(), std::greater<int>());
        for (int j = 0; j < c; ++j) {
          const std::uint8_t bit = pool[static_cast<std::size_t>(picked[static_cast<std::size_t>(j)])];
          n_shown += bit;
          if (state_pricing && bit) state_idx |= (std::uint64_t{1} << j);
        }
        if (coarse) coarse_value = pool_values[static_cast<std::size_t>(picked[0])];
        break;
      }
    }

    // Belief and price.
    double belief;
    if (coarse) {
      belief = coarse_value;
    } else if (tvp) {
      const double a_t = inst.estimator.a + cfg.variant.gamma * tally_pos;
      const double b_t = inst.estimator.b + cfg.variant.gamma * tally_neg;
      belief = inst.estimator.kind == Estimator::Kind::BetaMean
                   ? (a_t + n_shown) / (a_t + b_t + c)
                   : estimate_with_prior(inst.estimator, n_shown, c, a_t, b_t);
    } else {
      belief = h_table[static_cast<std::size_t>(n_shown)];
    }
    const double price = state_pricing
                             ? cfg.pricing.price_for_state(state_idx, n_shown)
                             : cfg.pricing.price_for_count(n_shown);

    const double theta = sample_from_uniform(inst.dist, u_theta);
    const bool bought = coarse ? theta + belief > price : theta + belief >= price;

    if (bought) {
      const std::uint8_t x = u_rating < mu_cur ? 1 : 0;
      if (uses_pool) {
        const std::size_t m = pool.size();
        recent_count += x - pool[m - static_cast<std::size_t>(c)];
        pool.push_back(x);
        if (coarse) pool_values.push_back(theta + x);
      }
      tally_pos += x;
      tally_neg += 1 - x;
    }

    if (markov) {
      if (t >= burn_in) {
        const double err = h_table[static_cast<std::size_t>(n_shown)] - mu_cur;
        belief_err_sum += err * err;
      }
      if (u_flip < cfg.variant.xi / 2.0) {
        quality_level ^= 1;
        mu_cur = quality_level ? cfg.variant.mu_hi : cfg.variant.mu_lo;
      }
    } else if (kind == Kind::IncreasingQuality) {
      mu_cur += mu_step;
    }

    const double round_rev = bought ? price : 0.0;
    if (t >= burn_in) {
      revenue_sum += round_rev;
      purchases += bought;
    }
    if (traj != nullptr) {
      traj->revenue[static_cast<std::size_t>(t)] += round_rev;
      traj->rating[static_cast<std::size_t>(t)] +=
          static_cast<double>(n_shown) / static_cast<double>(c);
    }
  }

  RepOutcome out;
  out.mean_revenue = revenue_sum / static_cast<double>(counted_rounds);
  out.purchase_rate =
      static_cast<double>(purchases) / static_cast<double>(counted_rounds);
  out.mean_belief_error = belief_err_sum / static_cast<double>(counted_rounds);
  return out;
}

}  // namespace

std::int64_t default_burn_in(const SimConfig& config) {
  switch (config.variant.kind) {
    case Kind::TimeVaryingPrior:
    case Kind::IncreasingQuality:
      return 0;  // the transient is the object of study
    default:
      break;
  }
  const int c_eff = std::min(config.inst.c, 20);
  const std::int64_t scale = std::max<std::int64_t>(
      10000, 100 * (std::int64_t{1} << c_eff));
  return std::min(scale, config.rounds / 2);
}

SimResult run(const SimConfig& config) {
  validate_config(config);
  const std::int64_t burn_in =
      config.burn_in_override ? std::max<std::int64_t>(0, *config.burn_in_override)
                              : default_burn_in(config);
  if (burn_in >= config.rounds) {
    throw ConfigInvalid("burn-in must leave at least one counted round");
  }

  std::vector<double> h_table(static_cast<std::size_t>(config.inst.c) + 1);
  if (config.variant.kind != Kind::CoarseRatings) {
    for (int n = 0; n <= config.inst.c; ++n) {
      h_table[static_cast<std::size_t>(n)] = config.inst.h(n);
    }
  } else {
    // The coarse model reads the review value directly; keep the table for
    // the rating trajectory only.
    for (int n = 0; n <= config.inst.c; ++n) {
      h_table[static_cast<std::size_t>(n)] = static_cast<double>(n);
    }
  }

  const int reps = config.replications;
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));

  Trajectories traj;
  if (config.record_trajectories) {
    traj.revenue.assign(static_cast<std::size_t>(config.rounds), 0.0);
    traj.rating.assign(static_cast<std::size_t>(config.rounds), 0.0);
    // Serial accumulation keeps the output independent of scheduling.
    for (int r = 0; r < reps; ++r) {
      outcomes[static_cast<std::size_t>(r)] =
          run_replication(config, r, burn_in, h_table, &traj);
    }
  } else {
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
      outcomes[r] =
          run_replication(config, static_cast<int>(r), burn_in, h_table, nullptr);
    });
  }

  SimResult result;
  double mean = 0.0, mean_rate = 0.0, mean_err = 0.0;
  for (const auto& o : outcomes) {
    mean += o.mean_revenue;
    mean_rate += o.purchase_rate;
    mean_err += o.mean_belief_error;
  }
  mean /= reps;
  mean_rate /= reps;
  mean_err /= reps;
  result.avg_revenue_per_round = mean;
  result.purchase_rate = mean_rate;
  if (config.variant.kind == Kind::MarkovQuality) {
    result.avg_belief_error = mean_err;
  }

  if (reps >= 2) {
    double ss = 0.0, ss_err = 0.0;
    for (const auto& o : outcomes) {
      ss += (o.mean_revenue - mean) * (o.mean_revenue - mean);
      ss_err += (o.mean_belief_error - mean_err) * (o.mean_belief_error - mean_err);
    }
    const double root_reps = std::sqrt(static_cast<double>(reps));
    result.std_error = std::sqrt(ss / (reps - 1)) / root_reps;
    if (config.variant.kind == Kind::MarkovQuality) {
      result.std_error_belief_error = std::sqrt(ss_err / (reps - 1)) / root_reps;
    }
  } else {
    result.std_error = std::numeric_limits<double>::quiet_NaN();
  }

  if (config.record_trajectories) {
    for (auto& v : traj.revenue) v /= reps;
    for (auto& v : traj.rating) v /= reps;
    result.revenue_trajectory = std::move(traj.revenue);
    result.avg_displayed_rating_trajectory = std::move(traj.rating);
  }
  return result;
}

}  // namespace conflab
