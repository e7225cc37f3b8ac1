#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "conflab/analytics.hpp"
#include "conflab/kernels.hpp"
#include "conflab/markov.hpp"

using namespace conflab;

namespace {

Instance example_e1() {
  return make_instance(0.5, ValuationDistribution::uniform(0.0, 1.0), 1,
                       Estimator::beta_mean(1.0, 1.0));
}

// The c-sweep family: F = U[-1,1], prior (mu, 1-mu), price 1.
Instance fan_out_family(double mu, int c) {
  return make_instance(mu, ValuationDistribution::uniform(-1.0, 1.0), c,
                       Estimator::beta_mean(mu, 1.0 - mu));
}

struct RandomInstanceGen {
  std::mt19937_64 rng;
  explicit RandomInstanceGen(std::uint64_t seed) : rng(seed) {}

  Instance instance(int max_c = 5) {
    std::uniform_real_distribution<double> mu_dist(0.08, 0.92);
    std::uniform_real_distribution<double> ab_dist(0.2, 3.0);
    const int c = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_c));
    return make_instance(mu_dist(rng), ValuationDistribution::uniform(0.0, 1.0),
                         c, Estimator::beta_mean(ab_dist(rng), ab_dist(rng)));
  }

  // A price passing both parts of the fixed-price assumption.
  double good_price(const Instance& inst) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (;;) {
      const double lo = inst.h(0);
      const double hi = 1.0 + inst.h(inst.c);
      const double p = lo + unit(rng) * (hi - lo);
      const auto rep = validate_price(inst, p);
      if (rep.non_absorbing && rep.non_degenerate) return p;
    }
  }
};

}  // namespace

TEST_CASE("static revenue closed forms on the worked instance") {
  const Instance e1 = example_e1();
  CHECK(rev_random_static(e1, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rev_newest_static(e1, 1.0) ==
        doctest::Approx(4.0 / 9.0).epsilon(1e-14));
  CHECK_THROWS_AS(rev_newest_static(e1, 2.0), AbsorbingPrice);
  CHECK(rev_random_static(e1, 2.0) == 0.0);
}

TEST_CASE("fan-out family: revenue under the i.i.d. ordering is constant in c") {
  for (double mu : {0.1, 0.5}) {
    for (int c : {1, 2, 7, 25}) {
      CHECK(rev_random_static(fan_out_family(mu, c), 1.0) ==
            doctest::Approx(mu / 2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("newest revenue equals the stationary-weighted sales") {
  const Instance e1 = example_e1();
  const auto chain = build_newest_chain(e1, PricingPolicy::static_price_of(1.0));
  const auto pi = stationary_solve(chain);
  double rev = 0.0;
  for (int s = 0; s < chain.size(); ++s) {
    const int n = std::popcount(static_cast<std::uint64_t>(s));
    rev += pi.probs(s) * 1.0 * purchase_prob(e1, n, 1.0);
  }
  CHECK(std::abs(rev - rev_newest_static(e1, 1.0)) < 1e-10);
}

TEST_CASE("constant estimator collapses the two orderings") {
  const Instance flat =
      make_instance(0.4, ValuationDistribution::uniform(0.0, 1.0), 3,
                    Estimator::table({0.5, 0.5, 0.5, 0.5}));
  for (double p : {0.3, 0.8, 1.2}) {
    CHECK(rev_newest_static(flat, p) ==
          doctest::Approx(rev_random_static(flat, p)).epsilon(1e-12));
  }
  const auto report = conf_static(flat, 0.8);
  CHECK(report.chi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(report.non_degenerate);
}

TEST_CASE("CoNF report on the worked instance") {
  const auto report = conf_static(example_e1(), 1.0);
  CHECK(report.chi == doctest::Approx(9.0 / 8.0).epsilon(1e-12));
  CHECK(report.beta == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(report.non_degenerate);
  CHECK(report.rev_random == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(report.rev_newest == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("a nearly stuck state drives the CoNF above its product floor") {
  // q(0) = 0.01, q(1) = 0.5 via a table estimator.
  const Instance stuck =
      make_instance(0.5, ValuationDistribution::uniform(0.0, 1.0), 1,
                    Estimator::table({0.01, 0.5}));
  const auto report = conf_static(stuck, 1.0);
  const double beta = 0.5 / 0.01;
  CHECK(report.beta == doctest::Approx(beta).epsilon(1e-12));
  CHECK(report.chi >= 0.25 * beta);  // mu^c (1-mu)^c beta
  CHECK(report.chi <= report.beta + 1e-12);
}

TEST_CASE("Jensen gap: endogenous ordering always loses under a fixed price") {
  RandomInstanceGen gen(61);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = gen.instance();
    const double price = gen.good_price(inst);
    CHECK(rev_random_static(inst, price) > rev_newest_static(inst, price));
    const auto report = conf_static(inst, price);
    CHECK(report.chi > 1.0);
    CHECK(report.chi <= report.beta + 1e-10);
  }
}

TEST_CASE("CoNF is non-decreasing in price for MHR valuation laws") {
  const Instance wide =
      make_instance(0.5, ValuationDistribution::uniform(0.0, 2.0), 1,
                    Estimator::beta_mean(1.0, 1.0));
  double last = 0.0;
  bool first = true;
  // Prices inside (lo + h(c), hi + h(0)).
  for (double p = 0.7; p < 2.32; p += 0.04) {
    const auto rep = validate_price(wide, p);
    if (!rep.non_absorbing) break;
    const double chi = conf_static(wide, p).chi;
    if (!first) CHECK(chi >= last - 1e-9);
    last = chi;
    first = false;
  }

  const Instance expo =
      make_instance(0.5, ValuationDistribution::exponential(1.0), 1,
                    Estimator::beta_mean(1.0, 1.0));
  last = 0.0;
  first = true;
  for (double p = expo.h(1) + 0.01; p < expo.h(0) + 5.0; p += 0.1) {
    const double chi = conf_static(expo, p).chi;
    if (!first) CHECK(chi >= last - 1e-9);
    last = chi;
    first = false;
  }
}

TEST_CASE("CoNF fades as attention grows when sales never stall") {
  // Purchase probability is bounded below by survival(0.5) = 0.25 for all c.
  const auto chi_at = [](int c) {
    const Instance inst =
        make_instance(0.5, ValuationDistribution::uniform(-1.0, 1.0), c,
                      Estimator::beta_mean(1.0, 1.0));
    return conf_static(inst, 0.5).chi;
  };
  CHECK(std::abs(chi_at(200) - 1.0) < std::abs(chi_at(10) - 1.0));
  CHECK(std::abs(chi_at(200) - 1.0) < 5e-3);  // gap shrinks like 1/c
}

TEST_CASE("closed forms are identical under both kernel backends") {
  if (!kernels::avx2_supported()) return;
  RandomInstanceGen gen(59);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance inst = gen.instance(8);
    const double price = gen.good_price(inst);
    kernels::force_backend(kernels::Backend::Scalar);
    const ConfReport scalar = conf_static(inst, price);
    const double hb_scalar = hbar(inst);
    kernels::force_backend(kernels::Backend::Avx2);
    const ConfReport avx2 = conf_static(inst, price);
    const double hb_avx2 = hbar(inst);
    kernels::reset_backend();
    CHECK(scalar.rev_random == avx2.rev_random);
    CHECK(scalar.rev_newest == avx2.rev_newest);
    CHECK(scalar.chi == avx2.chi);
    CHECK(hb_scalar == hb_avx2);
  }
}

TEST_CASE("stationary counts under the endogenous ordering") {
  const auto pi1 = stationary_newest_counts(example_e1(), 1.0);
  CHECK(pi1[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(pi1[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  // c = 2 with h(n) = (1+n)/4: purchase probs (1/4, 1/2, 3/4).
  const Instance quarter =
      make_instance(0.5, ValuationDistribution::uniform(0.0, 1.0), 2,
                    Estimator::beta_mean(1.0, 1.0));
  const auto pi2 = stationary_newest_counts(quarter, 1.0);
  CHECK(pi2[0] == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
  CHECK(pi2[1] == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
  CHECK(pi2[2] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));

  // Cross-check against the chain solve.
  const auto chain =
      build_newest_chain(quarter, PricingPolicy::static_price_of(1.0));
  const auto solved = stationary_solve(chain);
  std::vector<double> by_count(3, 0.0);
  for (int s = 0; s < 4; ++s) {
    by_count[static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(s)))] +=
        solved.probs(s);
  }
  for (int n = 0; n <= 2; ++n) {
    CHECK(by_count[static_cast<std::size_t>(n)] ==
          doctest::Approx(pi2[static_cast<std::size_t>(n)]).epsilon(1e-10));
  }

  const Instance flat =
      make_instance(0.3, ValuationDistribution::uniform(0.0, 1.0), 2,
                    Estimator::table({0.5, 0.5, 0.5}));
  const auto pi3 = stationary_newest_counts(flat, 0.9);
  CHECK(pi3[0] == doctest::Approx(0.49).epsilon(1e-12));
  CHECK(pi3[1] == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(pi3[2] == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("count-based analytics scale to ten thousand reviews") {
  const Instance big =
      make_instance(0.5, ValuationDistribution::uniform(-1.0, 1.0), 10000,
                    Estimator::beta_mean(1.0, 1.0));
  const double rr = rev_random_static(big, 0.5);
  const double rn = rev_newest_static(big, 0.5);
  CHECK(rr > rn);
  // At this depth the posterior pins the estimate near mu, so both revenues
  // sit next to the known-quality value and the CoNF is gone.
  CHECK(std::abs(rr - rev_known_quality(big, 0.5)) < 1e-3);
  const auto report = conf_static(big, 0.5);
  CHECK(report.chi == doctest::Approx(rr / rn).epsilon(1e-10));
  CHECK(report.chi < 1.0 + 1e-4);

  const auto pi = stationary_newest_counts(big, 0.5);
  CHECK(pi.size() == 10001);
  double total = 0.0;
  for (double v : pi) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("displayed positives: endogenous ordering shows fewer") {
  const Instance e1 = example_e1();
  CHECK(expected_positive_reviews(e1, 1.0, Ordering::Newest) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(expected_positive_reviews(e1, 1.0, Ordering::Random) ==
        doctest::Approx(0.5).epsilon(1e-14));

  const Instance flat =
      make_instance(0.4, ValuationDistribution::uniform(0.0, 1.0), 2,
                    Estimator::table({0.3, 0.3, 0.3}));
  CHECK(expected_positive_reviews(flat, 0.5, Ordering::Newest) ==
        doctest::Approx(0.8).epsilon(1e-12));

  RandomInstanceGen gen(67);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance inst = gen.instance();
    const double price = gen.good_price(inst);
    CHECK(expected_positive_reviews(inst, price, Ordering::Newest) <
          expected_positive_reviews(inst, price, Ordering::Random));
  }
}

TEST_CASE("dynamic-revenue formulas") {
  const Instance e1 = example_e1();

  SUBCASE("static policies specialize") {
    const auto fixed = PricingPolicy::static_price_of(1.0);
    CHECK(rev_newest_dynamic(e1, fixed) ==
          doctest::Approx(rev_newest_static(e1, 1.0)).epsilon(1e-14));
    CHECK(rev_random_dynamic(e1, fixed) ==
          doctest::Approx(rev_random_static(e1, 1.0)).epsilon(1e-14));
  }

  SUBCASE("offsetting prices on the worked instance") {
    const auto policy =
        PricingPolicy::count_table({7.0 / 12.0, 11.0 / 12.0});
    CHECK(rev_newest_dynamic(e1, policy) ==
          doctest::Approx(0.5625).epsilon(1e-14));
    // Equal purchase probabilities make both orderings earn the same.
    CHECK(rev_random_dynamic(e1, policy) ==
          doctest::Approx(0.5625).epsilon(1e-14));
  }

  SUBCASE("per-count optimal prices under the i.i.d. ordering") {
    const auto policy = PricingPolicy::count_table({2.0 / 3.0, 5.0 / 6.0});
    CHECK(rev_random_dynamic(e1, policy) ==
          doctest::Approx(41.0 / 72.0).epsilon(1e-14));
  }

  SUBCASE("arbitrary policy against the chain-solve oracle") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> price_dist(0.4, 1.2);
    for (int trial = 0; trial < 20; ++trial) {
      const auto policy =
          PricingPolicy::count_table({price_dist(rng), price_dist(rng)});
      const auto chain = build_newest_chain(e1, policy);
      const auto pi = stationary_solve(chain);
      double rev = 0.0;
      for (int s = 0; s < 2; ++s) {
        const double price = policy.price_for_count(s);
        rev += pi.probs(s) * price * purchase_prob(e1, s, price);
      }
      CHECK(std::abs(rev - rev_newest_dynamic(e1, policy)) < 1e-10);
    }
  }

  SUBCASE("state tables agree with count tables when prices depend on n") {
    const Instance two =
        make_instance(0.5, ValuationDistribution::uniform(0.0, 1.0), 2,
                      Estimator::beta_mean(1.0, 1.0));
    const auto counts = PricingPolicy::count_table({0.6, 0.8, 1.0});
    std::unordered_map<std::uint64_t, double> sp;
    for (std::uint64_t s = 0; s < 4; ++s) {
      sp[s] = counts.price_for_count(std::popcount(s));
    }
    const auto states = PricingPolicy::state_table(sp);
    CHECK(rev_newest_dynamic(two, states) ==
          doctest::Approx(rev_newest_dynamic(two, counts)).epsilon(1e-14));
    CHECK(rev_random_dynamic(two, states) ==
          doctest::Approx(rev_random_dynamic(two, counts)).epsilon(1e-14));
  }

  SUBCASE("review-offsetting revenue identity across random offsets") {
    RandomInstanceGen gen(73);
    std::uniform_real_distribution<double> offset_dist(0.05, 0.8);
    for (int trial = 0; trial < 40; ++trial) {
      const Instance inst = gen.instance(4);
      const double offset = offset_dist(gen.rng);
      std::vector<double> prices(static_cast<std::size_t>(inst.c) + 1);
      for (int n = 0; n <= inst.c; ++n) {
        prices[static_cast<std::size_t>(n)] = inst.h(n) + offset;
      }
      const double rev =
          rev_newest_dynamic(inst, PricingPolicy::count_table(prices));
      const double expect =
          (offset + hbar(inst)) * survival(inst.dist, offset);
      CHECK(rev == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  SUBCASE("absorbing policies raise") {
    CHECK_THROWS_AS(
        rev_newest_dynamic(e1, PricingPolicy::count_table({2.5, 0.9})),
        AbsorbingState);
  }
}

TEST_CASE("known-quality benchmark") {
  const Instance e1 = example_e1();
  CHECK(rev_known_quality(e1, 1.0) == doctest::Approx(0.5).epsilon(1e-14));

  // With the mean estimator and a correct prior, the best known-quality
  // revenue equals the best dynamic revenue under the endogenous ordering.
  const Instance correct =
      make_instance(0.3, ValuationDistribution::uniform(0.0, 1.0), 2,
                    Estimator::beta_mean(0.3, 0.7));
  const auto best_known = myerson(correct.dist, correct.mu);
  CHECK(hbar(correct) == doctest::Approx(0.3).epsilon(1e-14));
  // r*(Theta + hbar) with hbar = mu is exactly the same quantity.
  CHECK(best_known.revenue ==
        doctest::Approx(myerson(correct.dist, hbar(correct)).revenue)
            .epsilon(1e-12));

  // Bernoulli-valuation instance: ratio of newest revenue at p = h(1) to the
  // known-quality revenue is 1 / (1 - mu + mu q).
  const double mu = 0.6, q = 0.35;
  const double a = mu, b = 1.0 - mu;  // correct prior
  const Instance bern = make_instance(
      mu, ValuationDistribution::bernoulli(q), 1, Estimator::beta_mean(a, b));
  const double p = bern.h(1);
  const double ratio = rev_newest_static(bern, p) / rev_known_quality(bern, p);
  CHECK(ratio == doctest::Approx(1.0 / (1.0 - mu + mu * q)).epsilon(1e-12));
}

TEST_CASE("window-random revenue") {
  const Instance e1 = example_e1();

  SUBCASE("window c is the endogenous ordering") {
    CHECK(window_revenue(e1, 1, 1.0) ==
          doctest::Approx(rev_newest_static(e1, 1.0)).epsilon(1e-14));
  }

  SUBCASE("worked inverse rates and revenue at w = 2") {
    const auto iota = window_inverse_rates(e1, 2, 1.0);
    REQUIRE(iota.size() == 3);
    CHECK(iota[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(iota[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(iota[2] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(window_revenue(e1, 2, 1.0) ==
          doctest::Approx(8.0 / 17.0).epsilon(1e-12));
  }

  SUBCASE("monotone in the window and converging to the i.i.d. revenue") {
    double last = 0.0;
    for (int w = 1; w <= 2048; w *= 2) {
      const double rev = window_revenue(e1, w, 1.0);
      CHECK(rev > last);
      last = rev;
      CHECK(rev < rev_random_static(e1, 1.0));
    }
    CHECK(std::abs(last - 0.5) < 1e-3);
  }

  SUBCASE("chain solve agreement for small windows") {
    for (int w = 1; w <= 8; ++w) {
      const auto chain = build_window_chain(e1, w, 1.0);
      const auto pi = stationary_solve(chain);
      const auto iota = window_inverse_rates(e1, w, 1.0);
      double rev = 0.0;
      for (int s = 0; s < chain.size(); ++s) {
        const int k = std::popcount(static_cast<std::uint64_t>(s));
        rev += pi.probs(s) / iota[static_cast<std::size_t>(k)];
      }
      CHECK(std::abs(rev - window_revenue(e1, w, 1.0)) < 1e-9);
    }
  }

  SUBCASE("absorbing and misuse errors") {
    CHECK_THROWS_AS(window_revenue(e1, 4, 2.0), AbsorbingPrice);
    CHECK_THROWS_AS(window_revenue(e1, 0, 1.0), InvalidParams);
  }
}

TEST_CASE("two-point quality steady state") {
  const Instance calibrated =
      make_instance(0.5, ValuationDistribution::uniform(0.0, 1.0), 1,
                    Estimator::table({0.25, 0.75}));

  SUBCASE("worked values") {
    const auto r = ns_steady(0.25, 0.75, 0.5, 1.0, calibrated);
    CHECK(r.pi[2] == doctest::Approx(0.4921875 / 1.46875).epsilon(1e-12));
    CHECK(r.belief_error_random() == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(r.belief_error_newest() ==
          doctest::Approx(0.125 - 2.0 * 0.75 * 0.25 * std::pow(0.5, 3) * 0.5 / 1.46875)
              .epsilon(1e-12));
    CHECK(r.belief_error_newest() == doctest::Approx(0.109043).epsilon(1e-5));
    CHECK(r.rev_newest < r.rev_random);
    CHECK(r.rev_random == doctest::Approx(0.5).epsilon(1e-14));
  }

  SUBCASE("closed form matches the chain solve across the switching grid") {
    for (int i = 1; i <= 10; ++i) {
      const double xi = i / 10.0;
      const auto r = ns_steady(0.25, 0.75, xi, 1.0, calibrated);
      const auto chain =
          build_nonstationary_chain(0.25, 0.75, xi, 1.0, calibrated);
      const auto pi = stationary_solve(chain);
      for (int s = 0; s < 4; ++s) {
        CHECK(std::abs(pi.probs(s) - r.pi[static_cast<std::size_t>(s)]) < 1e-9);
      }
      CHECK(r.pi[0] + r.pi[1] == doctest::Approx(0.5).epsilon(1e-12));
      if (xi < 1.0) {
        CHECK(r.belief_error_newest() < r.belief_error_random());
        CHECK(r.rev_newest < r.rev_random);
      }
    }
  }

  SUBCASE("full mixing removes the tracking advantage") {
    const auto r = ns_steady(0.25, 0.75, 1.0, 1.0, calibrated);
    CHECK(r.belief_error_newest() ==
          doctest::Approx(r.belief_error_random()).epsilon(1e-14));
  }

  SUBCASE("uncalibrated estimators expose no belief error") {
    const Instance off =
        make_instance(0.5, ValuationDistribution::uniform(0.0, 1.0), 1,
                      Estimator::beta_mean(1.0, 1.0));
    const auto r = ns_steady(0.25, 0.75, 0.5, 1.0, off);
    CHECK_FALSE(r.belief_error_newest_opt.has_value());
    CHECK_THROWS_AS(r.belief_error_newest(), NotCalibrated);
    CHECK(r.rev_newest > 0.0);
  }

  SUBCASE("degenerate prices are rejected") {
    const Instance flat =
        make_instance(0.5, ValuationDistribution::uniform(0.0, 1.0), 1,
                      Estimator::table({0.5, 0.5}));
    CHECK_THROWS_AS(ns_steady(0.25, 0.75, 0.5, 1.0, flat), InvalidParams);
  }
}
