#pragma once

// Finite-chain machinery: explicit chains over review states, the lazy
// stay-with-probability transform, and the dense stationary solver that
// serves as the oracle for every closed form in the analytics module.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conflab/model.hpp"

namespace conflab {

struct FiniteChain {
  std::vector<std::string> states;  // row/column labels
  Eigen::MatrixXd transition;       // row-stochastic, row = from-state

  int size() const { return static_cast<int>(states.size()); }
};

// Throws InvalidParams unless every row sums to 1 within 1e-12 with entries
// in [0,1].
void validate_chain(const FiniteChain& chain);

struct StationaryDist {
  Eigen::VectorXd probs;
};

// Unique pi with pi^T P = pi^T via dense LU. Checks irreducibility (BFS both
// directions on positive edges) and aperiodicity (gcd of level differences);
// throws NotErgodic otherwise.
StationaryDist stationary_solve(const FiniteChain& chain);

// Chains larger than this are rejected; a dense transition matrix and its LU
// factorization both have to fit in memory.
constexpr int kMaxChainStates = 1 << 12;

struct LazifyResult {
  FiniteChain chain;
  // Closed form kappa * pi(s) / f(s) computed from the base chain's
  // stationary distribution.
  StationaryDist stationary;
};

// Move-probability transform: at state s the new chain follows the base
// matrix with probability f(s) and stays put otherwise. f(s) must lie in
// (0,1]; otherwise InvalidStay.
LazifyResult lazify(const FiniteChain& chain, const std::vector<double>& f);

// Newest-First review chain over {0,1}^c; state index bit i = rating of the
// (i+1)-th most recent review. Throws AbsorbingState when some state has no
// purchase probability.
FiniteChain build_newest_chain(const Instance& inst,
                               const PricingPolicy& policy);

// Two-point product-quality model: 4 states (review r, quality mu) ordered
// (0,muL), (1,muL), (0,muH), (1,muH). Per round the review updates first
// (purchase with probability q_r, new rating drawn from the current quality)
// and the quality then flips with probability xi/2.
FiniteChain build_nonstationary_chain(double mu_l, double mu_h, double xi,
                                      double price, const Instance& base);

// Window-random chain over {0,1}^w: the purchase probability at a state with
// k positive ratings averages q(n) over the hypergeometric draw of the c
// displayed reviews.
FiniteChain build_window_chain(const Instance& inst, int w, double price);

// Matrix dump: header row of state labels, then the row-major matrix.
void chain_to_csv(const FiniteChain& chain, std::ostream& os);

}  // namespace conflab
