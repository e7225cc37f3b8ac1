#include "conflab/markov.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <queue>

namespace conflab {

void validate_chain(const FiniteChain& chain) {
  const int n = chain.size();
  if (n == 0 || chain.transition.rows() != n || chain.transition.cols() != n) {
    throw InvalidParams("transition matrix must be square and match labels");
  }
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p = chain.transition(i, j);
      if (!(p >= 0.0) || !(p <= 1.0)) {
        throw InvalidParams("transition entries must lie in [0,1]");
      }
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-12) {
      throw InvalidParams("row " + std::to_string(i) + " sums to " +
                          std::to_string(row));
    }
  }
}

namespace {

std::vector<int> bfs_levels(const Eigen::MatrixXd& P, bool reversed) {
  const int n = static_cast<int>(P.rows());
  std::vector<int> level(static_cast<std::size_t>(n), -1);
  std::queue<int> q;
  q.push(0);
  level[0] = 0;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v = 0; v < n; ++v) {
      const double p = reversed ? P(v, u) : P(u, v);
      if (p > 0.0 && level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        q.push(v);
      }
    }
  }
  return level;
}

void check_ergodic(const FiniteChain& chain) {
  const auto& P = chain.transition;
  const int n = chain.size();
  const auto fwd = bfs_levels(P, false);
  const auto bwd = bfs_levels(P, true);
  for (int v = 0; v < n; ++v) {
    if (fwd[static_cast<std::size_t>(v)] < 0 || bwd[static_cast<std::size_t>(v)] < 0) {
      throw NotErgodic("chain is reducible (state " + chain.states[static_cast<std::size_t>(v)] +
                       " not in the recurrent class of state 0)");
    }
  }
  // Period = gcd over edges (u,v) of level(u) + 1 - level(v).
  long long g = 0;
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (P(u, v) > 0.0) {
        const long long d = static_cast<long long>(fwd[static_cast<std::size_t>(u)]) + 1 -
                            fwd[static_cast<std::size_t>(v)];
        g = std::gcd(g, d < 0 ? -d : d);
      }
    }
  }
  if (g != 1) throw NotErgodic("chain is periodic with period " + std::to_string(g));
}

}  // namespace

StationaryDist stationary_solve(const FiniteChain& chain) {
  validate_chain(chain);
  const int n = chain.size();
  if (n > kMaxChainStates) {
    throw InvalidParams("chain too large for a dense solve");
  }
  check_ergodic(chain);

  // (P^T - I) pi = 0 with the last balance row replaced by normalization.
  Eigen::MatrixXd A = chain.transition.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd pi = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(b);

  for (int i = 0; i < n; ++i) {
    if (pi(i) < 0.0) pi(i) = 0.0;
  }
  pi /= pi.sum();

  const double residual = (chain.transition.transpose() * pi - pi).cwiseAbs().maxCoeff();
  if (!(residual < 1e-9)) {
    throw NotErgodic("stationary solve residual " + std::to_string(residual));
  }
  return StationaryDist{std::move(pi)};
}

LazifyResult lazify(const FiniteChain& chain, const std::vector<double>& f) {
  validate_chain(chain);
  const int n = chain.size();
  if (static_cast<int>(f.size()) != n) {
    throw InvalidStay("need one move probability per state");
  }
  for (double fs : f) {
    if (!(fs > 0.0) || !(fs <= 1.0)) {
      throw InvalidStay("move probabilities must lie in (0,1]");
    }
  }

  LazifyResult out;
  out.chain.states = chain.states;
  out.chain.transition = chain.transition;
  for (int s = 0; s < n; ++s) {
    out.chain.transition.row(s) *= f[static_cast<std::size_t>(s)];
    out.chain.transition(s, s) += 1.0 - f[static_cast<std::size_t>(s)];
  }

  const StationaryDist base = stationary_solve(chain);
  Eigen::VectorXd pi(n);
  for (int s = 0; s < n; ++s) {
    pi(s) = base.probs(s) / f[static_cast<std::size_t>(s)];
  }
  pi /= pi.sum();
  out.stationary = StationaryDist{std::move(pi)};
  return out;
}

namespace {

std::vector<double> state_purchase_probs(const Instance& inst,
                                         const PricingPolicy& policy,
                                         std::uint64_t n_states) {
  std::vector<double> q(n_states);
  std::vector<std::string> absorbing;
  for (std::uint64_t s = 0; s < n_states; ++s) {
    const int n = std::popcount(s);
    const double price = policy.price_for_state(s, n);
    q[s] = purchase_prob(inst, n, price);
    if (!(q[s] > kAbsorbingEps) && absorbing.size() < 8) {
      absorbing.push_back(ReviewState::from_index(s, inst.c).to_string());
    }
  }
  if (!absorbing.empty()) {
    std::string msg = "zero purchase probability in state(s):";
    for (const auto& s : absorbing) msg += " " + s;
    throw AbsorbingState(msg);
  }
  return q;
}

}  // namespace

FiniteChain build_newest_chain(const Instance& inst, const PricingPolicy& policy) {
  validate_policy(policy, inst.c);
  if (inst.c > 12) {
    throw InvalidParams("explicit newest chain limited to c <= 12 states 2^c");
  }
  const std::uint64_t n_states = std::uint64_t{1} << inst.c;
  const std::uint64_t mask = n_states - 1;
  const auto q = state_purchase_probs(inst, policy, n_states);

  FiniteChain chain;
  chain.states.reserve(n_states);
  for (std::uint64_t s = 0; s < n_states; ++s) {
    chain.states.push_back(ReviewState::from_index(s, inst.c).to_string());
  }
  chain.transition = Eigen::MatrixXd::Zero(static_cast<int>(n_states),
                                           static_cast<int>(n_states));
  for (std::uint64_t s = 0; s < n_states; ++s) {
    const std::uint64_t to_pos = ((s << 1) | 1u) & mask;
    const std::uint64_t to_neg = (s << 1) & mask;
    const int i = static_cast<int>(s);
    chain.transition(i, i) += 1.0 - q[s];
    chain.transition(i, static_cast<int>(to_pos)) += inst.mu * q[s];
    chain.transition(i, static_cast<int>(to_neg)) += (1.0 - inst.mu) * q[s];
  }
  return chain;
}

FiniteChain build_nonstationary_chain(double mu_l, double mu_h, double xi,
                                      double price, const Instance& base) {
  if (!(0 < mu_l) || !(mu_l < mu_h) || !(mu_h < 1)) {
    throw InvalidParams("need 0 < mu_l < mu_h < 1");
  }
  if (!(xi > 0 && xi <= 1)) throw InvalidParams("xi must lie in (0,1]");
  if (base.c != 1) throw InvalidParams("two-point quality model needs c = 1");
  const double q0 = purchase_prob(base, 0, price);
  const double q1 = purchase_prob(base, 1, price);
  if (!(q0 > kAbsorbingEps)) {
    throw InvalidParams("price is absorbing at a negative review");
  }

  // State order: (r=0, muL), (1, muL), (0, muH), (1, muH).
  const double qs[2] = {q0, q1};
  const double mus[2] = {mu_l, mu_h};
  FiniteChain chain;
  chain.states = {"0|muL", "1|muL", "0|muH", "1|muH"};
  chain.transition = Eigen::MatrixXd::Zero(4, 4);
  for (int m = 0; m < 2; ++m) {
    for (int r = 0; r < 2; ++r) {
      const int from = 2 * m + r;
      // Review transition uses the current quality for the fresh rating.
      const double to_r1 = qs[r] * mus[m] + (r == 1 ? 1.0 - qs[r] : 0.0);
      const double to_r0 = qs[r] * (1.0 - mus[m]) + (r == 0 ? 1.0 - qs[r] : 0.0);
      const double rprob[2] = {to_r0, to_r1};
      for (int m2 = 0; m2 < 2; ++m2) {
        const double flip = (m2 == m) ? 1.0 - xi / 2.0 : xi / 2.0;
        for (int r2 = 0; r2 < 2; ++r2) {
          chain.transition(from, 2 * m2 + r2) += rprob[r2] * flip;
        }
      }
    }
  }
  return chain;
}

FiniteChain build_window_chain(const Instance& inst, int w, double price) {
  if (w < inst.c) throw InvalidParams("window must be at least c");
  if (w > 12) {
    throw WindowTooLarge("explicit window chain limited to w <= 12 (2^w states)");
  }

  // Average purchase probability at k positives in the window: the displayed
  // counts follow a hypergeometric draw of c out of w.
  std::vector<double> q_window(static_cast<std::size_t>(w) + 1);
  const auto lchoose = [](int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  };
  for (int k = 0; k <= w; ++k) {
    double qk = 0.0;
    const int n_lo = std::max(0, inst.c + k - w);
    const int n_hi = std::min(inst.c, k);
    for (int n = n_lo; n <= n_hi; ++n) {
      const double log_p =
          lchoose(k, n) + lchoose(w - k, inst.c - n) - lchoose(w, inst.c);
      qk += purchase_prob(inst, n, price) * std::exp(log_p);
    }
    q_window[static_cast<std::size_t>(k)] = qk;
  }

  const std::uint64_t n_states = std::uint64_t{1} << w;
  const std::uint64_t mask = n_states - 1;
  FiniteChain chain;
  chain.states.reserve(n_states);
  std::vector<std::string> absorbing;
  for (std::uint64_t s = 0; s < n_states; ++s) {
    chain.states.push_back(ReviewState::from_index(s, w).to_string());
    if (!(q_window[static_cast<std::size_t>(std::popcount(s))] > kAbsorbingEps) &&
        absorbing.size() < 8) {
      absorbing.push_back(chain.states.back());
    }
  }
  if (!absorbing.empty()) {
    std::string msg = "zero purchase probability in window state(s):";
    for (const auto& s : absorbing) msg += " " + s;
    throw AbsorbingState(msg);
  }

  chain.transition = Eigen::MatrixXd::Zero(static_cast<int>(n_states),
                                           static_cast<int>(n_states));
  for (std::uint64_t s = 0; s < n_states; ++s) {
    const double q = q_window[static_cast<std::size_t>(std::popcount(s))];
    const std::uint64_t to_pos = ((s << 1) | 1u) & mask;
    const std::uint64_t to_neg = (s << 1) & mask;
    const int i = static_cast<int>(s);
    chain.transition(i, i) += 1.0 - q;
    chain.transition(i, static_cast<int>(to_pos)) += inst.mu * q;
    chain.transition(i, static_cast<int>(to_neg)) += (1.0 - inst.mu) * q;
  }
  return chain;
}

void chain_to_csv(const FiniteChain& chain, std::ostream& os) {
  const int n = chain.size();
  os << "state";
  for (const auto& s : chain.states) os << "," << s;
  os << "\n";
  char buf[32];
  for (int i = 0; i < n; ++i) {
    os << chain.states[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%.12g", chain.transition(i, j));
      os << "," << buf;
    }
    os << "\n";
  }
}

}  // namespace conflab
