#pragma once

#include <string>
#include <vector>

#include "stackstep/core.hpp"

namespace stackstep {

/// Finite MDP with a fixed evaluation policy. transition[a] is the
/// n_states x n_states matrix P(s' | s, a); rows of each transition[a] and of
/// policy sum to one; rewards lie in [0, 1].
struct TabularMDP {
  Index n_states = 0;
  Index n_actions = 0;
  std::vector<Mat> transition;  // per action, n_states x n_states
  Mat reward;                   // n_states x n_actions
  double gamma = 0.9;
  Mat policy;                   // n_states x n_actions

  /// Policy-induced chain P_pi(s, s') and expected reward r_pi(s).
  Mat chain() const;
  Vec reward_vector() const;

  /// Structural validation; throws naming the offending row.
  void validate() const;
};

/// Stationary distribution of the policy-induced chain by power iteration.
/// Requires an irreducible, aperiodic chain.
Vec stationary_dist(const TabularMDP& mdp, double tol = 1e-13, int max_iters = 1000000);

/// Exact value function: solves (I - gamma P_pi) V = r_pi.
Vec value_function(const TabularMDP& mdp);

/// JSON round trip. Schema: {n_states, n_actions, P[s][a][s'], r[s][a],
/// gamma, pi[s][a]}.
TabularMDP load_mdp_json(const std::string& path);
void save_mdp_json(const TabularMDP& mdp, const std::string& path);

/// Random ergodic MDP with Dirichlet(1) transition and policy rows and
/// uniform rewards in [0, 1].
TabularMDP make_random_mdp(Index n_states, Index n_actions, double gamma, std::uint64_t seed);

/// Fixed 5-state chain-walk instance used as a golden test case.
TabularMDP make_chain_walk_5();

}  // namespace stackstep
