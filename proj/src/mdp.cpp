#include "stackstep/mdp.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "stackstep/linalg.hpp"

namespace stackstep {

Mat TabularMDP::chain() const {
  Mat p = Mat::Zero(n_states, n_states);
  for (Index a = 0; a < n_actions; ++a)
    p += policy.col(a).asDiagonal() * transition[static_cast<std::size_t>(a)];
  return p;
}

Vec TabularMDP::reward_vector() const {
  return (policy.array() * reward.array()).rowwise().sum();
}

void TabularMDP::validate() const {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("mdp: need at least one state and action");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("mdp: gamma must be in (0, 1)");
  if (static_cast<Index>(transition.size()) != n_actions)
    throw std::invalid_argument("mdp: transition tensor has wrong action count");
  for (Index a = 0; a < n_actions; ++a) {
    const Mat& p = transition[static_cast<std::size_t>(a)];
    if (p.rows() != n_states || p.cols() != n_states)
      throw std::invalid_argument("mdp: transition matrix for action " + std::to_string(a) +
                                  " has wrong shape");
    for (Index s = 0; s < n_states; ++s) {
      if ((p.row(s).array() < 0.0).any())
        throw std::invalid_argument("mdp: negative transition probability at state " +
                                    std::to_string(s) + ", action " + std::to_string(a));
      if (std::abs(p.row(s).sum() - 1.0) > 1e-12)
        throw std::invalid_argument("mdp: transition row for state " + std::to_string(s) +
                                    ", action " + std::to_string(a) + " sums to " +
                                    std::to_string(p.row(s).sum()) + ", expected 1");
    }
  }
  if (reward.rows() != n_states || reward.cols() != n_actions)
    throw std::invalid_argument("mdp: reward table has wrong shape");
  if ((reward.array() < 0.0).any() || (reward.array() > 1.0).any())
    throw std::invalid_argument("mdp: rewards must lie in [0, 1]");
  if (policy.rows() != n_states || policy.cols() != n_actions)
    throw std::invalid_argument("mdp: policy has wrong shape");
  for (Index s = 0; s < n_states; ++s) {
    if ((policy.row(s).array() < 0.0).any())
      throw std::invalid_argument("mdp: negative policy probability at state " + std::to_string(s));
    if (std::abs(policy.row(s).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("mdp: policy row for state " + std::to_string(s) + " sums to " +
                                  std::to_string(policy.row(s).sum()) + ", expected 1");
  }
}

namespace {

/// Reachability closure from state s over positive-probability edges.
std::vector<bool> reachable(const Mat& p, Index from) {
  std::vector<bool> seen(static_cast<std::size_t>(p.rows()), false);
  std::vector<Index> stack{from};
  seen[static_cast<std::size_t>(from)] = true;
  while (!stack.empty()) {
    const Index s = stack.back();
    stack.pop_back();
    for (Index t = 0; t < p.cols(); ++t) {
      if (p(s, t) > 0.0 && !seen[static_cast<std::size_t>(t)]) {
        seen[static_cast<std::size_t>(t)] = true;
        stack.push_back(t);
      }
    }
  }
  return seen;
}

}  // namespace

Vec stationary_dist(const TabularMDP& mdp, double tol, int max_iters) {
  mdp.validate();
  const Mat p = mdp.chain();

  // Irreducibility: every state reachable from state 0 and vice versa.
  const auto fwd = reachable(p, 0);
  for (Index s = 0; s < mdp.n_states; ++s) {
    if (!fwd[static_cast<std::size_t>(s)])
      throw std::runtime_error("stationary_dist: chain is reducible (state " + std::to_string(s) +
                               " unreachable from state 0)");
    if (!reachable(p, s)[0])
      throw std::runtime_error("stationary_dist: chain is reducible (state 0 unreachable from state " +
                               std::to_string(s) + ")");
  }

  Vec d = Vec::Constant(mdp.n_states, 1.0 / static_cast<double>(mdp.n_states));
  for (int it = 0; it < max_iters; ++it) {
    Vec next = p.transpose() * d;
    next /= next.sum();
    const double delta = (next - d).lpNorm<1>();
    d = next;
    if (delta <= tol) {
      // Polish with a few extra multiplications and verify invariance.
      for (int j = 0; j < 8; ++j) {
        d = p.transpose() * d;
        d /= d.sum();
      }
      if ((p.transpose() * d - d).lpNorm<Eigen::Infinity>() > 1e-12)
        throw std::runtime_error("stationary_dist: power iteration stalled away from invariance");
      return d;
    }
  }
  throw std::runtime_error("stationary_dist: power iteration did not converge (periodic chain?)");
}

Vec value_function(const TabularMDP& mdp) {
  const Mat a = Mat::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * mdp.chain();
  return a.partialPivLu().solve(mdp.reward_vector());
}

TabularMDP load_mdp_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open MDP file: " + path);
  nlohmann::json j;
  f >> j;

  TabularMDP mdp;
  mdp.n_states = j.at("n_states").get<Index>();
  mdp.n_actions = j.at("n_actions").get<Index>();
  mdp.gamma = j.at("gamma").get<double>();

  const auto& P = j.at("P");
  if (static_cast<Index>(P.size()) != mdp.n_states)
    throw std::runtime_error("mdp json: P has " + std::to_string(P.size()) +
                             " state rows, expected " + std::to_string(mdp.n_states));
  mdp.transition.assign(static_cast<std::size_t>(mdp.n_actions),
                        Mat::Zero(mdp.n_states, mdp.n_states));
  for (Index s = 0; s < mdp.n_states; ++s) {
    const auto& row_a = P.at(static_cast<std::size_t>(s));
    if (static_cast<Index>(row_a.size()) != mdp.n_actions)
      throw std::runtime_error("mdp json: P[" + std::to_string(s) + "] has wrong action count");
    for (Index a = 0; a < mdp.n_actions; ++a) {
      const auto& row = row_a.at(static_cast<std::size_t>(a));
      if (static_cast<Index>(row.size()) != mdp.n_states)
        throw std::runtime_error("mdp json: P[" + std::to_string(s) + "][" + std::to_string(a) +
                                 "] has wrong length");
      for (Index t = 0; t < mdp.n_states; ++t)
        mdp.transition[static_cast<std::size_t>(a)](s, t) = row.at(static_cast<std::size_t>(t)).get<double>();
    }
  }

  const auto& r = j.at("r");
  mdp.reward.resize(mdp.n_states, mdp.n_actions);
  for (Index s = 0; s < mdp.n_states; ++s)
    for (Index a = 0; a < mdp.n_actions; ++a)
      mdp.reward(s, a) = r.at(static_cast<std::size_t>(s)).at(static_cast<std::size_t>(a)).get<double>();

  const auto& pi = j.at("pi");
  mdp.policy.resize(mdp.n_states, mdp.n_actions);
  for (Index s = 0; s < mdp.n_states; ++s)
    for (Index a = 0; a < mdp.n_actions; ++a)
      mdp.policy(s, a) = pi.at(static_cast<std::size_t>(s)).at(static_cast<std::size_t>(a)).get<double>();

  mdp.validate();
  return mdp;
}

void save_mdp_json(const TabularMDP& mdp, const std::string& path) {
  nlohmann::json j;
  j["n_states"] = mdp.n_states;
  j["n_actions"] = mdp.n_actions;
  j["gamma"] = mdp.gamma;
  auto P = nlohmann::json::array();
  for (Index s = 0; s < mdp.n_states; ++s) {
    auto per_action = nlohmann::json::array();
    for (Index a = 0; a < mdp.n_actions; ++a) {
      auto row = nlohmann::json::array();
      for (Index t = 0; t < mdp.n_states; ++t)
        row.push_back(mdp.transition[static_cast<std::size_t>(a)](s, t));
      per_action.push_back(row);
    }
    P.push_back(per_action);
  }
  j["P"] = P;
  auto r = nlohmann::json::array();
  auto pi = nlohmann::json::array();
  for (Index s = 0; s < mdp.n_states; ++s) {
    auto rrow = nlohmann::json::array();
    auto prow = nlohmann::json::array();
    for (Index a = 0; a < mdp.n_actions; ++a) {
      rrow.push_back(mdp.reward(s, a));
      prow.push_back(mdp.policy(s, a));
    }
    r.push_back(rrow);
    pi.push_back(prow);
  }
  j["r"] = r;
  j["pi"] = pi;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << j.dump(2) << '\n';
}

TabularMDP make_random_mdp(Index n_states, Index n_actions, double gamma, std::uint64_t seed) {
  Rng rng(seed);
  TabularMDP mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.transition.assign(static_cast<std::size_t>(n_actions), Mat::Zero(n_states, n_states));
  auto dirichlet_row = [&](Index len) {
    Eigen::RowVectorXd row(len);
    for (Index i = 0; i < len; ++i) row(i) = -std::log(1.0 - rng.uniform());
    row /= row.sum();
    return row;
  };
  for (Index a = 0; a < n_actions; ++a)
    for (Index s = 0; s < n_states; ++s)
      mdp.transition[static_cast<std::size_t>(a)].row(s) = dirichlet_row(n_states);
  mdp.reward.resize(n_states, n_actions);
  for (Index s = 0; s < n_states; ++s)
    for (Index a = 0; a < n_actions; ++a) mdp.reward(s, a) = rng.uniform();
  mdp.policy.resize(n_states, n_actions);
  for (Index s = 0; s < n_states; ++s) mdp.policy.row(s) = dirichlet_row(n_actions);
  mdp.validate();
  return mdp;
}

TabularMDP make_chain_walk_5() {
  // Five states in a line, two actions (left, right); actions succeed with
  // probability 0.8 and stay put otherwise; walls reflect onto staying.
  TabularMDP mdp;
  mdp.n_states = 5;
  mdp.n_actions = 2;
  mdp.gamma = 0.9;
  mdp.transition.assign(2, Mat::Zero(5, 5));
  for (Index s = 0; s < 5; ++s) {
    const Index left = s > 0 ? s - 1 : s;
    const Index right = s < 4 ? s + 1 : s;
    mdp.transition[0](s, left) += 0.8;
    mdp.transition[0](s, s) += 0.2;
    mdp.transition[1](s, right) += 0.8;
    mdp.transition[1](s, s) += 0.2;
  }
  mdp.reward.resize(5, 2);
  mdp.reward << 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0;
  mdp.policy.resize(5, 2);
  mdp.policy.setConstant(0.5);
  mdp.validate();
  return mdp;
}

}  // namespace stackstep
