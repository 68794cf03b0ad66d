#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ope/errors.hpp"
#include "ope/rng.hpp"

namespace ope {

namespace detail {

inline void check_probability_row(std::span<const double> row, const std::string& what) {
  double sum = 0.0;
  for (double p : row) {
    require(p >= 0.0 && std::isfinite(p), what + ": entries must be finite and non-negative");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-12, what + ": row must sum to 1 (got " + std::to_string(sum) + ")");
}

}  // namespace detail

/// Finite MDP with dense tables and a fixed episode horizon.
///
/// Convention: the last state index is the absorbing terminal state. It
/// self-loops under every action with reward 0, so an episode that reaches
/// it simply idles there until the horizon is exhausted. Episodes always
/// run for exactly `horizon` steps; early termination is expressed through
/// this absorbing state rather than variable-length records.
struct TabularMDP {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> initial;  ///< [S] initial-state distribution
  std::vector<double> trans;    ///< [S*A*S], row (s,a) is a distribution over next states
  std::vector<double> reward;   ///< [S*A*S], reward for the transition (s,a,s')
  double gamma = 1.0;           ///< discount, in (0, 1]
  int horizon = 0;              ///< episode length L >= 1
  double reward_min = 0.0;      ///< lower bound on per-step reward
  double reward_max = 0.0;      ///< upper bound on per-step reward

  int terminal_state() const { return num_states - 1; }

  std::size_t sa(int s, int a) const {
    return (static_cast<std::size_t>(s) * num_actions + a) * num_states;
  }
  double trans_prob(int s, int a, int s2) const { return trans[sa(s, a) + s2]; }
  double reward_at(int s, int a, int s2) const { return reward[sa(s, a) + s2]; }
  std::span<const double> trans_row(int s, int a) const {
    return {trans.data() + sa(s, a), static_cast<std::size_t>(num_states)};
  }

  /// Full structural validation; throws std::invalid_argument on the first
  /// violated constraint.
  void validate() const {
    detail::require(num_states >= 2, "TabularMDP: need at least one regular state plus the terminal state");
    detail::require(num_actions >= 1, "TabularMDP: need at least one action");
    detail::require(horizon >= 1, "TabularMDP: horizon must be >= 1");
    detail::require(gamma > 0.0 && gamma <= 1.0, "TabularMDP: gamma must be in (0, 1]");
    detail::require(reward_min <= reward_max, "TabularMDP: reward_min must not exceed reward_max");
    const auto S = static_cast<std::size_t>(num_states);
    const auto A = static_cast<std::size_t>(num_actions);
    detail::require(initial.size() == S, "TabularMDP: initial distribution has wrong size");
    detail::require(trans.size() == S * A * S, "TabularMDP: transition table has wrong size");
    detail::require(reward.size() == S * A * S, "TabularMDP: reward table has wrong size");
    detail::check_probability_row(initial, "TabularMDP initial distribution");
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        detail::check_probability_row(trans_row(s, a),
                                      "TabularMDP transitions from (s=" + std::to_string(s) +
                                          ", a=" + std::to_string(a) + ")");
        for (int s2 = 0; s2 < num_states; ++s2) {
          const double r = reward_at(s, a, s2);
          detail::require(std::isfinite(r), "TabularMDP: rewards must be finite");
          if (trans_prob(s, a, s2) > 0.0) {
            detail::require(r >= reward_min && r <= reward_max,
                            "TabularMDP: reachable reward outside [reward_min, reward_max]");
          }
        }
      }
    }
    const int T = terminal_state();
    for (int a = 0; a < num_actions; ++a) {
      detail::require(trans_prob(T, a, T) == 1.0, "TabularMDP: terminal state must self-loop");
      detail::require(reward_at(T, a, T) == 0.0, "TabularMDP: terminal self-loop reward must be 0");
    }
  }
};

/// Stationary stochastic policy as a dense [S*A] table. Rows are
/// distributions over actions for every state, including the terminal one;
/// give the terminal state the same row (conventionally uniform) in every
/// policy so importance ratios are exactly 1 after absorption.
struct Policy {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> probs;  ///< [S*A]

  double prob(int s, int a) const {
    return probs[static_cast<std::size_t>(s) * num_actions + a];
  }
  std::span<const double> row(int s) const {
    return {probs.data() + static_cast<std::size_t>(s) * num_actions,
            static_cast<std::size_t>(num_actions)};
  }

  void validate() const {
    detail::require(num_states >= 1 && num_actions >= 1, "Policy: empty shape");
    detail::require(probs.size() == static_cast<std::size_t>(num_states) * num_actions,
                    "Policy: table has wrong size");
    for (int s = 0; s < num_states; ++s) {
      detail::check_probability_row(row(s), "Policy row for state " + std::to_string(s));
    }
  }
};

/// A uniform policy over `num_actions` for every one of `num_states` states.
inline Policy uniform_policy(int num_states, int num_actions) {
  Policy p;
  p.num_states = num_states;
  p.num_actions = num_actions;
  p.probs.assign(static_cast<std::size_t>(num_states) * num_actions, 1.0 / num_actions);
  return p;
}

/// One episode of exactly L steps: states S_0..S_L, and for each step t
/// the action A_t, reward R_t, and the probability the behavior policy
/// assigned to A_t at S_t when the data was generated. Estimators read
/// behavior probabilities from here and never re-evaluate the behavior
/// policy, so datasets may mix behavior policies freely.
struct Trajectory {
  std::vector<int> states;            ///< length L+1
  std::vector<int> actions;           ///< length L
  std::vector<double> rewards;        ///< length L
  std::vector<double> behavior_probs; ///< length L, all > 0

  int horizon() const { return static_cast<int>(actions.size()); }
};

/// A batch of trajectories sharing one horizon.
struct Dataset {
  std::vector<Trajectory> trajectories;
  int horizon = 0;

  int size() const { return static_cast<int>(trajectories.size()); }
};

/// Sample one episode of mdp.horizon steps. The policy must cover every
/// state (terminal included); sampling just keeps reading the tables after
/// absorption, which records the conventional prob-1 self-loops with zero
/// reward.
inline Trajectory sample_trajectory(const TabularMDP& mdp, const Policy& policy, Rng& rng) {
  const int L = mdp.horizon;
  Trajectory traj;
  traj.states.reserve(L + 1);
  traj.actions.reserve(L);
  traj.rewards.reserve(L);
  traj.behavior_probs.reserve(L);

  int s = rng.categorical(mdp.initial);
  traj.states.push_back(s);
  for (int t = 0; t < L; ++t) {
    const int a = rng.categorical(policy.row(s));
    const int s2 = rng.categorical(mdp.trans_row(s, a));
    traj.actions.push_back(a);
    traj.behavior_probs.push_back(policy.prob(s, a));
    traj.rewards.push_back(mdp.reward_at(s, a, s2));
    traj.states.push_back(s2);
    s = s2;
  }
  return traj;
}

/// Discounted return sum_t gamma^t R_t of one episode.
inline double episode_return(const Trajectory& traj, double gamma) {
  double total = 0.0;
  double g = 1.0;
  for (double r : traj.rewards) {
    total += g * r;
    g *= gamma;
  }
  return total;
}

/// Exact policy value by finite-horizon backward induction:
///   v_L == 0,  v_t(s) = sum_a pi(a|s) sum_s' P(s'|s,a) [r(s,a,s') + gamma v_{t+1}(s')],
/// returning sum_s d0(s) v_0(s).
inline double exact_policy_value(const TabularMDP& mdp, const Policy& policy) {
  mdp.validate();
  policy.validate();
  detail::require(policy.num_states == mdp.num_states && policy.num_actions == mdp.num_actions,
                  "exact_policy_value: policy shape does not match the MDP");
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  std::vector<double> v(S, 0.0);
  std::vector<double> v_next(S, 0.0);
  for (int t = mdp.horizon - 1; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double vs = 0.0;
      for (int a = 0; a < A; ++a) {
        const double pa = policy.prob(s, a);
        if (pa == 0.0) continue;
        double q = 0.0;
        const auto base = mdp.sa(s, a);
        for (int s2 = 0; s2 < S; ++s2) {
          const double p = mdp.trans[base + s2];
          if (p == 0.0) continue;
          q += p * (mdp.reward[base + s2] + mdp.gamma * v_next[s2]);
        }
        vs += pa * q;
      }
      v[s] = vs;
    }
    std::swap(v, v_next);
  }
  double value = 0.0;
  for (int s = 0; s < S; ++s) value += mdp.initial[s] * v_next[s];
  return value;
}

/// Sample n trajectories. Each trajectory gets its own child stream of
/// `stream`, so the result is a pure function of (stream key, n) and is
/// reproducible regardless of platform or caller state.
inline Dataset sample_dataset(const TabularMDP& mdp, const Policy& policy, int n, const Rng& stream) {
  detail::require(n >= 1, "sample_dataset: need at least one trajectory");
  detail::require(policy.num_states == mdp.num_states && policy.num_actions == mdp.num_actions,
                  "sample_dataset: policy shape does not match the MDP");
  Dataset data;
  data.horizon = mdp.horizon;
  data.trajectories.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng traj_rng = stream.child(static_cast<std::uint64_t>(i));
    data.trajectories.push_back(sample_trajectory(mdp, policy, traj_rng));
  }
  return data;
}

}  // namespace ope
