#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ope/mdp.hpp"

namespace ope {

/// Maximum-likelihood tabular model fit from trajectories.
///
/// Counts are pooled over all time steps. State-action pairs that never
/// appear in the data transition to the terminal state with probability 1
/// and reward 0: the model claims no further reward for anything it has
/// never seen. The terminal row itself is pinned to the prob-1 zero-reward
/// self-loop regardless of data.
struct LearnedModel {
  int num_states = 0;
  int num_actions = 0;
  int model_horizon = 0;             ///< DP depth the model believes episodes have
  std::vector<double> initial_hat;   ///< [S] empirical initial-state distribution
  std::vector<double> trans_hat;     ///< [S*A*S]
  std::vector<double> reward_hat;    ///< [S*A*S] mean observed reward per (s,a,s'), 0 if unseen
  std::vector<std::int64_t> visit_counts;  ///< [S*A] number of observed occurrences

  int terminal_state() const { return num_states - 1; }
  std::size_t sa(int s, int a) const {
    return (static_cast<std::size_t>(s) * num_actions + a) * num_states;
  }
  std::int64_t visits(int s, int a) const {
    return visit_counts[static_cast<std::size_t>(s) * num_actions + a];
  }
  double trans_prob(int s, int a, int s2) const { return trans_hat[sa(s, a) + s2]; }
  double reward_hat_at(int s, int a, int s2) const { return reward_hat[sa(s, a) + s2]; }

  /// Expected immediate reward the model predicts for taking a in s:
  /// sum_s' P_hat(s'|s,a) r_hat(s,a,s').
  double expected_reward(int s, int a) const {
    const auto base = sa(s, a);
    double r = 0.0;
    for (int s2 = 0; s2 < num_states; ++s2) r += trans_hat[base + s2] * reward_hat[base + s2];
    return r;
  }

  /// Largest |r_hat| entry, used when scaling concentration bounds.
  double max_abs_reward() const {
    double m = 0.0;
    for (double r : reward_hat) m = std::max(m, std::abs(r));
    return m;
  }
};

inline LearnedModel fit_mle_model(const Dataset& data, int num_states, int num_actions,
                                  int model_horizon) {
  detail::require(num_states >= 2 && num_actions >= 1, "fit_mle_model: bad state/action counts");
  detail::require(model_horizon >= 1, "fit_mle_model: model_horizon must be >= 1");

  LearnedModel m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.model_horizon = model_horizon;
  const auto S = static_cast<std::size_t>(num_states);
  const auto A = static_cast<std::size_t>(num_actions);
  m.initial_hat.assign(S, 0.0);
  m.trans_hat.assign(S * A * S, 0.0);
  m.reward_hat.assign(S * A * S, 0.0);
  m.visit_counts.assign(S * A, 0);

  std::vector<std::int64_t> triple_counts(S * A * S, 0);
  std::vector<double> reward_sums(S * A * S, 0.0);

  const auto check_state = [&](int s) {
    detail::require(s >= 0 && s < num_states,
                    "fit_mle_model: state index " + std::to_string(s) + " out of range");
  };
  for (const Trajectory& traj : data.trajectories) {
    check_state(traj.states.front());
    m.initial_hat[traj.states.front()] += 1.0;
    for (int t = 0; t < traj.horizon(); ++t) {
      const int s = traj.states[t];
      const int a = traj.actions[t];
      const int s2 = traj.states[t + 1];
      check_state(s);
      check_state(s2);
      detail::require(a >= 0 && a < num_actions,
                      "fit_mle_model: action index " + std::to_string(a) + " out of range");
      const auto idx = m.sa(s, a) + s2;
      m.visit_counts[static_cast<std::size_t>(s) * A + a] += 1;
      triple_counts[idx] += 1;
      reward_sums[idx] += traj.rewards[t];
    }
  }

  detail::require(!data.trajectories.empty(), "fit_mle_model: empty dataset");
  for (double& d : m.initial_hat) d /= static_cast<double>(data.trajectories.size());

  const int T = m.terminal_state();
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      const auto base = m.sa(s, a);
      const std::int64_t total = m.visit_counts[static_cast<std::size_t>(s) * A + a];
      if (s == T) {
        m.trans_hat[base + T] = 1.0;  // terminal row pinned; reward stays 0
        continue;
      }
      if (total == 0) {
        m.trans_hat[base + T] = 1.0;  // unseen pair: absorb with no further reward
        continue;
      }
      for (int s2 = 0; s2 < num_states; ++s2) {
        const std::int64_t c = triple_counts[base + s2];
        if (c == 0) continue;
        m.trans_hat[base + s2] = static_cast<double>(c) / static_cast<double>(total);
        m.reward_hat[base + s2] = reward_sums[base + s2] / static_cast<double>(c);
      }
    }
  }
  return m;
}

/// The exact model: true tables and true initial distribution, with the
/// given DP depth. Useful for testing estimator degenerations.
inline LearnedModel model_from_mdp(const TabularMDP& mdp, int model_horizon) {
  LearnedModel m;
  m.num_states = mdp.num_states;
  m.num_actions = mdp.num_actions;
  m.model_horizon = model_horizon;
  m.initial_hat = mdp.initial;
  m.trans_hat = mdp.trans;
  m.reward_hat = mdp.reward;
  m.visit_counts.assign(static_cast<std::size_t>(mdp.num_states) * mdp.num_actions, 1);
  // Unreachable reward entries may lie outside the model's use; zero the
  // terminal row to honor the no-reward-after-absorption convention exactly.
  const int T = m.terminal_state();
  for (int a = 0; a < mdp.num_actions; ++a) {
    const auto base = m.sa(T, a);
    for (int s2 = 0; s2 < mdp.num_states; ++s2) m.reward_hat[base + s2] = 0.0;
  }
  return m;
}

/// Time-indexed state and state-action values of the evaluation policy
/// under a learned model, from backward induction of depth model_horizon:
///   v_H == 0,  q_t(s,a) = sum_s' P_hat [r_hat + gamma v_{t+1}(s')],
///   v_t(s) = sum_a pi_e(a|s) q_t(s,a).
/// Accessors return 0 for t >= model_horizon: the model predicts nothing
/// beyond its own horizon.
struct ValueTables {
  int num_states = 0;
  int num_actions = 0;
  int model_horizon = 0;
  std::vector<double> v;  ///< [(H+1)*S], row H is all zeros
  std::vector<double> q;  ///< [H*S*A]

  double v_at(int t, int s) const {
    if (t >= model_horizon) return 0.0;
    return v[static_cast<std::size_t>(t) * num_states + s];
  }
  double q_at(int t, int s, int a) const {
    if (t >= model_horizon) return 0.0;
    return q[(static_cast<std::size_t>(t) * num_states + s) * num_actions + a];
  }
};

inline ValueTables value_tables(const LearnedModel& model, const Policy& pi_e, double gamma) {
  detail::require(pi_e.num_states == model.num_states && pi_e.num_actions == model.num_actions,
                  "value_tables: policy shape does not match the model");
  const int S = model.num_states;
  const int A = model.num_actions;
  const int H = model.model_horizon;
  ValueTables tables;
  tables.num_states = S;
  tables.num_actions = A;
  tables.model_horizon = H;
  tables.v.assign(static_cast<std::size_t>(H + 1) * S, 0.0);
  tables.q.assign(static_cast<std::size_t>(H) * S * A, 0.0);

  for (int t = H - 1; t >= 0; --t) {
    const std::size_t v_next = static_cast<std::size_t>(t + 1) * S;
    const std::size_t v_cur = static_cast<std::size_t>(t) * S;
    const std::size_t q_cur = static_cast<std::size_t>(t) * S * A;
    for (int s = 0; s < S; ++s) {
      double vs = 0.0;
      for (int a = 0; a < A; ++a) {
        const auto base = model.sa(s, a);
        double q = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          const double p = model.trans_hat[base + s2];
          if (p == 0.0) continue;
          q += p * (model.reward_hat[base + s2] + gamma * tables.v[v_next + s2]);
        }
        tables.q[q_cur + static_cast<std::size_t>(s) * A + a] = q;
        vs += pi_e.prob(s, a) * q;
      }
      tables.v[v_cur + s] = vs;
    }
  }
  return tables;
}

/// Purely model-based estimate: the model's own value of the evaluation
/// policy from its empirical initial distribution, sum_s d0_hat(s) v_0(s).
inline double am_estimate(const LearnedModel& model, const ValueTables& tables) {
  detail::require(model.num_states == tables.num_states, "am_estimate: model/tables mismatch");
  double value = 0.0;
  for (int s = 0; s < model.num_states; ++s) value += model.initial_hat[s] * tables.v_at(0, s);
  return value;
}

}  // namespace ope
