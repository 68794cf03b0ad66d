#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "ope/mdp.hpp"

namespace ope {

/// A benchmark environment: latent dynamics, an observation map collapsing
/// latent states into what the data (and any model fit on it) sees, and a
/// behavior/evaluation policy pair defined over observed states. For fully
/// observed domains the map is the identity.
struct DomainSpec {
  std::string name;
  TabularMDP mdp;                    ///< latent dynamics (simulation runs here)
  std::vector<int> observation_map;  ///< latent state -> observed state
  int num_observed_states = 0;
  Policy behavior;    ///< over observed states
  Policy evaluation;  ///< over observed states
  int model_horizon = 0;  ///< DP depth a model of this domain should use
};

/// Softmax policy from one preference row per (observed) state.
inline Policy softmax_policy(const std::vector<std::vector<double>>& prefs) {
  detail::require(!prefs.empty() && !prefs.front().empty(), "softmax_policy: empty preferences");
  Policy p;
  p.num_states = static_cast<int>(prefs.size());
  p.num_actions = static_cast<int>(prefs.front().size());
  p.probs.reserve(static_cast<std::size_t>(p.num_states) * p.num_actions);
  for (const auto& row : prefs) {
    detail::require(static_cast<int>(row.size()) == p.num_actions,
                    "softmax_policy: ragged preference rows");
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double w : row) z += std::exp(w - m);
    for (double w : row) p.probs.push_back(std::exp(w - m) / z);
  }
  return p;
}

/// Lift a policy over observed states to the latent state space.
inline Policy lift_policy(const DomainSpec& domain, const Policy& observed) {
  detail::require(observed.num_states == domain.num_observed_states,
                  "lift_policy: policy is not over the domain's observed states");
  Policy latent;
  latent.num_states = domain.mdp.num_states;
  latent.num_actions = observed.num_actions;
  latent.probs.reserve(static_cast<std::size_t>(latent.num_states) * latent.num_actions);
  for (int s = 0; s < latent.num_states; ++s) {
    const auto row = observed.row(domain.observation_map[s]);
    latent.probs.insert(latent.probs.end(), row.begin(), row.end());
  }
  return latent;
}

/// Exact value of an observed-state policy, computed on the latent MDP.
inline double true_value(const DomainSpec& domain, const Policy& observed) {
  return exact_policy_value(domain.mdp, lift_policy(domain, observed));
}

/// Sample a dataset of observed trajectories under an observed-state
/// behavior policy: simulation runs on the latent MDP with the lifted
/// policy, then states are collapsed through the observation map. Stored
/// behavior probabilities are untouched by the mapping (the lifted row is
/// the observed row).
inline Dataset sample_domain_dataset(const DomainSpec& domain, const Policy& behavior, int n,
                                     const Rng& stream) {
  const Policy latent = lift_policy(domain, behavior);
  Dataset data = sample_dataset(domain.mdp, latent, n, stream);
  for (Trajectory& traj : data.trajectories) {
    for (int& s : traj.states) s = domain.observation_map[s];
  }
  return data;
}

namespace detail {

inline std::vector<int> identity_map(int n) {
  std::vector<int> m(n);
  for (int i = 0; i < n; ++i) m[i] = i;
  return m;
}

}  // namespace detail

/// Two-step domain with hidden structure. Latent: a start state branches on
/// the first action into a good state (+1 on exit) or a bad state (-1 on
/// exit), then terminates. All three latent states look identical in the
/// data, so a tabular model fit on observations aggregates them into one
/// state and converges to a confidently wrong value, while importance
/// sampling is unaffected. Behavior strongly prefers the good branch; the
/// evaluation policy prefers the bad one.
inline DomainSpec build_modelfail() {
  DomainSpec d;
  d.name = "modelfail";
  TabularMDP& m = d.mdp;
  m.num_states = 4;  // start, good, bad, terminal
  m.num_actions = 2;
  m.gamma = 1.0;
  m.horizon = 2;
  m.reward_min = -1.0;
  m.reward_max = 1.0;
  m.initial = {1.0, 0.0, 0.0, 0.0};
  m.trans.assign(4 * 2 * 4, 0.0);
  m.reward.assign(4 * 2 * 4, 0.0);
  const int start = 0, good = 1, bad = 2, term = 3;
  m.trans[m.sa(start, 0) + good] = 1.0;
  m.trans[m.sa(start, 1) + bad] = 1.0;
  for (int a = 0; a < 2; ++a) {
    m.trans[m.sa(good, a) + term] = 1.0;
    m.reward[m.sa(good, a) + term] = 1.0;
    m.trans[m.sa(bad, a) + term] = 1.0;
    m.reward[m.sa(bad, a) + term] = -1.0;
    m.trans[m.sa(term, a) + term] = 1.0;
  }
  m.validate();

  d.observation_map = {0, 0, 0, 1};
  d.num_observed_states = 2;
  d.behavior = softmax_policy({{1.0, -1.0}, {0.0, 0.0}});
  d.evaluation = softmax_policy({{-1.0, 1.0}, {0.0, 0.0}});
  d.model_horizon = m.horizon;
  return d;
}

/// Fully observed alternating domain. From s1 either action reaches a +1
/// state or a -1 state (probabilities 0.4/0.6, reversed between actions),
/// which deterministically return to s1. A tabular model converges to the
/// true dynamics quickly; importance-sampling estimators pay for 20 steps
/// of weight variance. Behavior prefers the first action, evaluation the
/// second.
inline DomainSpec build_modelwin() {
  DomainSpec d;
  d.name = "modelwin";
  TabularMDP& m = d.mdp;
  m.num_states = 4;  // s1, s2, s3, terminal
  m.num_actions = 2;
  m.gamma = 1.0;
  m.horizon = 20;
  m.reward_min = -1.0;
  m.reward_max = 1.0;
  m.initial = {1.0, 0.0, 0.0, 0.0};
  m.trans.assign(4 * 2 * 4, 0.0);
  m.reward.assign(4 * 2 * 4, 0.0);
  const int s1 = 0, s2 = 1, s3 = 2, term = 3;
  // From s1: action 0 favors the +1 state with probability 0.4, action 1
  // with probability 0.6; entering s2 pays +1, entering s3 pays -1.
  m.trans[m.sa(s1, 0) + s2] = 0.4;
  m.trans[m.sa(s1, 0) + s3] = 0.6;
  m.trans[m.sa(s1, 1) + s2] = 0.6;
  m.trans[m.sa(s1, 1) + s3] = 0.4;
  for (int a = 0; a < 2; ++a) {
    m.reward[m.sa(s1, a) + s2] = 1.0;
    m.reward[m.sa(s1, a) + s3] = -1.0;
    m.trans[m.sa(s2, a) + s1] = 1.0;
    m.trans[m.sa(s3, a) + s1] = 1.0;
    m.trans[m.sa(term, a) + term] = 1.0;
  }
  m.validate();

  d.observation_map = detail::identity_map(4);
  d.num_observed_states = 4;
  d.behavior = softmax_policy({{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}});
  d.evaluation = softmax_policy({{0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}});
  d.model_horizon = m.horizon;
  return d;
}

namespace detail {

/// Build the deterministic 4x4 gridworld. Cells are row-major with the
/// goal cell folded into the terminal index: entering the goal pays +10 and
/// absorbs; every other move pays -1 (bumping a wall stays put).
inline TabularMDP gridworld_mdp() {
  constexpr int kSide = 4;
  constexpr int kCells = kSide * kSide;  // goal cell is the terminal index
  TabularMDP m;
  m.num_states = kCells;
  m.num_actions = 4;  // up, down, left, right
  m.gamma = 1.0;
  m.horizon = 100;
  m.reward_min = -1.0;
  m.reward_max = 10.0;
  m.initial.assign(kCells, 0.0);
  m.initial[0] = 1.0;  // start at (0,0)
  m.trans.assign(static_cast<std::size_t>(kCells) * 4 * kCells, 0.0);
  m.reward.assign(static_cast<std::size_t>(kCells) * 4 * kCells, 0.0);

  const int goal = kCells - 1;  // cell (3,3) == terminal index
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      const int s = r * kSide + c;
      if (s == goal) continue;  // terminal handled below
      for (int a = 0; a < 4; ++a) {
        const int r2 = std::clamp(r + dr[a], 0, kSide - 1);
        const int c2 = std::clamp(c + dc[a], 0, kSide - 1);
        const int s2 = r2 * kSide + c2;
        m.trans[m.sa(s, a) + s2] = 1.0;
        m.reward[m.sa(s, a) + s2] = s2 == goal ? 10.0 : -1.0;
      }
    }
  }
  for (int a = 0; a < 4; ++a) m.trans[m.sa(goal, a) + goal] = 1.0;
  m.validate();
  return m;
}

/// Optimal action values of the gridworld by exact value iteration
/// (deterministic and absorbing, so this converges to integers in a few
/// sweeps).
inline std::vector<std::vector<double>> gridworld_optimal_q(const TabularMDP& m) {
  const int S = m.num_states;
  const int A = m.num_actions;
  std::vector<double> v(S, 0.0);
  for (int sweep = 0; sweep < 1000; ++sweep) {
    bool changed = false;
    for (int s = 0; s < S - 1; ++s) {
      double best = -1e300;
      for (int a = 0; a < A; ++a) {
        const auto base = m.sa(s, a);
        for (int s2 = 0; s2 < S; ++s2) {
          if (m.trans[base + s2] == 0.0) continue;
          best = std::max(best, m.reward[base + s2] + v[s2]);
        }
      }
      if (best != v[s]) {
        v[s] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  std::vector<std::vector<double>> q(S, std::vector<double>(A, 0.0));
  for (int s = 0; s < S - 1; ++s) {
    for (int a = 0; a < A; ++a) {
      const auto base = m.sa(s, a);
      for (int s2 = 0; s2 < S; ++s2) {
        if (m.trans[base + s2] == 0.0) continue;
        q[s][a] = m.reward[base + s2] + v[s2];
      }
    }
  }
  return q;  // terminal row stays all-zero => softmax gives the uniform row
}

}  // namespace detail

/// Policy ladder for the gridworld: index 1 is uniform random; 2..5 are
/// softmax over optimal action values with temperatures 2.0, 1.0, 0.5 and
/// 0.25, so quality increases with the index.
inline Policy gridworld_policy(int index) {
  detail::require(index >= 1 && index <= 5, "gridworld_policy: index must be in 1..5");
  const TabularMDP m = detail::gridworld_mdp();
  if (index == 1) return uniform_policy(m.num_states, m.num_actions);
  const double temps[4] = {2.0, 1.0, 0.5, 0.25};
  const double tau = temps[index - 2];
  auto prefs = detail::gridworld_optimal_q(m);
  for (auto& row : prefs) {
    for (double& w : row) w /= tau;
  }
  return softmax_policy(prefs);
}

/// Deterministic 4x4 gridworld, 100-step horizon, -1 per move and +10 for
/// reaching the far corner. `false_horizon` keeps the dynamics identical
/// but tells models the episode is 101 steps long, so every value
/// prediction near the end of an episode is shifted by one phantom step.
inline DomainSpec build_gridworld(bool false_horizon, int behavior_index = 4,
                                  int eval_index = 5) {
  DomainSpec d;
  d.name = false_horizon ? "gridworld-fh" : "gridworld-th";
  d.mdp = detail::gridworld_mdp();
  d.observation_map = detail::identity_map(d.mdp.num_states);
  d.num_observed_states = d.mdp.num_states;
  d.behavior = gridworld_policy(behavior_index);
  d.evaluation = gridworld_policy(eval_index);
  d.model_horizon = d.mdp.horizon + (false_horizon ? 1 : 0);
  return d;
}

/// The hidden-structure domain chained into the observable one: two steps
/// of build_modelfail dynamics (aggregated in the observations), whose exit
/// drops into the build_modelwin loop for twenty more steps. A model is
/// wrong about the prefix and right about the suffix, so neither a pure
/// model nor pure importance sampling is the best blend.
inline DomainSpec build_hybrid() {
  DomainSpec d;
  d.name = "hybrid";
  TabularMDP& m = d.mdp;
  m.num_states = 7;  // mf-start, mf-good, mf-bad, s1, s2, s3, terminal
  m.num_actions = 2;
  m.gamma = 1.0;
  m.horizon = 22;
  m.reward_min = -1.0;
  m.reward_max = 1.0;
  m.initial.assign(7, 0.0);
  m.initial[0] = 1.0;
  m.trans.assign(static_cast<std::size_t>(7) * 2 * 7, 0.0);
  m.reward.assign(static_cast<std::size_t>(7) * 2 * 7, 0.0);
  const int mf_start = 0, mf_good = 1, mf_bad = 2, s1 = 3, s2 = 4, s3 = 5, term = 6;
  m.trans[m.sa(mf_start, 0) + mf_good] = 1.0;
  m.trans[m.sa(mf_start, 1) + mf_bad] = 1.0;
  m.trans[m.sa(s1, 0) + s2] = 0.4;
  m.trans[m.sa(s1, 0) + s3] = 0.6;
  m.trans[m.sa(s1, 1) + s2] = 0.6;
  m.trans[m.sa(s1, 1) + s3] = 0.4;
  for (int a = 0; a < 2; ++a) {
    m.trans[m.sa(mf_good, a) + s1] = 1.0;
    m.reward[m.sa(mf_good, a) + s1] = 1.0;
    m.trans[m.sa(mf_bad, a) + s1] = 1.0;
    m.reward[m.sa(mf_bad, a) + s1] = -1.0;
    m.reward[m.sa(s1, a) + s2] = 1.0;
    m.reward[m.sa(s1, a) + s3] = -1.0;
    m.trans[m.sa(s2, a) + s1] = 1.0;
    m.trans[m.sa(s3, a) + s1] = 1.0;
    m.trans[m.sa(term, a) + term] = 1.0;
  }
  m.validate();

  // The three prefix states collapse to one observation; the loop states
  // are fully visible.
  d.observation_map = {0, 0, 0, 1, 2, 3, 4};
  d.num_observed_states = 5;
  d.behavior = softmax_policy(
      {{1.0, -1.0}, {1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}});
  d.evaluation = softmax_policy(
      {{-1.0, 1.0}, {0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}});
  d.model_horizon = m.horizon;
  return d;
}

inline std::vector<std::string> domain_names() {
  return {"modelfail", "modelwin", "gridworld-th", "gridworld-fh", "hybrid"};
}

inline DomainSpec domain_by_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "modelfail") return build_modelfail();
  if (lower == "modelwin") return build_modelwin();
  if (lower == "gridworld-th") return build_gridworld(false);
  if (lower == "gridworld-fh") return build_gridworld(true);
  if (lower == "hybrid") return build_hybrid();
  throw std::invalid_argument("unknown domain '" + std::string(name) +
                              "'; expected one of modelfail, modelwin, gridworld-th, "
                              "gridworld-fh, hybrid");
}

}  // namespace ope
