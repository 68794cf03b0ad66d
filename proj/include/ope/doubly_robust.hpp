#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ope/importance.hpp"
#include "ope/model.hpp"

namespace ope {

enum class DrVariant {
  kDr,     ///< importance-weighted control variate, weights rho_t / n
  kWdr,    ///< self-normalized weights rho_t / sum_j rho_t^j
  kDrV2,   ///< kDr with the model's expected immediate reward + realized next-state value
  kWdrV2,  ///< kWdr with the same substitution
};

inline bool is_weighted(DrVariant v) { return v == DrVariant::kWdr || v == DrVariant::kWdrV2; }
inline bool is_v2(DrVariant v) { return v == DrVariant::kDrV2 || v == DrVariant::kWdrV2; }

/// Per-step weights w_t^i derived from cumulative importance weights:
/// rho_t^i / n (unweighted) or rho_t^i / sum_j rho_t^j (weighted). Column
/// t = -1 equals 1/n in both styles. A weighted column whose denominator
/// is exactly zero is zeroed out wholesale; those steps contribute nothing
/// downstream.
struct StepWeights {
  int n = 0;
  int horizon = 0;
  bool weighted = false;
  std::vector<double> w;  ///< n rows, horizon+1 columns; column 0 is t = -1

  double at(int i, int t) const {
    return w[static_cast<std::size_t>(i) * (horizon + 1) + t + 1];
  }
  double& at(int i, int t) {
    return w[static_cast<std::size_t>(i) * (horizon + 1) + t + 1];
  }
};

inline StepWeights step_weights(const WeightMatrix& rho, bool weighted) {
  StepWeights sw;
  sw.n = rho.n;
  sw.horizon = rho.horizon;
  sw.weighted = weighted;
  sw.w.assign(static_cast<std::size_t>(rho.n) * (rho.horizon + 1), 0.0);
  for (int t = -1; t < rho.horizon; ++t) {
    double denom;
    if (weighted) {
      denom = 0.0;
      for (int i = 0; i < rho.n; ++i) denom += rho.at(i, t);
    } else {
      denom = static_cast<double>(rho.n);
    }
    if (denom == 0.0) continue;  // weighted column with no mass: all zeros
    for (int i = 0; i < rho.n; ++i) sw.at(i, t) = rho.at(i, t) / denom;
  }
  return sw;
}

namespace detail {

/// Summand of the doubly robust decomposition at one step:
///   gamma^t * ( w_t (R_t - target_t) + w_{t-1} v_t(S_t) )
/// where target_t is q_t(S_t, A_t), or the v2 substitution. Every code
/// path that must agree bit-for-bit funnels through this expression.
inline double dr_step_term(double gpow, double w_t, double w_prev, double r, double target,
                           double v_t) {
  return gpow * (w_t * (r - target) + w_prev * v_t);
}

inline double dr_target(const Trajectory& traj, const ValueTables& tables, int t, double gamma,
                        bool v2, const LearnedModel* model) {
  const int s = traj.states[t];
  const int a = traj.actions[t];
  if (!v2) return tables.q_at(t, s, a);
  return model->expected_reward(s, a) + gamma * tables.v_at(t + 1, traj.states[t + 1]);
}

/// One trajectory's contribution, summed over all L steps with a single
/// accumulator in ascending t.
inline double dr_component(const Trajectory& traj, const ValueTables& tables,
                           const StepWeights& weights, int i, double gamma, bool v2,
                           const LearnedModel* model) {
  double acc = 0.0;
  double gpow = 1.0;
  for (int t = 0; t < traj.horizon(); ++t) {
    const double target = dr_target(traj, tables, t, gamma, v2, model);
    acc += dr_step_term(gpow, weights.at(i, t), weights.at(i, t - 1), traj.rewards[t], target,
                        tables.v_at(t, traj.states[t]));
    gpow *= gamma;
  }
  return acc;
}

inline void check_dr_inputs(const Dataset& data, const ValueTables& tables,
                            const WeightMatrix& rho) {
  require(rho.n == data.size() && rho.horizon == data.horizon,
          "doubly robust: weight matrix does not match the dataset");
  require(data.size() >= 1, "doubly robust: empty dataset");
  for (const Trajectory& traj : data.trajectories) {
    require(traj.horizon() == data.horizon, "doubly robust: trajectory horizon mismatch");
    for (int s : traj.states) {
      require(s >= 0 && s < tables.num_states, "doubly robust: state out of the value tables' range");
    }
    for (int a : traj.actions) {
      require(a >= 0 && a < tables.num_actions, "doubly robust: action out of the value tables' range");
    }
  }
}

}  // namespace detail

/// Doubly robust estimate over a dataset:
///   sum_i sum_t gamma^t w_t^i R_t - sum_i sum_t gamma^t (w_t^i q_t(S_t,A_t) - w_{t-1}^i v_t(S_t)),
/// with w per `variant`. The v2 variants replace q_t(S_t,A_t) by the
/// model's expected immediate reward plus gamma * v_{t+1} at the realized
/// next state, and therefore need `model`.
inline double dr_estimate(const Dataset& data, const ValueTables& tables, const WeightMatrix& rho,
                          double gamma, DrVariant variant, const LearnedModel* model = nullptr) {
  detail::check_dr_inputs(data, tables, rho);
  if (is_v2(variant)) {
    detail::require(model != nullptr, "dr_estimate: the v2 variants require the learned model");
  }
  const StepWeights weights = step_weights(rho, is_weighted(variant));
  double total = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    total += detail::dr_component(data.trajectories[i], tables, weights, i, gamma,
                                  is_v2(variant), model);
  }
  return total;
}

/// Unweighted doubly robust estimate in its backward-recursive form:
/// per trajectory, X_0 = 0 and for k = 1..L with t = L-k,
///   X_k = v_t(S_t) + ratio_t * (R_t + gamma X_{k-1} - q_t(S_t, A_t)),
/// averaged over trajectories. Algebraically identical to
/// dr_estimate(kDr); implemented independently (different recurrence and
/// arithmetic order) so the two can cross-check each other.
inline double dr_recursive(const Dataset& data, const Policy& pi_e, const ValueTables& tables,
                           double gamma) {
  detail::require(data.size() >= 1, "dr_recursive: empty dataset");
  double total = 0.0;
  for (const Trajectory& traj : data.trajectories) {
    double x = 0.0;
    for (int t = traj.horizon() - 1; t >= 0; --t) {
      const int s = traj.states[t];
      const int a = traj.actions[t];
      detail::require(traj.behavior_probs[t] > 0.0, "dr_recursive: nonpositive behavior probability");
      const double ratio = pi_e.prob(s, a) / traj.behavior_probs[t];
      x = tables.v_at(t, s) + ratio * (traj.rewards[t] + gamma * x - tables.q_at(t, s, a));
    }
    total += x;
  }
  return total / data.size();
}

/// Weighted doubly robust estimate restricted to a multiset of trajectory
/// indices (with repetition), re-normalizing the per-step denominators over
/// that multiset. `wdr_on_subset(data, ..., {0..n-1})` equals
/// dr_estimate(kWdr) exactly; resamples of bootstrap procedures reuse this.
inline double wdr_on_subset(const Dataset& data, const ValueTables& tables,
                            const WeightMatrix& rho, double gamma, std::span<const int> indices) {
  const int m = static_cast<int>(indices.size());
  detail::require(m >= 1, "wdr_on_subset: empty index set");
  const int L = data.horizon;
  std::vector<double> denom(static_cast<std::size_t>(L) + 1, 0.0);
  for (int t = -1; t < L; ++t) {
    double d = 0.0;
    for (int k = 0; k < m; ++k) d += rho.at(indices[k], t);
    denom[t + 1] = d;
  }
  double total = 0.0;
  for (int k = 0; k < m; ++k) {
    const int i = indices[k];
    const Trajectory& traj = data.trajectories[i];
    double acc = 0.0;
    double gpow = 1.0;
    for (int t = 0; t < L; ++t) {
      const double d_t = denom[t + 1];
      const double d_prev = denom[t];
      const double w_t = d_t == 0.0 ? 0.0 : rho.at(i, t) / d_t;
      const double w_prev = d_prev == 0.0 ? 0.0 : rho.at(i, t - 1) / d_prev;
      acc += detail::dr_step_term(gpow, w_t, w_prev, traj.rewards[t],
                                  tables.q_at(t, traj.states[t], traj.actions[t]),
                                  tables.v_at(t, traj.states[t]));
      gpow *= gamma;
    }
    total += acc;
  }
  return total;
}

/// Sentinel for "j = infinity" in partial-return index sets. Stored
/// distinctly so index sets print faithfully; evaluates to the full
/// doubly robust component (identical to j = L-1, whose trailing
/// correction term vanishes at the absorbing horizon boundary).
inline constexpr int kInfStep = std::numeric_limits<int>::max();

/// Ordered set of lookahead depths j for partial returns. Must start at -1
/// (pure model prediction) and end at the kInfStep sentinel (full
/// importance-weighted record), strictly increasing in between.
struct JSet {
  std::vector<int> steps;

  int size() const { return static_cast<int>(steps.size()); }

  static JSet full_range(int horizon) {
    JSet j;
    j.steps.reserve(horizon + 2);
    for (int k = -1; k < horizon; ++k) j.steps.push_back(k);
    j.steps.push_back(kInfStep);
    return j;
  }

  static JSet binary() { return JSet{{-1, kInfStep}}; }

  void validate() const {
    detail::require(steps.size() >= 2, "JSet: need at least {-1, inf}");
    detail::require(steps.front() == -1, "JSet: first entry must be -1");
    detail::require(steps.back() == kInfStep, "JSet: last entry must be the infinity sentinel");
    for (std::size_t k = 1; k < steps.size(); ++k) {
      detail::require(steps[k - 1] < steps[k], "JSet: entries must be strictly increasing");
    }
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      if (k) out += ",";
      out += steps[k] == kInfStep ? "inf" : std::to_string(steps[k]);
    }
    return out;
  }
};

/// Per-trajectory partial returns g_i^(j), one column per j in the set.
///
/// Column j blends j+1 importance-corrected real steps with the model's
/// prediction of everything after:
///   g_i^(j) = sum_{t<=j} gamma^t w_t^i R_t + gamma^{j+1} w_j^i v_{j+1}(S_{j+1})
///           - sum_{t<=j} gamma^t (w_t^i q_t(S_t,A_t) - w_{t-1}^i v_t(S_t)).
/// j = -1 reduces to w_{-1}^i v_0(S_0^i) = v_0(S_0^i)/n and the infinity
/// sentinel (equivalently any j >= L-1) to the trajectory's full doubly
/// robust component, so the last column always sums to the weighted/plain
/// doubly robust estimate for the given weight style, exactly.
struct ReturnMatrix {
  int n = 0;
  JSet j_set;
  std::vector<double> components;  ///< n rows, |J| columns

  double at(int i, int col) const {
    return components[static_cast<std::size_t>(i) * j_set.size() + col];
  }
  double& at(int i, int col) {
    return components[static_cast<std::size_t>(i) * j_set.size() + col];
  }

  /// g^(j)(D) per column: component sums in ascending trajectory order.
  std::vector<double> column_sums() const {
    std::vector<double> sums(j_set.size(), 0.0);
    for (int c = 0; c < j_set.size(); ++c) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += at(i, c);
      sums[c] = acc;
    }
    return sums;
  }
};

inline ReturnMatrix jstep_components(const Dataset& data, const ValueTables& tables,
                                     const StepWeights& weights, double gamma, const JSet& j_set) {
  j_set.validate();
  detail::require(weights.n == data.size() && weights.horizon == data.horizon,
                  "jstep_components: step weights do not match the dataset");
  const int n = data.size();
  const int L = data.horizon;
  ReturnMatrix rm;
  rm.n = n;
  rm.j_set = j_set;
  rm.components.assign(static_cast<std::size_t>(n) * j_set.size(), 0.0);

  for (int i = 0; i < n; ++i) {
    const Trajectory& traj = data.trajectories[i];
    int col = 0;
    // j = -1: no real steps, model prediction from the start state.
    rm.at(i, col++) = weights.at(i, -1) * tables.v_at(0, traj.states[0]);

    double acc = 0.0;
    double gpow = 1.0;  // gamma^t entering step t
    for (int t = 0; t < L; ++t) {
      acc += detail::dr_step_term(gpow, weights.at(i, t), weights.at(i, t - 1), traj.rewards[t],
                                  tables.q_at(t, traj.states[t], traj.actions[t]),
                                  tables.v_at(t, traj.states[t]));
      gpow *= gamma;  // now gamma^{t+1}
      if (col < j_set.size() && j_set.steps[col] == t && t < L - 1) {
        rm.at(i, col) = acc + gpow * weights.at(i, t) * tables.v_at(t + 1, traj.states[t + 1]);
        ++col;
      }
    }
    // Every remaining depth (j >= L-1, finite or the infinity sentinel) is
    // the full component: the model's contribution beyond the data horizon
    // is zero at the absorbing boundary.
    for (; col < j_set.size(); ++col) rm.at(i, col) = acc;
  }
  return rm;
}

}  // namespace ope
