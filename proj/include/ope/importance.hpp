#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ope/mdp.hpp"

namespace ope {

/// Cumulative importance weights rho_t^i = prod_{j<=t} pi_e(A_j|S_j) / pi_b(A_j|S_j)
/// for every trajectory i and step t, with the convention rho_{-1} = 1
/// stored as an extra leading column.
struct WeightMatrix {
  int n = 0;
  int horizon = 0;
  std::vector<double> rho;  ///< n rows, horizon+1 columns; column 0 is t = -1

  /// rho_t for trajectory i; t may be -1.
  double at(int i, int t) const {
    return rho[static_cast<std::size_t>(i) * (horizon + 1) + t + 1];
  }
  double& at(int i, int t) {
    return rho[static_cast<std::size_t>(i) * (horizon + 1) + t + 1];
  }
};

/// Build the weight matrix for an evaluation policy. Behavior probabilities
/// come from the stored per-step records; a nonpositive stored probability
/// is a corrupt dataset and raises an error naming the offending step.
inline WeightMatrix importance_weights(const Dataset& data, const Policy& pi_e) {
  WeightMatrix w;
  w.n = data.size();
  w.horizon = data.horizon;
  w.rho.assign(static_cast<std::size_t>(w.n) * (w.horizon + 1), 0.0);
  for (int i = 0; i < w.n; ++i) {
    const Trajectory& traj = data.trajectories[i];
    detail::require(traj.horizon() == data.horizon,
                    "importance_weights: trajectory " + std::to_string(i) +
                        " does not match the dataset horizon");
    double rho = 1.0;
    w.at(i, -1) = rho;
    for (int t = 0; t < w.horizon; ++t) {
      const double pb = traj.behavior_probs[t];
      detail::require(pb > 0.0, "importance_weights: nonpositive behavior probability at trajectory " +
                                    std::to_string(i) + ", step " + std::to_string(t));
      const int s = traj.states[t];
      detail::require(s >= 0 && s < pi_e.num_states && traj.actions[t] >= 0 &&
                          traj.actions[t] < pi_e.num_actions,
                      "importance_weights: state/action out of the evaluation policy's range");
      rho *= pi_e.prob(s, traj.actions[t]) / pb;
      w.at(i, t) = rho;
    }
  }
  return w;
}

enum class IsVariant {
  kIs,      ///< plain importance sampling over full-episode weights
  kPdis,    ///< per-decision importance sampling
  kWis,     ///< weighted (self-normalized) importance sampling
  kCwpdis,  ///< consistent weighted per-decision importance sampling
};

/// Side-channel notes from an importance-sampling estimate.
struct IsDiagnostics {
  /// A normalization denominator was exactly zero; the estimate fell back
  /// to 0 for the affected step(s) (all of them, for WIS).
  bool zero_denominator = false;
};

/// The four importance-sampling baselines. All average in fixed trajectory
/// order so results are reproducible bit-for-bit.
inline double is_estimate(const Dataset& data, const WeightMatrix& weights, double gamma,
                          IsVariant variant, IsDiagnostics* diag = nullptr) {
  detail::require(weights.n == data.size() && weights.horizon == data.horizon,
                  "is_estimate: weight matrix does not match the dataset");
  const int n = data.size();
  const int L = data.horizon;
  detail::require(n >= 1, "is_estimate: empty dataset");
  if (diag) *diag = IsDiagnostics{};

  switch (variant) {
    case IsVariant::kIs: {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        total += weights.at(i, L - 1) * episode_return(data.trajectories[i], gamma);
      }
      return total / n;
    }
    case IsVariant::kPdis: {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const Trajectory& traj = data.trajectories[i];
        double g = 1.0;
        double acc = 0.0;
        for (int t = 0; t < L; ++t) {
          acc += g * weights.at(i, t) * traj.rewards[t];
          g *= gamma;
        }
        total += acc;
      }
      return total / n;
    }
    case IsVariant::kWis: {
      double denom = 0.0;
      for (int i = 0; i < n; ++i) denom += weights.at(i, L - 1);
      if (denom == 0.0) {
        if (diag) diag->zero_denominator = true;
        return 0.0;
      }
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        total += (weights.at(i, L - 1) / denom) * episode_return(data.trajectories[i], gamma);
      }
      return total;
    }
    case IsVariant::kCwpdis: {
      double total = 0.0;
      double g = 1.0;
      for (int t = 0; t < L; ++t) {
        double denom = 0.0;
        double num = 0.0;
        for (int i = 0; i < n; ++i) {
          const double rho = weights.at(i, t);
          denom += rho;
          num += rho * data.trajectories[i].rewards[t];
        }
        if (denom == 0.0) {
          if (diag) diag->zero_denominator = true;
        } else {
          total += g * (num / denom);
        }
        g *= gamma;
      }
      return total;
    }
  }
  throw std::logic_error("is_estimate: unknown variant");
}

}  // namespace ope
