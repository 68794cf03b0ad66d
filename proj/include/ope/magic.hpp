#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ope/doubly_robust.hpp"
#include "ope/rng.hpp"
#include "ope/simplex_qp.hpp"

namespace ope {

/// Dense symmetric matrix of estimated covariances between partial-return
/// columns.
struct CovMatrix {
  int dim = 0;
  std::vector<double> m;  ///< dim x dim, row-major

  double at(int i, int j) const { return m[static_cast<std::size_t>(i) * dim + j]; }
  double& at(int i, int j) { return m[static_cast<std::size_t>(i) * dim + j]; }
};

/// Sample covariance of the column-sum estimators:
///   Omega(a, b) = n/(n-1) sum_k (g_k^a - mean^a)(g_k^b - mean^b),
/// where g_k are per-trajectory components. The n/(n-1) scaling makes this
/// an estimate of the covariance of the column sums themselves.
inline CovMatrix sample_covariance(const ReturnMatrix& rm) {
  const int n = rm.n;
  const int d = rm.j_set.size();
  detail::require(n >= 2, "sample_covariance: need at least two trajectories");
  std::vector<double> mean(d, 0.0);
  for (int c = 0; c < d; ++c) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rm.at(i, c);
    mean[c] = acc / n;
  }
  CovMatrix cov;
  cov.dim = d;
  cov.m.assign(static_cast<std::size_t>(d) * d, 0.0);
  const double scale = static_cast<double>(n) / (n - 1);
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += (rm.at(i, a) - mean[a]) * (rm.at(i, b) - mean[b]);
      const double v = scale * acc;
      cov.at(a, b) = v;
      cov.at(b, a) = v;
    }
  }
  return cov;
}

struct ConfInterval {
  double lower = 0.0;
  double upper = 0.0;
};

struct MagicConfig {
  int kappa = 200;    ///< bootstrap resamples
  double delta = 0.1; ///< interval miss probability (90% interval by default)
  /// Known bound on the absolute per-step reward of the environment; when
  /// absent the largest |R_t| observed in the estimation set stands in.
  std::optional<double> reward_bound;
  /// Hard override of the concentration scale xi; supersedes everything.
  std::optional<double> xi_override;
};

/// Concentration scale for the coarse interval clamp:
///   xi = (2L+1) * max(reward scale, max |r_hat|) * max_t (sum_i rho_t^i) / n.
/// Deliberately loose; it only guards against pathological bootstrap
/// intervals and almost never binds.
inline double chernoff_scale(const Dataset& data, const LearnedModel& model,
                             const WeightMatrix& rho, const MagicConfig& config) {
  if (config.xi_override) return *config.xi_override;
  double reward_scale = model.max_abs_reward();
  if (config.reward_bound) {
    reward_scale = std::max(reward_scale, *config.reward_bound);
  } else {
    for (const Trajectory& traj : data.trajectories) {
      for (double r : traj.rewards) reward_scale = std::max(reward_scale, std::abs(r));
    }
  }
  double max_mean_rho = 0.0;
  for (int t = -1; t < rho.horizon; ++t) {
    double sum = 0.0;
    for (int i = 0; i < rho.n; ++i) sum += rho.at(i, t);
    max_mean_rho = std::max(max_mean_rho, sum / rho.n);
  }
  return (2.0 * data.horizon + 1.0) * reward_scale * max_mean_rho;
}

/// Percentile-bootstrap confidence interval for the weighted doubly robust
/// estimate. kappa resamples (with replacement, denominators recomputed per
/// resample) are scored and sorted; the interval is the [5%, 95%] order
/// statistics of the scores, widened to include the point estimate, then
/// clamped to the concentration band wdr +- xi * sqrt(ln(2/delta) / (2n)).
///
/// Resample r draws from stream.child(r), so results do not depend on
/// evaluation order.
inline ConfInterval bootstrap_ci(const Dataset& data, const ValueTables& tables,
                                 const WeightMatrix& rho, double gamma, double wdr_full,
                                 int kappa, double delta, double xi, const Rng& stream) {
  detail::require(kappa >= 1, "bootstrap_ci: kappa must be >= 1");
  detail::require(delta > 0.0 && delta < 1.0, "bootstrap_ci: delta must be in (0, 1)");
  const int n = data.size();
  detail::require(n >= 1, "bootstrap_ci: empty dataset");

  std::vector<double> scores(kappa, 0.0);
  std::vector<int> indices(n);
  for (int r = 0; r < kappa; ++r) {
    Rng rng = stream.child(static_cast<std::uint64_t>(r));
    for (int k = 0; k < n; ++k) indices[k] = rng.uniform_int(n);
    scores[r] = wdr_on_subset(data, tables, rho, gamma, indices);
  }
  std::sort(scores.begin(), scores.end());

  // 1-based order statistics floor(0.05 kappa) and ceil(0.95 kappa),
  // clamped into the valid range.
  const int lo_index = std::clamp(static_cast<int>(std::floor(0.05 * kappa)), 1, kappa);
  const int hi_index = std::clamp(static_cast<int>(std::ceil(0.95 * kappa)), 1, kappa);
  ConfInterval ci;
  ci.lower = std::min(wdr_full, scores[lo_index - 1]);
  ci.upper = std::max(wdr_full, scores[hi_index - 1]);

  const double half_width = xi * std::sqrt(std::log(2.0 / delta) / (2.0 * n));
  ci.lower = std::max(ci.lower, wdr_full - half_width);
  ci.upper = std::min(ci.upper, wdr_full + half_width);
  return ci;
}

/// Per-column bias guess: the distance from each column-sum estimate to the
/// confidence interval (zero inside it). The last column is the weighted
/// doubly robust estimate itself and therefore always gets zero bias.
inline std::vector<double> bias_vector(const std::vector<double>& column_sums,
                                       const ConfInterval& ci) {
  std::vector<double> b(column_sums.size(), 0.0);
  for (std::size_t k = 0; k < column_sums.size(); ++k) {
    const double g = column_sums[k];
    if (g > ci.upper) {
      b[k] = g - ci.upper;
    } else if (g < ci.lower) {
      b[k] = g - ci.lower;
    }
  }
  return b;
}

struct BlendWeights {
  std::vector<double> x;  ///< simplex point, one weight per column
};

struct MagicResult {
  double estimate = 0.0;
  std::vector<double> column_sums;  ///< g^(j)(D) per column of the index set
  BlendWeights blend;
  CovMatrix omega;
  std::vector<double> bias;
  ConfInterval ci;
  double xi = 0.0;
  double g_min = 0.0;  ///< min over column sums (the estimate is inside [g_min, g_max])
  double g_max = 0.0;
};

/// Model-and-guided-importance-combining estimator: build the partial-return
/// matrix over `j_set` with self-normalized step weights, estimate the
/// covariance of the column sums plus an outer product of the bias guesses,
/// and blend the columns with the simplex weighting that minimizes that
/// estimated mean squared error:
///   x* = argmin_{simplex} x^T [Omega + b b^T] x,   estimate = x* . g.
inline MagicResult magic_estimate(const Dataset& data, const Policy& pi_e,
                                  const LearnedModel& model, const ValueTables& tables,
                                  const JSet& j_set, const MagicConfig& config, double gamma,
                                  const Rng& stream) {
  j_set.validate();
  detail::require(data.size() >= 2, "magic_estimate: need at least two trajectories");

  const WeightMatrix rho = importance_weights(data, pi_e);
  const StepWeights weights = step_weights(rho, /*weighted=*/true);
  const ReturnMatrix rm = jstep_components(data, tables, weights, gamma, j_set);

  MagicResult result;
  result.column_sums = rm.column_sums();
  const double wdr = result.column_sums.back();

  result.xi = chernoff_scale(data, model, rho, config);
  result.ci = bootstrap_ci(data, tables, rho, gamma, wdr, config.kappa, config.delta, result.xi,
                           stream);
  result.bias = bias_vector(result.column_sums, result.ci);

  CovMatrix a = sample_covariance(rm);
  result.omega = a;
  const int d = a.dim;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a.at(i, j) += result.bias[i] * result.bias[j];
  }
  result.blend.x = solve_simplex_qp(std::move(a.m), d);

  double estimate = 0.0;
  for (int c = 0; c < d; ++c) estimate += result.blend.x[c] * result.column_sums[c];
  result.estimate = estimate;
  const auto [mn, mx] = std::minmax_element(result.column_sums.begin(), result.column_sums.end());
  result.g_min = *mn;
  result.g_max = *mx;
  return result;
}

}  // namespace ope
