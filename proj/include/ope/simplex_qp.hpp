#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ope/errors.hpp"

namespace ope {

/// Euclidean projection onto the probability simplex
/// { x : x_k >= 0, sum_k x_k = 1 }, via the sort-and-threshold method.
inline void project_to_simplex(std::span<double> x) {
  const std::size_t d = x.size();
  std::vector<double> u(x.begin(), x.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = u[0] - 1.0;  // d == 1 projects to {1}
  for (std::size_t k = 0; k < d; ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (double& v : x) v = std::max(v - theta, 0.0);
}

struct SimplexQpOptions {
  double grad_tol = 1e-10;  ///< stop when the projected-gradient norm drops below this
  int max_iters = 100000;
};

namespace detail {

inline void sym_matvec(const std::vector<double>& a, int d, const std::vector<double>& x,
                       std::vector<double>& out) {
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    const double* row = a.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

inline double quad_form(const std::vector<double>& a, int d, const std::vector<double>& x) {
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    const double* row = a.data() + static_cast<std::size_t>(i) * d;
    double rowdot = 0.0;
    for (int j = 0; j < d; ++j) rowdot += row[j] * x[j];
    acc += x[i] * rowdot;
  }
  return acc;
}

/// LDL^T pivots of a symmetric matrix; returns false if any pivot falls
/// below -tol (genuine indefiniteness rather than rounding dust).
inline bool psd_within_tolerance(const std::vector<double>& a, int d, double tol) {
  std::vector<double> lower(static_cast<std::size_t>(d) * d, 0.0);  // unit lower factor
  std::vector<double> pivots(d, 0.0);
  for (int j = 0; j < d; ++j) {
    double pivot = a[static_cast<std::size_t>(j) * d + j];
    for (int k = 0; k < j; ++k) {
      const double ljk = lower[static_cast<std::size_t>(j) * d + k];
      pivot -= ljk * ljk * pivots[k];
    }
    if (pivot < -tol) return false;
    pivots[j] = pivot;
    if (pivot <= tol) {
      // Zero pivot: PSD only if the reduced column is (numerically) zero
      // too; otherwise the matrix has a negative direction.
      for (int i = j + 1; i < d; ++i) {
        double lij = a[static_cast<std::size_t>(i) * d + j];
        for (int k = 0; k < j; ++k) {
          lij -= lower[static_cast<std::size_t>(i) * d + k] *
                 lower[static_cast<std::size_t>(j) * d + k] * pivots[k];
        }
        if (std::abs(lij) > std::sqrt(tol)) return false;
      }
      continue;
    }
    for (int i = j + 1; i < d; ++i) {
      double lij = a[static_cast<std::size_t>(i) * d + j];
      for (int k = 0; k < j; ++k) {
        lij -= lower[static_cast<std::size_t>(i) * d + k] *
               lower[static_cast<std::size_t>(j) * d + k] * pivots[k];
      }
      lower[static_cast<std::size_t>(i) * d + j] = lij / pivot;
    }
  }
  return true;
}

inline double spectral_norm_estimate(const std::vector<double>& a, int d) {
  std::vector<double> v(d);
  for (int i = 0; i < d; ++i) v[i] = 1.0 + 0.01 * (i + 1);  // deterministic start
  std::vector<double> av(d);
  double lambda = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    sym_matvec(a, d, v, av);
    double norm = 0.0;
    for (double t : av) norm += t * t;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (int i = 0; i < d; ++i) v[i] = av[i] / norm;
    lambda = norm;
  }
  return lambda;
}

}  // namespace detail

/// Minimize x^T A x over the probability simplex by accelerated projected
/// gradient descent from the uniform start.
///
/// `a` is a dense row-major d*d matrix; it is symmetrized as (A + A^T)/2,
/// and if an LDL^T sweep detects real indefiniteness the diagonal is
/// lifted by 1e-12 * scale until the sweep passes. Iterations stop when
/// the projected-gradient norm drops below options.grad_tol or after
/// options.max_iters. Ties between multiple minimizers are resolved by the
/// deterministic start and step sequence.
inline std::vector<double> solve_simplex_qp(std::vector<double> a, int d,
                                            SimplexQpOptions options = {}) {
  detail::require(d >= 1, "solve_simplex_qp: dimension must be positive");
  detail::require(a.size() == static_cast<std::size_t>(d) * d,
                  "solve_simplex_qp: matrix size does not match the dimension");
  // Symmetrize.
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double m = 0.5 * (a[static_cast<std::size_t>(i) * d + j] +
                              a[static_cast<std::size_t>(j) * d + i]);
      a[static_cast<std::size_t>(i) * d + j] = m;
      a[static_cast<std::size_t>(j) * d + i] = m;
    }
  }
  double scale = 0.0;
  for (int i = 0; i < d; ++i) scale = std::max(scale, std::abs(a[static_cast<std::size_t>(i) * d + i]));
  scale = std::max(scale, 1.0);
  // PSD repair: covariance-plus-rank-one inputs are PSD up to rounding, so
  // this almost never fires; a tiny lift changes the objective by at most
  // lift * ||x||^2 <= lift.
  double lift = 1e-12 * scale;
  for (int attempt = 0; attempt < 8 && !detail::psd_within_tolerance(a, d, 1e-12 * scale); ++attempt) {
    for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i) * d + i] += lift;
    lift *= 10.0;
  }

  if (d == 1) return {1.0};

  const double lam_max = detail::spectral_norm_estimate(a, d);
  const double step = lam_max > 0.0 ? 1.0 / (2.0 * lam_max) : 1.0;

  std::vector<double> x(d, 1.0 / d);
  std::vector<double> y = x;
  std::vector<double> x_prev = x;
  std::vector<double> grad(d), trial(d);
  double t_momentum = 1.0;
  double f_x = detail::quad_form(a, d, x);

  for (int iter = 0; iter < options.max_iters; ++iter) {
    // Gradient step from the extrapolated point.
    detail::sym_matvec(a, d, y, grad);
    for (int i = 0; i < d; ++i) trial[i] = y[i] - step * 2.0 * grad[i];
    project_to_simplex(trial);
    double f_trial = detail::quad_form(a, d, trial);

    if (f_trial > f_x) {
      // Momentum overshot: restart from the best point.
      detail::sym_matvec(a, d, x, grad);
      for (int i = 0; i < d; ++i) trial[i] = x[i] - step * 2.0 * grad[i];
      project_to_simplex(trial);
      f_trial = detail::quad_form(a, d, trial);
      t_momentum = 1.0;
    }

    x_prev.swap(x);
    x = trial;
    f_x = f_trial;

    // Projected-gradient norm at the new point.
    detail::sym_matvec(a, d, x, grad);
    double pg_norm_sq = 0.0;
    for (int i = 0; i < d; ++i) trial[i] = x[i] - step * 2.0 * grad[i];
    project_to_simplex(trial);
    for (int i = 0; i < d; ++i) {
      const double g = (x[i] - trial[i]) / step;
      pg_norm_sq += g * g;
    }
    if (std::sqrt(pg_norm_sq) < options.grad_tol) break;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    const double beta = (t_momentum - 1.0) / t_next;
    for (int i = 0; i < d; ++i) y[i] = x[i] + beta * (x[i] - x_prev[i]);
    t_momentum = t_next;
  }
  return x;
}

}  // namespace ope
