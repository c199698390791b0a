#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace pst {

struct NelderMeadOptions {
  int max_evals = 4000;
  /// Converged when the simplex spread in f is below f_tol and its diameter
  /// below x_tol.
  double f_tol = 1e-16;
  double x_tol = 1e-10;
  double initial_step = 0.5;
  /// Fresh simplices built around the incumbent after convergence; guards
  /// against the simplex collapsing onto a non-stationary point.
  int polish_rounds = 3;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

/// Box-constrained Nelder-Mead with the dimension-adaptive coefficients of
/// Gao and Han. Trial points are projected onto [lower, upper].
template <class Objective>
NelderMeadResult nelder_mead(Objective&& objective, std::vector<double> x0, std::span<const double> lower,
                             std::span<const double> upper, const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  const double dim = static_cast<double>(std::max<std::size_t>(n, 1));
  const double alpha = 1.0;
  const double gamma = 1.0 + 2.0 / dim;
  const double rho = 0.75 - 1.0 / (2.0 * dim);
  const double sigma = 1.0 - 1.0 / dim;

  NelderMeadResult res;
  auto project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  };
  auto eval = [&](std::vector<double>& x) {
    project(x);
    ++res.evaluations;
    const double f = objective(std::as_const(x));
    return std::isfinite(f) ? f : std::numeric_limits<double>::max();
  };

  project(x0);
  res.x = x0;
  res.f = eval(x0);
  if (n == 0) {
    res.converged = true;
    return res;
  }

  double step = opt.initial_step;
  for (int round = 0; round <= opt.polish_rounds && res.evaluations < opt.max_evals; ++round) {
    std::vector<std::vector<double>> simplex(n + 1, res.x);
    std::vector<double> fv(n + 1, res.f);
    for (std::size_t i = 0; i < n; ++i) {
      auto& v = simplex[i + 1];
      // Step inward when the incumbent sits on the upper bound.
      v[i] += (v[i] + step <= upper[i]) ? step : -step;
      fv[i + 1] = eval(v);
    }

    std::vector<std::size_t> idx(n + 1);
    bool converged = false;
    while (res.evaluations < opt.max_evals) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
      const std::size_t best = idx.front(), worst = idx.back(), second = idx[n - 1];

      double diameter = 0.0;
      for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t i = 0; i < n; ++i)
          diameter = std::max(diameter, std::abs(simplex[idx[k]][i] - simplex[best][i]));
      if (fv[worst] - fv[best] <= opt.f_tol && diameter <= opt.x_tol) {
        converged = true;
        break;
      }
      if (diameter <= 1e-15) {
        converged = true;
        break;
      }

      std::vector<double> centroid(n, 0.0);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[idx[k]][i] / dim;

      auto along = [&](double coeff) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + coeff * (simplex[worst][i] - centroid[i]);
        return p;
      };

      std::vector<double> xr = along(-alpha);
      const double fr = eval(xr);
      if (fr < fv[best]) {
        std::vector<double> xe = along(-alpha * gamma);
        const double fe = eval(xe);
        if (fe < fr) {
          simplex[worst] = std::move(xe);
          fv[worst] = fe;
        } else {
          simplex[worst] = std::move(xr);
          fv[worst] = fr;
        }
        continue;
      }
      if (fr < fv[second]) {
        simplex[worst] = std::move(xr);
        fv[worst] = fr;
        continue;
      }
      const bool outside = fr < fv[worst];
      std::vector<double> xc = along(outside ? -alpha * rho : rho);
      const double fc = eval(xc);
      if (fc < (outside ? fr : fv[worst])) {
        simplex[worst] = std::move(xc);
        fv[worst] = fc;
        continue;
      }
      for (std::size_t k = 1; k <= n; ++k) {
        auto& v = simplex[idx[k]];
        for (std::size_t i = 0; i < n; ++i) v[i] = simplex[best][i] + sigma * (v[i] - simplex[best][i]);
        fv[idx[k]] = eval(v);
      }
    }

    const auto best_it = std::min_element(fv.begin(), fv.end());
    const double previous = res.f;
    if (*best_it < res.f) {
      res.f = *best_it;
      res.x = simplex[static_cast<std::size_t>(best_it - fv.begin())];
    }
    res.converged = converged;
    if (!converged) break;
    if (round > 0 && !(res.f < previous)) break;
    step *= 0.1;
  }
  return res;
}

}  // namespace pst
