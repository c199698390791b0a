#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pst/chain.hpp"
#include "pst/dynamics.hpp"
#include "pst/nelder_mead.hpp"
#include "pst/parallel.hpp"
#include "pst/random.hpp"
#include "pst/reachability.hpp"
#include "pst/spectral.hpp"

namespace pst {

/// Ties couplings of a ring so that both paths from source to target read the
/// same forwards and backwards.
struct PathSymmetry {
  int source = 1;
  int target = 2;
  bool enabled = true;
};

struct OptimizationConfig {
  double j_min = 1e-3;
  double j_max = 10.0;
  int restarts = 32;
  int max_evals = 4000;
  std::uint64_t seed = 0;
  /// Fixed retrieval time; empty means (J, t) are optimized jointly over (0, t_max].
  std::optional<double> retrieval_time = std::numbers::pi;
  double t_max = 2.0 * std::numbers::pi;
  std::optional<PathSymmetry> symmetry;
  double success_threshold = 1.0 - 1e-9;
  /// Skip remaining restarts once one reaches success_threshold. The result
  /// equals that of running the restarts sequentially and stopping there.
  bool stop_on_success = false;
};

inline constexpr double kFidelityTie = 1e-12;

struct RestartSummary {
  int index = 0;
  double fidelity = 0.0;
  double time = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> couplings;
};

struct OptimizationResult {
  CouplingProfile best_profile;
  double best_fidelity = 0.0;
  double best_time = 0.0;
  long evaluations = 0;
  std::vector<RestartSummary> per_restart;
};

/// Coupling indices (1-based) along the two ring paths from source to target:
/// clockwise (J_m, J_{m+1}, ...) and anticlockwise (J_{m-1}, J_{m-2}, ...),
/// each listed in traversal order from the source.
inline std::pair<std::vector<int>, std::vector<int>> ring_paths(int n_sites, int source, int target) {
  require_site(n_sites, source, "source");
  require_site(n_sites, target, "target");
  if (source == target) throw DomainError("path symmetry needs distinct source and target");
  auto wrap = [n_sites](int k) { return ((k - 1) % n_sites + n_sites) % n_sites + 1; };
  std::vector<int> clockwise, anticlockwise;
  for (int site = source; site != target; site = wrap(site + 1)) clockwise.push_back(site);
  for (int site = source; site != target; site = wrap(site - 1)) anticlockwise.push_back(wrap(site - 1));
  return {clockwise, anticlockwise};
}

inline int reduced_dimension(int n_sites, const PathSymmetry& sym) {
  const auto [a, b] = ring_paths(n_sites, sym.source, sym.target);
  return static_cast<int>((a.size() + 1) / 2 + (b.size() + 1) / 2);
}

/// Expands (clockwise half, anticlockwise half) into the full ring coupling
/// vector with each path palindromic.
inline std::vector<double> apply_symmetry(std::span<const double> reduced, int n_sites, Geometry geometry,
                                          const PathSymmetry& sym) {
  if (geometry != Geometry::Closed) throw DomainError("path symmetry applies to closed chains only");
  const auto [cw, acw] = ring_paths(n_sites, sym.source, sym.target);
  const std::size_t h1 = (cw.size() + 1) / 2, h2 = (acw.size() + 1) / 2;
  if (reduced.size() != h1 + h2)
    throw DomainError("path-symmetric parameter vector needs " + std::to_string(h1 + h2) + " entries");
  std::vector<double> j(static_cast<std::size_t>(n_sites), 0.0);
  for (std::size_t i = 0; i < cw.size(); ++i)
    j[static_cast<std::size_t>(cw[i] - 1)] = reduced[std::min(i, cw.size() - 1 - i)];
  for (std::size_t i = 0; i < acw.size(); ++i)
    j[static_cast<std::size_t>(acw[i] - 1)] = reduced[h1 + std::min(i, acw.size() - 1 - i)];
  return j;
}

namespace detail {

struct Search {
  int n_sites;
  Geometry geometry;
  int source, target;
  const OptimizationConfig& config;
  bool symmetric;
  int coupling_params;
  bool free_time;

  std::vector<double> couplings(std::span<const double> x) const {
    std::vector<double> r(x.begin(), x.begin() + coupling_params);
    for (double& v : r) v = std::exp(v);
    if (symmetric) return apply_symmetry(r, n_sites, geometry, *config.symmetry);
    return r;
  }
  double time(std::span<const double> x) const {
    return free_time ? std::exp(x.back()) : *config.retrieval_time;
  }
  double fidelity(std::span<const double> x) const {
    const CouplingProfile p(geometry, n_sites, couplings(x));
    return pst::fidelity(p, TransferSpec{source, target, std::nullopt}, time(x));
  }
};

}  // namespace detail

/// Multi-start Nelder-Mead maximization of F(m -> n) over log-couplings (and
/// log-time in free-time mode). Restart r starts from a point drawn from an
/// mt19937_64 seeded by (seed, r) only, so restarts can run in any order.
inline OptimizationResult optimize(int n_sites, Geometry geometry, int m, int n, const OptimizationConfig& config) {
  if (!(config.j_min > 0.0 && config.j_min < config.j_max)) throw DomainError("need 0 < j_min < j_max");
  if (config.restarts < 1) throw DomainError("need at least one restart");
  if (config.retrieval_time && !(*config.retrieval_time > 0.0)) throw DomainError("retrieval time must be positive");
  if (!config.retrieval_time && !(config.t_max > 0.0)) throw DomainError("t_max must be positive");
  // Validates geometry and sizes.
  (void)CouplingProfile(geometry, n_sites, std::vector<double>(static_cast<std::size_t>(coupling_count(geometry, n_sites)), 1.0));
  require_site(n_sites, m, "source");
  require_site(n_sites, n, "target");

  const bool symmetric = config.symmetry && config.symmetry->enabled;
  if (symmetric) {
    if (geometry != Geometry::Closed) throw DomainError("path symmetry applies to closed chains only");
    if (config.symmetry->source != m || config.symmetry->target != n)
      throw DomainError("path symmetry must be declared for the optimized pair");
  }
  const int coupling_params =
      symmetric ? reduced_dimension(n_sites, *config.symmetry) : coupling_count(geometry, n_sites);
  const bool free_time = !config.retrieval_time;
  const detail::Search search{n_sites, geometry, m, n, config, symmetric, coupling_params, free_time};

  const int dim = coupling_params + (free_time ? 1 : 0);
  std::vector<double> lower(static_cast<std::size_t>(dim), std::log(config.j_min));
  std::vector<double> upper(static_cast<std::size_t>(dim), std::log(config.j_max));
  if (free_time) {
    lower.back() = std::log(config.t_max * 1e-6);
    upper.back() = std::log(config.t_max);
  }

  NelderMeadOptions nm;
  nm.max_evals = config.max_evals;

  auto run_restart = [&](int r) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    std::vector<double> x0(static_cast<std::size_t>(dim));
    for (int i = 0; i < coupling_params; ++i)
      x0[static_cast<std::size_t>(i)] = lower[static_cast<std::size_t>(i)] +
                                        (upper[static_cast<std::size_t>(i)] - lower[static_cast<std::size_t>(i)]) *
                                            detail::unit_uniform(rng);
    if (free_time) {
      // t uniform on (0, t_max]
      x0.back() = std::log(std::max(config.t_max * (1.0 - detail::unit_uniform(rng)), config.t_max * 1e-6));
    }
    const auto nmr = nelder_mead([&](const std::vector<double>& x) { return 1.0 - search.fidelity(x); }, x0,
                                 lower, upper, nm);
    RestartSummary s;
    s.index = r;
    s.fidelity = search.fidelity(nmr.x);
    s.time = search.time(nmr.x);
    s.evaluations = nmr.evaluations + 1;
    s.converged = nmr.converged;
    s.couplings = search.couplings(nmr.x);
    return s;
  };

  std::vector<RestartSummary> summaries;
  const int batch = static_cast<int>(std::max(1u, worker_count()));
  for (int start = 0; start < config.restarts; start += batch) {
    const int count = std::min(batch, config.restarts - start);
    std::vector<RestartSummary> chunk(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count),
                 [&](std::size_t i) { chunk[i] = run_restart(start + static_cast<int>(i)); });
    bool done = false;
    for (auto& s : chunk) {
      summaries.push_back(std::move(s));
      if (config.stop_on_success && summaries.back().fidelity >= config.success_threshold) {
        done = true;
        break;
      }
    }
    if (done) break;
  }

  // Fidelities within kFidelityTie are numerically indistinguishable; the
  // lower restart index wins.
  std::size_t best = 0;
  for (std::size_t i = 1; i < summaries.size(); ++i)
    if (summaries[i].fidelity > summaries[best].fidelity + kFidelityTie) best = i;

  OptimizationResult out{CouplingProfile(geometry, n_sites, summaries[best].couplings), summaries[best].fidelity,
                         summaries[best].time, 0, {}};
  for (const auto& s : summaries) out.evaluations += s.evaluations;
  out.per_restart = std::move(summaries);
  return out;
}

/// classify(), with an optimizer run attached to Undetermined verdicts.
inline ReachabilityVerdict classify_with_evidence(int n_sites, Geometry geometry, int m, int n,
                                                  const OptimizationConfig& config) {
  ReachabilityVerdict v = classify(n_sites, geometry, m, n);
  if (v.status != Reachability::Undetermined) return v;
  const auto r = optimize(n_sites, geometry, m, n, config);
  v.numerical_evidence = true;
  v.evidence = VerdictEvidence{r.best_profile, r.best_time, r.best_fidelity, static_cast<int>(r.per_restart.size())};
  return v;
}

}  // namespace pst
