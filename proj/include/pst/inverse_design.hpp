#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pst/chain.hpp"
#include "pst/dynamics.hpp"
#include "pst/parallel.hpp"
#include "pst/polynomial.hpp"
#include "pst/random.hpp"
#include "pst/reachability.hpp"
#include "pst/spectral.hpp"

namespace pst {

/// Lanczos broke down: the prescribed spectrum admits no Jacobi matrix with
/// the required first-component weights.
class ReconstructionError : public DomainError {
 public:
  ReconstructionError(int pivot, double value)
      : DomainError("Jacobi reconstruction broke down at pivot " + std::to_string(pivot) + " (beta = " +
                    std::to_string(value) + ")"),
        pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// Open chain with the given spectrum and a palindromic coupling vector.
///
/// A persymmetric Jacobi matrix has first-component weights
///   w_i proportional to 1 / prod_{j != i} |E_i - E_j|,
/// and the matrix follows from (diag(E), sqrt(w)) by Lanczos tridiagonalization.
inline CouplingProfile solve_mirror(int n_sites, std::span<const double> spectrum) {
  if (n_sites < 2) throw DomainError("need at least 2 sites");
  if (static_cast<int>(spectrum.size()) != n_sites)
    throw DomainError("spectrum must have exactly N = " + std::to_string(n_sites) + " values");
  const std::size_t n = spectrum.size();
  double scale = 0.0;
  for (double e : spectrum) {
    if (!std::isfinite(e)) throw DomainError("spectrum values must be finite");
    scale = std::max(scale, std::abs(e));
  }
  if (scale == 0.0) throw DomainError("spectrum must not be identically zero");
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && !(spectrum[i] - spectrum[i - 1] > 1e-12 * scale))
      throw DomainError("spectrum must be strictly increasing");
    if (std::abs(spectrum[i] + spectrum[n - 1 - i]) > 1e-10 * scale)
      throw DomainError("spectrum must be symmetric about zero");
  }

  Eigen::VectorXd log_w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) s -= std::log(std::abs(spectrum[i] - spectrum[j]));
    log_w(static_cast<Eigen::Index>(i)) = s;
  }
  Eigen::VectorXd q = (log_w.array() - log_w.maxCoeff()).exp().sqrt();
  q.normalize();

  const Eigen::Map<const Eigen::VectorXd> lambda(spectrum.data(), static_cast<Eigen::Index>(n));
  const Eigen::Index dim = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd basis(dim, dim);
  basis.col(0) = q;
  std::vector<double> beta;
  for (Eigen::Index k = 0; k + 1 < dim; ++k) {
    Eigen::VectorXd z = lambda.cwiseProduct(basis.col(k));
    // Full reorthogonalization, twice.
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j <= k; ++j) z -= basis.col(j).dot(z) * basis.col(j);
    const double b = z.norm();
    if (!(b > 1e-10 * scale)) throw ReconstructionError(static_cast<int>(k + 1), b);
    beta.push_back(b);
    basis.col(k + 1) = z / b;
  }
  for (std::size_t i = 0; i < beta.size() / 2; ++i) {
    const double avg = 0.5 * (beta[i] + beta[beta.size() - 1 - i]);
    beta[i] = beta[beta.size() - 1 - i] = avg;
  }

  CouplingProfile profile(Geometry::Open, n_sites, beta);
  const auto spec = decompose(build_hamiltonian(profile));
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(spec.eigenvalues(static_cast<Eigen::Index>(i)) - spectrum[i]));
  if (worst > 1e-8 * std::max(1.0, scale))
    throw DomainError("mirror reconstruction residual " + std::to_string(worst) + " exceeds tolerance");
  return profile;
}

/// Integer spectrum E_i = base_unit * k_i in one of the two PST time classes:
/// all integers with t* = pi / g, or all odd integers with t* = pi / (2 g).
enum class TimeClass { Integer, Odd };

inline std::string_view to_string(TimeClass c) { return c == TimeClass::Integer ? "pi" : "pi/2"; }

struct IntegerSpectrumCandidate {
  std::vector<int> integers;
  double base_unit = 1.0;
  TimeClass time_class = TimeClass::Integer;

  double retrieval_time() const {
    return (time_class == TimeClass::Integer ? std::numbers::pi : std::numbers::pi / 2) / base_unit;
  }
  std::vector<double> energies() const {
    std::vector<double> e;
    for (int k : integers) e.push_back(base_unit * k);
    return e;
  }
  int max_abs() const {
    int m = 0;
    for (int k : integers) m = std::max(m, std::abs(k));
    return m;
  }
};

/// signs[i] is the energy-polynomial sign class of eigenvalue i (ascending),
/// i.e. its eigenvector satisfies v_target = -signs[i] * v_source.
struct DesignProblem {
  int sites = 0;
  Geometry geometry = Geometry::Open;
  int source = 1;
  int target = 2;
  IntegerSpectrumCandidate spectrum;
  std::vector<int> signs;
};

struct DesignSolution {
  std::optional<CouplingProfile> profile;
  /// Final max-norm residual from each start, in start order.
  std::vector<double> start_residuals;
  double best_residual = std::numeric_limits<double>::infinity();
  /// Fidelity at the implied t* (when a profile was found).
  double fidelity = 0.0;
  /// Starts that converged only by driving a coupling toward zero.
  int decoupled_starts = 0;
  /// Why no profile came back: "infeasible-sign-split" when the sign pattern
  /// overflows a polynomial's degree, "no-solution" when every start stalled
  /// above tolerance or ran into the decoupled limit, "phase-misaligned" when
  /// a solution exists but does not transfer at t*.
  std::string failure;
};

/// Solutions with min J / max J below this are chains split into independent
/// pieces (the residuals vanish only as a coupling goes to zero); they do not
/// count as designs.
inline constexpr double kMinCouplingRatio = 1e-4;

/// Sign pattern forced by phase alignment at t*: the amplitude is
/// -sum_i s_i |v_im|^2 exp(-i E_i t*), so s_i exp(-i E_i t*) must share one
/// phase. Returns s_i = global * (-1)^k_i (t* = pi) or
/// global * (-1)^((k_i - 1) / 2) (t* = pi/2).
inline std::vector<int> phase_aligned_signs(const IntegerSpectrumCandidate& c, int global = 1) {
  std::vector<int> s;
  for (int k : c.integers) {
    const int e = c.time_class == TimeClass::Integer ? k : (k - 1) / 2;
    const int parity = ((e % 2) + 2) % 2;
    s.push_back(parity == 0 ? global : -global);
  }
  return s;
}

namespace detail {

struct DesignResiduals {
  const DesignProblem& problem;
  std::vector<double> energies;
  Polynomial target_charpoly;
  double scale;

  explicit DesignResiduals(const DesignProblem& p)
      : problem(p), energies(p.spectrum.energies()), target_charpoly(Polynomial::from_roots(energies)) {
    scale = 0.0;
    for (double e : energies) scale = std::max(scale, std::abs(e));
  }

  std::size_t size() const { return static_cast<std::size_t>(2 * problem.sites); }

  /// Charpoly coefficient mismatch (scaled by scale^(N-k)) followed by the
  /// criterion-1 residual for each eigenvalue.
  bool evaluate(const Eigen::VectorXd& log_j, Eigen::VectorXd& r) const {
    const int n = problem.sites;
    if (log_j.cwiseAbs().maxCoeff() > 40.0) return false;
    std::vector<double> j(static_cast<std::size_t>(log_j.size()));
    for (Eigen::Index i = 0; i < log_j.size(); ++i) j[static_cast<std::size_t>(i)] = std::exp(log_j(i));
    const CouplingProfile profile(problem.geometry, n, j);

    r.resize(static_cast<Eigen::Index>(size()));
    const Polynomial cp = characteristic_polynomial(profile);
    for (int k = 0; k < n; ++k)
      r(k) = (cp.coefficient(k) - target_charpoly.coefficient(k)) / std::pow(scale, n - k);

    if (problem.geometry == Geometry::Open) {
      for (int i = 0; i < n; ++i) {
        const auto p = energy_polynomial_open_pair(j, problem.source, problem.target, problem.signs[static_cast<std::size_t>(i)]);
        r(n + i) = p(energies[static_cast<std::size_t>(i)]) / std::pow(scale, p.degree());
      }
    } else {
      const auto spec = decompose(build_hamiltonian(profile));
      for (int i = 1; i <= n; ++i)
        r(n + i - 1) = spec.component(i, problem.target) +
                       problem.signs[static_cast<std::size_t>(i - 1)] * spec.component(i, problem.source);
    }
    return r.allFinite();
  }
};

struct LeastSquaresOutcome {
  Eigen::VectorXd x;
  double max_residual = std::numeric_limits<double>::infinity();
};

/// Damped Gauss-Newton with central-difference Jacobian and step halving.
inline LeastSquaresOutcome damped_gauss_newton(const DesignResiduals& res, Eigen::VectorXd x) {
  Eigen::VectorXd r;
  LeastSquaresOutcome out;
  if (!res.evaluate(x, r)) return out;
  double f = r.squaredNorm();
  const Eigen::Index dim = x.size();
  double mu = 1e-8;
  for (int iter = 0; iter < 200 && f > 1e-30; ++iter) {
    Eigen::MatrixXd jac(r.size(), dim);
    bool ok = true;
    for (Eigen::Index k = 0; k < dim && ok; ++k) {
      const double h = 1e-6;
      Eigen::VectorXd xp = x, xm = x, rp, rm;
      xp(k) += h;
      xm(k) -= h;
      ok = res.evaluate(xp, rp) && res.evaluate(xm, rm);
      if (ok) jac.col(k) = (rp - rm) / (2.0 * h);
    }
    if (!ok) break;
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    bool accepted = false;
    for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal().array() += mu * (normal.diagonal().array() + 1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-grad);
      if (!delta.allFinite()) {
        mu *= 10.0;
        continue;
      }
      double step = 1.0;
      for (int halving = 0; halving <= 30; ++halving, step *= 0.5) {
        Eigen::VectorXd trial = x + step * delta, rt;
        if (!res.evaluate(trial, rt)) continue;
        const double ft = rt.squaredNorm();
        if (ft < f) {
          x = trial;
          r = rt;
          f = ft;
          accepted = true;
          break;
        }
      }
      mu = accepted ? std::max(mu / 10.0, 1e-12) : mu * 10.0;
    }
    if (!accepted) break;
  }
  out.x = x;
  out.max_residual = r.cwiseAbs().maxCoeff();
  return out;
}

inline void validate(const DesignProblem& p) {
  if (p.sites < 2 || p.sites > 8) throw DomainError("the general design solver covers 2 <= N <= 8");
  (void)CouplingProfile(p.geometry, p.sites,
                        std::vector<double>(static_cast<std::size_t>(coupling_count(p.geometry, p.sites)), 1.0));
  require_site(p.sites, p.source, "source");
  require_site(p.sites, p.target, "target");
  if (p.source == p.target) throw DomainError("design needs distinct source and target");
  const auto& k = p.spectrum.integers;
  if (static_cast<int>(k.size()) != p.sites) throw DomainError("spectrum candidate must list N integers");
  for (std::size_t i = 1; i < k.size(); ++i)
    if (k[i] <= k[i - 1]) throw DomainError("spectrum integers must be strictly increasing");
  if (p.spectrum.time_class == TimeClass::Odd)
    for (int v : k)
      if (v % 2 == 0) throw DomainError("the t* = pi/2 class needs odd integers");
  if (!(p.spectrum.base_unit > 0.0)) throw DomainError("base unit must be positive");
  if (p.signs.size() != k.size()) throw DomainError("sign pattern must cover all N eigenvalues");
  for (int s : p.signs) require_sign(s);
}

}  // namespace detail

/// Couplings whose spectrum is the candidate and whose eigenvectors satisfy
/// criterion 1 with the given sign classes. Accepts a solution only if it
/// keeps the chain connected (kMinCouplingRatio) and transfers source ->
/// target with fidelity >= 1 - 1e-8 at the implied t*.
inline DesignSolution solve_general(const DesignProblem& problem) {
  detail::validate(problem);
  DesignSolution out;

  const int capacity = structural_degree(problem.geometry, problem.sites, problem.source, problem.target);
  const auto plus = std::count(problem.signs.begin(), problem.signs.end(), 1);
  const auto minus = static_cast<long>(problem.signs.size()) - plus;
  if (plus > capacity || minus > capacity) {
    out.failure = "infeasible-sign-split";
    return out;
  }

  const detail::DesignResiduals residuals(problem);
  const int dim = coupling_count(problem.geometry, problem.sites);
  const double j0 = problem.spectrum.base_unit * problem.spectrum.max_abs() / 2.0;
  const double t_star = problem.spectrum.retrieval_time();
  const TransferSpec transfer{problem.source, problem.target, t_star};

  bool any_converged = false;
  for (int start = 0; start < 9; ++start) {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(dim, std::log(j0));
    if (start > 0) {
      std::mt19937_64 rng(0x5eedULL + static_cast<std::uint64_t>(start));
      for (Eigen::Index i = 0; i < dim; ++i) x(i) += 0.7 * (2.0 * detail::unit_uniform(rng) - 1.0);
    }
    const auto ls = detail::damped_gauss_newton(residuals, x);
    out.start_residuals.push_back(ls.max_residual);
    out.best_residual = std::min(out.best_residual, ls.max_residual);
    if (!(ls.max_residual <= 1e-8)) continue;

    std::vector<double> j(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) j[static_cast<std::size_t>(i)] = std::exp(ls.x(i));
    const auto [jmin, jmax] = std::minmax_element(j.begin(), j.end());
    if (*jmin < kMinCouplingRatio * *jmax) {
      ++out.decoupled_starts;
      continue;
    }
    any_converged = true;
    CouplingProfile profile(problem.geometry, problem.sites, std::move(j));
    const double f = fidelity(decompose(build_hamiltonian(profile)), transfer);
    if (f >= 1.0 - 1e-8) {
      out.profile = std::move(profile);
      out.fidelity = f;
      return out;
    }
  }
  out.failure = any_converged ? "phase-misaligned" : "no-solution";
  return out;
}

struct DesignRecord {
  IntegerSpectrumCandidate spectrum;
  std::vector<int> signs;
  CouplingProfile profile;
  double fidelity = 0.0;
};

namespace detail {

inline void choose(const std::vector<int>& pool, std::size_t count, std::size_t from, std::vector<int>& current,
                   std::vector<std::vector<int>>& out) {
  if (current.size() == count) {
    out.push_back(current);
    return;
  }
  for (std::size_t i = from; i + (count - current.size()) <= pool.size(); ++i) {
    current.push_back(pool[i]);
    choose(pool, count, i + 1, current, out);
    current.pop_back();
  }
}

/// Admissible integer spectra: zero trace, strictly increasing, in the
/// requested class, and symmetric about zero for bipartite geometries.
inline std::vector<std::vector<int>> candidate_spectra(int n_sites, Geometry geometry, int e_max, TimeClass cls) {
  const bool odd_only = cls == TimeClass::Odd;
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  const bool bipartite = geometry == Geometry::Open || n_sites % 2 == 0;
  if (bipartite) {
    if (n_sites % 2 == 1 && odd_only) return out;  // zero mode is not odd
    std::vector<int> pool;
    for (int k = 1; k <= e_max; ++k)
      if (!odd_only || k % 2 == 1) pool.push_back(k);
    std::vector<std::vector<int>> halves;
    choose(pool, static_cast<std::size_t>(n_sites / 2), 0, current, halves);
    for (const auto& h : halves) {
      std::vector<int> s;
      for (auto it = h.rbegin(); it != h.rend(); ++it) s.push_back(-*it);
      if (n_sites % 2 == 1) s.push_back(0);
      s.insert(s.end(), h.begin(), h.end());
      out.push_back(std::move(s));
    }
    return out;
  }
  std::vector<int> pool;
  for (int k = -e_max; k <= e_max; ++k)
    if (!odd_only || k % 2 != 0) pool.push_back(k);
  std::vector<std::vector<int>> all;
  choose(pool, static_cast<std::size_t>(n_sites), 0, current, all);
  for (auto& s : all) {
    long sum = 0;
    for (int v : s) sum += v;
    if (sum == 0) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

/// Every integer spectrum with |k| <= e_max in the requested class, crossed
/// with the two phase-aligned sign patterns, handed to solve_general.
/// Successes are sorted by max|k| (then lexicographically).
inline std::vector<DesignRecord> enumerate_designs(int n_sites, Geometry geometry, int m, int n, int e_max,
                                                   TimeClass cls) {
  if (e_max < 1 || e_max > 32) throw DomainError("e_max must lie in 1..32");
  if (n_sites > 8) throw DomainError("design enumeration covers N <= 8");
  require_site(n_sites, m, "source");
  require_site(n_sites, n, "target");
  if (m == n) throw DomainError("design needs distinct source and target");

  // On a bipartite chain the eigenvector of -E is that of E with one
  // sublattice negated, so v_n / v_m picks up (-1)^(n-m) between the pair.
  const bool bipartite = geometry == Geometry::Open || n_sites % 2 == 0;
  const int pair_factor = (std::abs(n - m) % 2 == 0) ? 1 : -1;
  auto pairing_consistent = [&](const std::vector<int>& signs) {
    const std::size_t sz = signs.size();
    for (std::size_t i = 0; i < sz / 2; ++i)
      if (signs[sz - 1 - i] != pair_factor * signs[i]) return false;
    return true;
  };

  std::vector<DesignProblem> problems;
  for (auto& k : detail::candidate_spectra(n_sites, geometry, e_max, cls)) {
    std::int64_t g = 0;
    for (int v : k) g = std::gcd(g, static_cast<std::int64_t>(std::abs(v)));
    // A common factor only rescales the spectrum; in the t* = pi class it also
    // makes every phase trivial at t*.
    if (cls == TimeClass::Integer && g > 1) continue;
    for (int global : {1, -1}) {
      DesignProblem p{n_sites, geometry, m, n, {k, 1.0, cls}, {}};
      p.signs = phase_aligned_signs(p.spectrum, global);
      if (bipartite && !pairing_consistent(p.signs)) continue;
      problems.push_back(std::move(p));
    }
  }

  std::vector<std::optional<DesignRecord>> found(problems.size());
  parallel_for(problems.size(), [&](std::size_t i) {
    const auto sol = solve_general(problems[i]);
    if (sol.profile)
      found[i] = DesignRecord{problems[i].spectrum, problems[i].signs, *sol.profile, sol.fidelity};
  });

  std::vector<DesignRecord> out;
  for (auto& f : found)
    if (f) out.push_back(std::move(*f));
  std::stable_sort(out.begin(), out.end(), [](const DesignRecord& a, const DesignRecord& b) {
    if (a.spectrum.max_abs() != b.spectrum.max_abs()) return a.spectrum.max_abs() < b.spectrum.max_abs();
    return a.spectrum.integers < b.spectrum.integers;
  });
  return out;
}

}  // namespace pst
