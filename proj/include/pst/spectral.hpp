#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "pst/chain.hpp"

namespace pst {

/// The eigensolver ran out of sweeps before the off-diagonal mass fell below
/// tolerance.
class EigenSolverError : public DomainError {
 public:
  EigenSolverError(int sweeps, double residual)
      : DomainError("Jacobi eigensolver did not converge after " + std::to_string(sweeps) +
                    " sweeps (off-diagonal residual " + std::to_string(residual) + ")"),
        sweeps_(sweeps),
        residual_(residual) {}

  int sweeps() const { return sweeps_; }
  double residual() const { return residual_; }

 private:
  int sweeps_;
  double residual_;
};

/// Eigenvalues ascending; column i of `eigenvectors` is v_i.
///
/// Gauge: the first component of each eigenvector with magnitude above
/// kSignThreshold is positive. Eigenvalues closer than kDegeneracyGap (relative
/// to max|E|) share a cluster id; vectors inside a cluster are an arbitrary
/// orthonormal basis of the eigenspace.
struct SpectralDecomposition {
  static constexpr double kSignThreshold = 1e-12;
  static constexpr double kDegeneracyGap = 1e-8;

  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  std::vector<int> cluster;
  int sweeps = 0;
  double residual = 0.0;

  int sites() const { return static_cast<int>(eigenvalues.size()); }

  /// v_{i,site}, both indices 1-based.
  double component(int i, int site) const { return eigenvectors(site - 1, i - 1); }

  bool degenerate() const {
    for (std::size_t i = 1; i < cluster.size(); ++i)
      if (cluster[i] == cluster[i - 1]) return true;
    return false;
  }

  double max_abs_eigenvalue() const { return eigenvalues.cwiseAbs().maxCoeff(); }
};

namespace detail {

inline double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// One Jacobi rotation annihilating a(p,q); accumulates into v.
inline void jacobi_rotate(Eigen::MatrixXd& a, Eigen::MatrixXd& v, Eigen::Index p, Eigen::Index q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace detail

/// Cyclic Jacobi diagonalization of the (symmetric) chain Hamiltonian.
/// Converges to machine precision; gives up after 100*N sweeps unless the
/// off-diagonal residual is already below 1e-10 * ||H||_F.
inline SpectralDecomposition decompose(const HamiltonianMatrix& h) {
  const Eigen::Index n = h.entries.rows();
  Eigen::MatrixXd a = h.entries;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  const int max_sweeps = 100 * static_cast<int>(n);

  int sweeps = 0;
  double off = detail::off_diagonal_norm(a);
  while (off > 1e-15 * scale && sweeps < max_sweeps) {
    for (Eigen::Index p = 0; p + 1 < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q)
        if (a(p, q) != 0.0) detail::jacobi_rotate(a, v, p, q);
    ++sweeps;
    const double next = detail::off_diagonal_norm(a);
    // Stalled at roundoff level.
    if (next >= off && next <= 1e-12 * scale) {
      off = next;
      break;
    }
    off = next;
  }
  if (off > 1e-10 * scale) throw EigenSolverError(sweeps, off / scale);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.eigenvectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  out.sweeps = sweeps;
  out.residual = off / scale;

  const double emax = std::max(out.eigenvalues.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  out.cluster.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 1; i < n; ++i) {
    const bool same = out.eigenvalues(i) - out.eigenvalues(i - 1) <
                      SpectralDecomposition::kDegeneracyGap * emax;
    out.cluster[static_cast<std::size_t>(i)] =
        out.cluster[static_cast<std::size_t>(i - 1)] + (same ? 0 : 1);
  }

  // Re-orthogonalize inside degenerate clusters (modified Gram-Schmidt).
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = i - 1; j >= 0 && out.cluster[static_cast<std::size_t>(j)] ==
                                               out.cluster[static_cast<std::size_t>(i)];
         --j) {
      out.eigenvectors.col(i) -= out.eigenvectors.col(j).dot(out.eigenvectors.col(i)) *
                                 out.eigenvectors.col(j);
    }
    out.eigenvectors.col(i).normalize();
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double c = out.eigenvectors(k, i);
      if (std::abs(c) > SpectralDecomposition::kSignThreshold) {
        if (c < 0.0) out.eigenvectors.col(i) *= -1.0;
        break;
      }
    }
  }
  return out;
}

/// Column `site` of exp(-i t H), by scaling and squaring of a truncated Taylor
/// series. Uses no eigendecomposition, so it serves as an independent check on
/// the spectral-sum amplitude.
inline Eigen::VectorXcd evolve_oracle(const HamiltonianMatrix& h, int site, double t) {
  const int n = h.sites();
  require_site(n, site);
  if (!std::isfinite(t)) throw DomainError("evolution time must be finite");
  const double norm1 = h.entries.cwiseAbs().colwise().sum().maxCoeff();
  if (std::abs(t) * norm1 > 1e7)
    throw DomainError("|t| * ||H|| too large for the matrix-exponential oracle");

  using Mat = Eigen::MatrixXcd;
  const std::complex<double> minus_it(0.0, -t);
  Mat a = minus_it * h.entries.cast<std::complex<double>>();
  const double anorm = std::abs(t) * norm1;
  int squarings = 0;
  if (anorm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(anorm / 0.5)));
  a /= std::ldexp(1.0, squarings);

  Mat result = Mat::Identity(n, n);
  Mat term = Mat::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * a) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result.col(site - 1);
}

}  // namespace pst
