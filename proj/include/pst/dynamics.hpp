#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "pst/chain.hpp"
#include "pst/spectral.hpp"

namespace pst {

struct TransferSpec {
  int source = 1;
  int target = 1;
  /// When set, fidelity(spec, transfer) is evaluated at exactly this time.
  std::optional<double> retrieval_time;
};

/// Site-occupation probabilities on a closed uniform time grid.
struct TrajectoryRecord {
  std::vector<double> times;
  /// probabilities[t][k] = |<k+1| exp(-i t H) |m>|^2
  std::vector<std::vector<double>> probabilities;
};

/// <n| exp(-i t H) |m> = sum_i v_im v_in exp(-i t E_i).
inline std::complex<double> amplitude(const SpectralDecomposition& spec, int m, int n, double t) {
  const int size = spec.sites();
  require_site(size, m, "source");
  require_site(size, n, "target");
  std::complex<double> sum(0.0, 0.0);
  for (int i = 0; i < size; ++i) {
    const double w = spec.eigenvectors(m - 1, i) * spec.eigenvectors(n - 1, i);
    const double phase = t * spec.eigenvalues(i);
    sum += w * std::complex<double>(std::cos(phase), -std::sin(phase));
  }
  return sum;
}

inline double fidelity(const SpectralDecomposition& spec, const TransferSpec& transfer, double t) {
  return std::norm(amplitude(spec, transfer.source, transfer.target, t));
}

inline double fidelity(const SpectralDecomposition& spec, const TransferSpec& transfer) {
  if (!transfer.retrieval_time) throw DomainError("transfer has no retrieval time");
  return fidelity(spec, transfer, *transfer.retrieval_time);
}

inline double fidelity(const CouplingProfile& profile, const TransferSpec& transfer, double t) {
  return fidelity(decompose(build_hamiltonian(profile)), transfer, t);
}

inline TrajectoryRecord trajectory(const HamiltonianMatrix& h, int m, double t_max, int steps = 201) {
  require_site(h.sites(), m, "source");
  if (steps < 2) throw DomainError("trajectory needs at least 2 time steps");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw DomainError("t_max must be positive and finite");

  const SpectralDecomposition spec = decompose(h);
  const int n = h.sites();
  TrajectoryRecord rec;
  rec.times.resize(static_cast<std::size_t>(steps));
  rec.probabilities.assign(static_cast<std::size_t>(steps), std::vector<double>(static_cast<std::size_t>(n)));
  for (int s = 0; s < steps; ++s) {
    // Endpoint pinned exactly so the last row is evaluated at t_max.
    const double t = s == steps - 1 ? t_max : t_max * static_cast<double>(s) / (steps - 1);
    rec.times[static_cast<std::size_t>(s)] = t;
    for (int k = 1; k <= n; ++k)
      rec.probabilities[static_cast<std::size_t>(s)][static_cast<std::size_t>(k - 1)] =
          std::norm(amplitude(spec, m, k, t));
  }
  return rec;
}

}  // namespace pst
