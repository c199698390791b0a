#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pst {

/// Raised when an input violates a domain contract (bad couplings, bad site
/// index, infeasible design request, ...). The CLI maps it to exit status 1.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Geometry { Open, Closed };

inline std::string_view to_string(Geometry g) {
  return g == Geometry::Open ? "open" : "closed";
}

inline Geometry parse_geometry(std::string_view s) {
  if (s == "open") return Geometry::Open;
  if (s == "closed") return Geometry::Closed;
  throw DomainError("unknown geometry '" + std::string(s) + "' (expected open|closed)");
}

/// Number of couplings a chain of `n` sites carries: open chains omit the
/// bond between site N and site 1.
constexpr int coupling_count(Geometry g, int n) { return g == Geometry::Open ? n - 1 : n; }

/// Sites are 1-indexed at every interface.
inline void require_site(int n_sites, int site, std::string_view what = "site") {
  if (site < 1 || site > n_sites)
    throw DomainError(std::string(what) + " index " + std::to_string(site) + " outside 1.." +
                      std::to_string(n_sites));
}

inline int mirror_index(int n_sites, int site) {
  require_site(n_sites, site);
  return n_sites + 1 - site;
}

/// Geometry plus the positive coupling vector J. J_i couples sites i and i+1;
/// for closed chains J_N couples site N back to site 1.
class CouplingProfile {
 public:
  CouplingProfile(Geometry geometry, int n_sites, std::vector<double> couplings)
      : geometry_(geometry), n_sites_(n_sites), couplings_(std::move(couplings)) {
    if (n_sites_ < 2) throw DomainError("a chain needs at least 2 sites");
    if (geometry_ == Geometry::Closed && n_sites_ < 3)
      throw DomainError("a closed chain needs at least 3 sites");
    if (static_cast<int>(couplings_.size()) != coupling_count(geometry_, n_sites_))
      throw DomainError(std::string(to_string(geometry_)) + " chain of " +
                        std::to_string(n_sites_) + " sites needs " +
                        std::to_string(coupling_count(geometry_, n_sites_)) + " couplings, got " +
                        std::to_string(couplings_.size()));
    for (std::size_t i = 0; i < couplings_.size(); ++i) {
      if (!std::isfinite(couplings_[i]) || !(couplings_[i] > 0.0))
        throw DomainError("coupling J_" + std::to_string(i + 1) + " must be finite and positive");
    }
  }

  /// Site count inferred from the coupling vector length.
  static CouplingProfile from_couplings(Geometry geometry, std::vector<double> couplings) {
    const int n = static_cast<int>(couplings.size()) + (geometry == Geometry::Open ? 1 : 0);
    return CouplingProfile(geometry, n, std::move(couplings));
  }

  Geometry geometry() const { return geometry_; }
  int sites() const { return n_sites_; }
  std::span<const double> couplings() const { return couplings_; }
  const std::vector<double>& coupling_vector() const { return couplings_; }

  /// 1-indexed J_i.
  double coupling(int i) const { return couplings_.at(static_cast<std::size_t>(i - 1)); }

  CouplingProfile scaled(double factor) const {
    std::vector<double> j = couplings_;
    for (double& x : j) x *= factor;
    return CouplingProfile(geometry_, n_sites_, std::move(j));
  }

  /// Reflection of an open chain about its center (site k -> N+1-k).
  CouplingProfile reversed() const {
    if (geometry_ != Geometry::Open) throw DomainError("reversal is defined for open chains");
    return CouplingProfile(geometry_, n_sites_, {couplings_.rbegin(), couplings_.rend()});
  }

  bool operator==(const CouplingProfile&) const = default;

 private:
  Geometry geometry_;
  int n_sites_;
  std::vector<double> couplings_;
};

/// Dense single-excitation Hamiltonian. Zero diagonal, J_i on the first
/// off-diagonals, and J_N on the (1,N) corners for closed chains.
struct HamiltonianMatrix {
  Eigen::MatrixXd entries;

  int sites() const { return static_cast<int>(entries.rows()); }
  double max_abs() const { return entries.cwiseAbs().maxCoeff(); }
};

inline HamiltonianMatrix build_hamiltonian(const CouplingProfile& profile) {
  const int n = profile.sites();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    const double j = profile.couplings()[static_cast<std::size_t>(i)];
    h(i, i + 1) = j;
    h(i + 1, i) = j;
  }
  if (profile.geometry() == Geometry::Closed) {
    const double j = profile.couplings().back();
    h(0, n - 1) = j;
    h(n - 1, 0) = j;
  }
  return {std::move(h)};
}

}  // namespace pst
