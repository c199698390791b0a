#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "pst/inverse_design.hpp"
#include "pst/optimizer.hpp"

using namespace pst;
using std::numbers::pi;

namespace {

SpectralDecomposition spectrum_of(const CouplingProfile& p) { return decompose(build_hamiltonian(p)); }

void expect_couplings(const CouplingProfile& p, const std::vector<double>& want, double tol) {
  ASSERT_EQ(p.couplings().size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(p.couplings()[i], want[i], tol) << "J_" << i + 1;
}

std::vector<double> random_symmetric_spectrum(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.1, 4.0);
  std::set<double> positive;
  while (static_cast<int>(positive.size()) < n / 2) positive.insert(u(rng));
  std::vector<double> e;
  for (double v : positive) e.push_back(v), e.push_back(-v);
  if (n % 2) e.push_back(0.0);
  std::sort(e.begin(), e.end());
  return e;
}

// Every returned design must transfer at its implied t* and be certified by
// check_pst.
void expect_certified(const DesignRecord& d, int m, int n) {
  const auto s = spectrum_of(d.profile);
  const double t = d.spectrum.retrieval_time();
  EXPECT_GE(fidelity(s, {m, n, {}}, t), 1.0 - 1e-8);
  const auto found = check_pst(s, m, n);
  ASSERT_TRUE(found);
  EXPECT_LE(*found, t * (1 + 1e-12));
  EXPECT_GE(fidelity(s, {m, n, {}}, *found), 1.0 - 1e-8);
}

}  // namespace

// ---------------------------------------------------------------- mirror

TEST(SolveMirror, TwoSites) {
  const std::vector<double> e{-1, 1};
  expect_couplings(solve_mirror(2, e), {1.0}, 1e-12);
}

TEST(SolveMirror, FourSiteLinearSpectrum) {
  const std::vector<double> e{-3, -1, 1, 3};
  expect_couplings(solve_mirror(4, e), {std::sqrt(3.0), 2.0, std::sqrt(3.0)}, 1e-10);
}

TEST(SolveMirror, FiveSiteLinearSpectrum) {
  const std::vector<double> e{-4, -2, 0, 2, 4};
  expect_couplings(solve_mirror(5, e), {2.0, std::sqrt(6.0), std::sqrt(6.0), 2.0}, 1e-10);
}

TEST(SolveMirror, RejectsInvalidSpectra) {
  EXPECT_THROW(solve_mirror(3, std::vector<double>{-1, 1}), DomainError);
  EXPECT_THROW(solve_mirror(3, std::vector<double>{-1, 0, 2}), DomainError);
  EXPECT_THROW(solve_mirror(4, std::vector<double>{-1, -1, 1, 1}), DomainError);
  EXPECT_THROW(solve_mirror(2, std::vector<double>{1, -1}), DomainError);
}

TEST(SolveMirror, BreakdownReportsPivot) {
  // Nearly coincident levels push a Lanczos pivot below tolerance.
  const std::vector<double> e{-1.0, -1.0 + 1e-11, 1.0 - 1e-11, 1.0};
  try {
    solve_mirror(4, e);
    SUCCEED() << "reconstruction survived";
  } catch (const ReconstructionError& err) {
    EXPECT_GE(err.pivot(), 1);
    EXPECT_LE(err.pivot(), 3);
  } catch (const DomainError&) {
  }
}

TEST(SolveMirror, RoundTripsRandomSpectra) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 11;
    const auto e = random_symmetric_spectrum(rng, n);
    const auto p = solve_mirror(n, e);
    const auto s = spectrum_of(p);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(s.eigenvalues(i), e[static_cast<std::size_t>(i)], 1e-8);
    EXPECT_EQ(p, p.reversed());
  }
}

TEST(SolveMirror, LinearSpectraGiveKrawtchoukCouplings) {
  for (int n = 4; n <= 12; ++n) {
    std::vector<double> e;
    for (int i = 0; i < n; ++i) e.push_back(-(n - 1) + 2.0 * i);
    const auto p = solve_mirror(n, e);
    for (int i = 1; i < n; ++i) EXPECT_NEAR(p.coupling(i), std::sqrt(static_cast<double>(i) * (n - i)), 1e-8);
    const auto t = check_pst(spectrum_of(p), 1, n);
    ASSERT_TRUE(t) << n;
    EXPECT_NEAR(*t, pi / 2, 1e-12);
  }
}

// ---------------------------------------------------------------- general solver

TEST(SolveGeneral, FourSiteWorkedExample) {
  // s = + on +-1, s = - on +-2; the t* = pi phase-aligned pattern.
  DesignProblem p{4, Geometry::Open, 1, 3, {{-2, -1, 1, 2}, 1.0, TimeClass::Integer}, {-1, 1, 1, -1}};
  EXPECT_EQ(phase_aligned_signs(p.spectrum, -1), p.signs);
  const auto sol = solve_general(p);
  ASSERT_TRUE(sol.profile) << sol.failure;
  expect_couplings(*sol.profile, {std::sqrt(2.5), 3.0 / (2.0 * std::sqrt(2.5)), std::sqrt(1.6)}, 1e-6);
  EXPECT_GE(sol.fidelity, 1.0 - 1e-8);
  EXPECT_LE(sol.best_residual, 1e-8);
  const auto t = check_pst(spectrum_of(*sol.profile), 1, 3);
  ASSERT_TRUE(t);
  EXPECT_NEAR(*t, pi, 1e-10);
}

TEST(SolveGeneral, OverfullSignClassIsInfeasible) {
  DesignProblem p{4, Geometry::Open, 1, 3, {{-2, -1, 1, 2}, 1.0, TimeClass::Integer}, {1, 1, 1, -1}};
  const auto sol = solve_general(p);
  EXPECT_FALSE(sol.profile);
  EXPECT_EQ(sol.failure, "infeasible-sign-split");
}

TEST(SolveGeneral, ValidatesProblem) {
  const IntegerSpectrumCandidate c{{-2, -1, 1, 2}, 1.0, TimeClass::Integer};
  EXPECT_THROW(solve_general({9, Geometry::Open, 1, 3, c, {1, 1, 1, 1}}), DomainError);
  EXPECT_THROW(solve_general({4, Geometry::Open, 1, 3, c, {1, 1, 1}}), DomainError);
  EXPECT_THROW(solve_general({4, Geometry::Open, 1, 1, c, {1, 1, 1, 1}}), DomainError);
  EXPECT_THROW(solve_general({4, Geometry::Open, 1, 3, c, {1, 0, 1, 1}}), DomainError);
  EXPECT_THROW(solve_general({4, Geometry::Open, 1, 3, {{-2, -1, 1, 2}, 1.0, TimeClass::Odd}, {1, 1, -1, -1}}),
               DomainError);
  EXPECT_THROW(solve_general({4, Geometry::Open, 1, 3, {{-1, -2, 1, 2}, 1.0, TimeClass::Integer}, {1, 1, -1, -1}}),
               DomainError);
}

TEST(SolveGeneral, UniformTriangleDoesNotTransfer) {
  // Eigenvalues (-1, -1, 2): amplitude(1 -> 3) = (exp(-2it) - exp(it)) / 3, so
  // F = (2 - 2 cos 3t) / 9 never exceeds 4/9.
  const auto s = spectrum_of(CouplingProfile(Geometry::Closed, 3, {1.0, 1.0, 1.0}));
  double best = 0.0;
  for (int k = 0; k <= 3000; ++k) best = std::max(best, fidelity(s, {1, 3, {}}, k * 2 * pi / 3000));
  EXPECT_NEAR(best, 4.0 / 9.0, 1e-9);
}

TEST(SolveGeneral, TriangleFamily) {
  // Designs for the triangle satisfy J1 = J2 and have -J3 in the spectrum.
  const double a = std::sqrt(5.0 / 18.0);
  const CouplingProfile known(Geometry::Closed, 3, {a, a, 4.0 / 3.0});
  const auto ks = spectrum_of(known);
  const auto t = check_pst(ks, 1, 3);
  ASSERT_TRUE(t);
  EXPECT_GE(fidelity(ks, {1, 3, {}}, *t), 1.0 - 1e-12);

  std::size_t found = 0;
  for (TimeClass cls : {TimeClass::Integer, TimeClass::Odd}) {
    for (const auto& d : enumerate_designs(3, Geometry::Closed, 1, 3, 5, cls)) {
      ++found;
      const auto j = d.profile.couplings();
      EXPECT_NEAR(j[0], j[1], 1e-8 * j[2]);
      const auto s = spectrum_of(d.profile);
      double gap = INFINITY;
      for (int i = 0; i < 3; ++i) gap = std::min(gap, std::abs(s.eigenvalues(i) + j[2]));
      EXPECT_LE(gap, 1e-8 * j[2]);
      expect_certified(d, 1, 3);
    }
  }
  EXPECT_GT(found, 0u);
}

TEST(SolveGeneral, SixSiteOneToFourHasNoDesign) {
  // Every symmetric integer spectrum with |k| <= 4 and every sign pattern
  // splitting the six eigenvalues 3 + 3.
  std::vector<std::vector<int>> spectra;
  for (int a = 1; a <= 4; ++a)
    for (int b = a + 1; b <= 4; ++b)
      for (int c = b + 1; c <= 4; ++c) spectra.push_back({-c, -b, -a, a, b, c});
  int problems = 0;
  for (const auto& k : spectra) {
    for (int mask = 0; mask < 64; ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) != 3) continue;
      std::vector<int> signs;
      for (int i = 0; i < 6; ++i) signs.push_back(mask >> i & 1 ? 1 : -1);
      const auto sol = solve_general({6, Geometry::Open, 1, 4, {k, 1.0, TimeClass::Integer}, signs});
      EXPECT_FALSE(sol.profile);
      EXPECT_TRUE(sol.failure == "no-solution" || sol.failure == "phase-misaligned") << sol.failure;
      ++problems;
    }
  }
  EXPECT_EQ(problems, 4 * 20);
  for (TimeClass cls : {TimeClass::Integer, TimeClass::Odd})
    EXPECT_TRUE(enumerate_designs(6, Geometry::Open, 1, 4, 7, cls).empty());
}

TEST(SolveGeneral, ScaleCovariance) {
  // Some problems have a continuum of solutions, so the solver may land on a
  // different member after rescaling; compare spectra and transfer times.
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> scale(0.2, 5.0);
  struct Case {
    int n;
    Geometry g;
    int m, k;
    TimeClass cls;
  };
  const Case cases[] = {{4, Geometry::Open, 1, 3, TimeClass::Integer},
                        {5, Geometry::Open, 2, 4, TimeClass::Integer},
                        {4, Geometry::Closed, 1, 3, TimeClass::Integer},
                        {4, Geometry::Closed, 1, 2, TimeClass::Odd}};
  int checked = 0;
  for (const auto& c : cases) {
    for (const auto& d : enumerate_designs(c.n, c.g, c.m, c.k, 5, c.cls)) {
      const double factor = scale(rng);
      IntegerSpectrumCandidate scaled = d.spectrum;
      scaled.base_unit *= factor;
      EXPECT_NEAR(scaled.retrieval_time(), d.spectrum.retrieval_time() / factor, 1e-12);

      const auto direct = check_pst(spectrum_of(d.profile.scaled(factor)), c.m, c.k);
      ASSERT_TRUE(direct);
      EXPECT_NEAR(*direct * factor, *check_pst(spectrum_of(d.profile), c.m, c.k), 1e-9);

      const auto sol = solve_general({c.n, c.g, c.m, c.k, scaled, d.signs});
      ASSERT_TRUE(sol.profile);
      const auto s = spectrum_of(*sol.profile);
      const auto e = scaled.energies();
      for (int i = 0; i < c.n; ++i) EXPECT_NEAR(s.eigenvalues(i), e[static_cast<std::size_t>(i)], 1e-7 * factor);
      EXPECT_GE(fidelity(s, {c.m, c.k, {}}, scaled.retrieval_time()), 1.0 - 1e-8);
      ++checked;
    }
  }
  EXPECT_GE(checked, 8);
}

// ---------------------------------------------------------------- enumeration

TEST(Enumerate, FourSiteOneToThreeContainsWorkedExample) {
  const auto designs = enumerate_designs(4, Geometry::Open, 1, 3, 4, TimeClass::Integer);
  bool seen = false;
  for (const auto& d : designs) {
    expect_certified(d, 1, 3);
    if (d.spectrum.integers == std::vector<int>{-2, -1, 1, 2}) {
      seen = true;
      expect_couplings(d.profile, {std::sqrt(2.5), 3.0 / (2.0 * std::sqrt(2.5)), std::sqrt(1.6)}, 1e-6);
    }
  }
  EXPECT_TRUE(seen);
  for (std::size_t i = 1; i < designs.size(); ++i)
    EXPECT_LE(designs[i - 1].spectrum.max_abs(), designs[i].spectrum.max_abs());
}

TEST(Enumerate, CountingExcludedPairIsEmpty) {
  for (TimeClass cls : {TimeClass::Integer, TimeClass::Odd})
    EXPECT_TRUE(enumerate_designs(4, Geometry::Open, 1, 2, 6, cls).empty());
}

TEST(Enumerate, ClosedFourNeighboursAgreeWithOptimizer) {
  std::vector<DesignRecord> all;
  for (TimeClass cls : {TimeClass::Integer, TimeClass::Odd})
    for (auto& d : enumerate_designs(4, Geometry::Closed, 1, 2, 6, cls)) all.push_back(std::move(d));
  ASSERT_FALSE(all.empty());
  for (const auto& d : all) expect_certified(d, 1, 2);

  const auto& first = all.front();
  const double jmax = *std::max_element(first.profile.couplings().begin(), first.profile.couplings().end());
  OptimizationConfig c;
  c.retrieval_time = first.spectrum.retrieval_time();
  c.j_min = 1e-2 * jmax;
  c.j_max = 2.0 * jmax;
  c.restarts = 16;
  EXPECT_GE(optimize(4, Geometry::Closed, 1, 2, c).best_fidelity, 1.0 - 1e-8);
}

TEST(Enumerate, DeterministicOrder) {
  const auto a = enumerate_designs(5, Geometry::Open, 2, 4, 5, TimeClass::Integer);
  const auto b = enumerate_designs(5, Geometry::Open, 2, 4, 5, TimeClass::Integer);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].spectrum.integers, b[i].spectrum.integers);
    EXPECT_EQ(a[i].profile, b[i].profile);
  }
}

TEST(Enumerate, RejectsOutOfScope) {
  EXPECT_THROW(enumerate_designs(9, Geometry::Open, 1, 9, 4, TimeClass::Integer), DomainError);
  EXPECT_THROW(enumerate_designs(4, Geometry::Open, 1, 3, 33, TimeClass::Integer), DomainError);
  EXPECT_THROW(enumerate_designs(4, Geometry::Open, 1, 1, 4, TimeClass::Integer), DomainError);
}
