#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <vector>

namespace pst {

struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Fraction&) const = default;
};

/// Continued-fraction convergents p_k/q_k of x with q_k <= max_den, in order.
/// Stops early once a convergent reproduces x exactly.
inline std::vector<Fraction> convergents(double x, std::int64_t max_den) {
  std::vector<Fraction> out;
  if (!std::isfinite(x) || max_den < 1) return out;
  // p_{-1}/q_{-1} = 1/0, p_{-2}/q_{-2} = 0/1
  std::int64_t p_prev = 1, q_prev = 0, p_prev2 = 0, q_prev2 = 1;
  double rest = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_real = std::floor(rest);
    if (std::abs(a_real) > 4e15) break;
    const auto a = static_cast<std::int64_t>(a_real);
    const std::int64_t p = a * p_prev + p_prev2;
    const std::int64_t q = a * q_prev + q_prev2;
    if (q > max_den) break;
    out.push_back({p, q});
    const double frac = rest - a_real;
    if (frac == 0.0 || static_cast<double>(p) / static_cast<double>(q) == x) break;
    rest = 1.0 / frac;
    p_prev2 = p_prev;
    q_prev2 = q_prev;
    p_prev = p;
    q_prev = q;
  }
  return out;
}

/// Smallest-denominator convergent within `tol` of x.
inline std::optional<Fraction> rational_approximation(double x, std::int64_t max_den, double tol) {
  for (const Fraction& f : convergents(x, max_den))
    if (std::abs(x - f.value()) <= tol) return f;
  return std::nullopt;
}

}  // namespace pst
