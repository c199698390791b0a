#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace pst {

/// Dense polynomial in E, coefficients in ascending degree.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) {}

  static Polynomial constant(double v) { return Polynomial({v}); }
  static Polynomial monomial(int degree, double coeff = 1.0) {
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Polynomial(std::move(c));
  }
  /// prod (E - r_k)
  static Polynomial from_roots(const std::vector<double>& roots) {
    Polynomial p = constant(1.0);
    for (double r : roots) p = p * Polynomial({-r, 1.0});
    return p;
  }

  const std::vector<double>& coefficients() const { return c_; }
  double coefficient(int k) const {
    return k >= 0 && k < static_cast<int>(c_.size()) ? c_[static_cast<std::size_t>(k)] : 0.0;
  }

  /// Formal degree (size - 1), trailing zeros trimmed by trimmed().
  int degree() const { return static_cast<int>(c_.size()) - 1; }

  Polynomial trimmed() const {
    std::vector<double> c = c_;
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    return Polynomial(std::move(c));
  }

  double operator()(double e) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * e + *it;
    return acc;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i) c[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) c[i] += b.c_[i];
    return Polynomial(std::move(c));
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + b * -1.0; }
  friend Polynomial operator*(const Polynomial& a, double s) {
    std::vector<double> c = a.c_;
    for (double& x : c) x *= s;
    return Polynomial(std::move(c));
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.c_.empty() || b.c_.empty()) return Polynomial();
    std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(c));
  }

 private:
  std::vector<double> c_;
};

}  // namespace pst
