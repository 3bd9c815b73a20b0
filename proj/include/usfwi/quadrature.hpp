#pragma once

/// \file usfwi/quadrature.hpp
/// \brief Gauss–Legendre rules on [-1, 1].

#include "usfwi/core.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <array>
#include <vector>

namespace usfwi {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline GaussRule make_gauss_rule(int n) {
  GaussRule rule;
  if (n == 1) {
    rule.nodes = {0.0};
    rule.weights = {2.0};
    return rule;
  }
  // legendre_p_zeros returns the non-negative roots in ascending order.
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0) continue;
    rule.nodes.push_back(-*it);
  }
  for (double x : zeros) rule.nodes.push_back(x);
  for (double x : rule.nodes) {
    const double dp = boost::math::legendre_p_prime(n, x);
    rule.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
  return rule;
}

inline constexpr int kMaxGaussOrder = 48;

}  // namespace detail

/// Gauss–Legendre rule with n points, 1 <= n <= 48. Thread-safe.
inline const GaussRule& gauss_rule(int n) {
  static const std::array<GaussRule, detail::kMaxGaussOrder + 1> rules = [] {
    std::array<GaussRule, detail::kMaxGaussOrder + 1> r;
    for (int k = 1; k <= detail::kMaxGaussOrder; ++k) r[k] = detail::make_gauss_rule(k);
    return r;
  }();
  if (n < 1 || n > detail::kMaxGaussOrder) throw Error("unsupported Gauss-Legendre order");
  return rules[n];
}

}  // namespace usfwi
