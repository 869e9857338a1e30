// Gauss-Hermite quadrature in probabilist normalization.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace omda {

// Rule for E_{Z~N(0,1)}[f(Z)] ~ sum_i w_i f(z_i).  Weights sum to 1, nodes are
// symmetric about 0, and the rule is exact for polynomials of degree <= 2*order-1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;
};

// Valid orders are 1..512.  Throws std::invalid_argument otherwise.
QuadratureRule gauss_hermite_rule(int order);

// Applies the rule to f.  Throws std::domain_error, identifying the offending
// node, if f is non-finite anywhere on the node set.
template <class F>
double expect_std_normal(F&& f, const QuadratureRule& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v)) {
      throw std::domain_error("expect_std_normal: integrand non-finite at node " +
                              std::to_string(i) + " (z = " + std::to_string(rule.nodes[i]) + ")");
    }
    acc += rule.weights[i] * v;
  }
  return acc;
}

}  // namespace omda
