#include "omda/quadrature.hpp"

#include <Eigen/Dense>

namespace omda {

// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials:
// zero diagonal, off-diagonal sqrt(k).  Eigenvalues are the nodes and the squared
// first eigenvector components are the weights (total mass of N(0,1) is 1).
QuadratureRule gauss_hermite_rule(int order) {
  if (order < 1 || order > 512) {
    throw std::invalid_argument("gauss_hermite_rule: order must be in [1, 512], got " +
                                std::to_string(order));
  }

  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("gauss_hermite_rule: eigen decomposition failed");
  }

  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);  // ascending
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }

  // Enforce exact +/- symmetry of the node set so odd integrands cancel to
  // rounding error.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double node = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    rule.nodes[i] = -node;
    rule.nodes[j] = node;
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;

  return rule;
}

}  // namespace omda
