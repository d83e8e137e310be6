#pragma once

#include <Eigen/Dense>

namespace qlink {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  bool converged = false;
};

// min ||A x - b||_2 subject to x >= 0 (Lawson–Hanson active set).
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations = 0);

}  // namespace qlink
