#include "qlink/nnls.hpp"

#include <limits>
#include <vector>

namespace qlink {

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations) {
  const Eigen::Index n = a.cols();
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().maxCoeff() *
                     static_cast<double>(std::max(a.rows(), n));

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  NnlsResult out;

  auto solve_passive = [&](Eigen::VectorXd& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t q = 0; q < idx.size(); ++q) ap.col(static_cast<Eigen::Index>(q)) = a.col(idx[q]);
    const Eigen::VectorXd sp = ap.colPivHouseholderQr().solve(b);
    s.setZero(n);
    for (std::size_t q = 0; q < idx.size(); ++q) s(idx[q]) = sp(static_cast<Eigen::Index>(q));
  };

  int iterations = 0;
  Eigen::VectorXd w = a.transpose() * (b - a * x);
  while (iterations < max_iterations) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        t = j;
      }
    }
    if (t < 0) {
      out.converged = true;
      break;
    }
    passive[static_cast<std::size_t>(t)] = true;

    Eigen::VectorXd s;
    while (true) {
      ++iterations;
      solve_passive(s);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) feasible = false;
      }
      if (feasible) {
        x = s;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
          alpha = std::min(alpha, x(j) / (x(j) - s(j)));
        }
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
      if (iterations >= max_iterations) break;
    }
    w = a.transpose() * (b - a * x);
  }
  out.x = x;
  out.residual_norm = (a * x - b).norm();
  return out;
}

}  // namespace qlink
