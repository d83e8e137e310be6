#include "qlink/random.hpp"

#include <cmath>

namespace qlink {

Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  }
  return g;
}

Matrix random_isometry(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const Matrix g = ginibre(rows, cols, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < cols; ++j) {
    const Complex d = r(j, j);
    const double a = std::abs(d);
    if (a > 0.0) q.col(j) *= d / a;
  }
  return q;
}

Matrix random_unitary(Eigen::Index dim, Rng& rng) { return random_isometry(dim, dim, rng); }

Matrix random_hermitian(Eigen::Index dim, Rng& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  return 0.5 * (g + g.adjoint());
}

StateVector random_state(const HilbertFactorization& space, Rng& rng) {
  const Matrix g = ginibre(static_cast<Eigen::Index>(space.total()), 1, rng);
  return StateVector(Vector(g.col(0)), space).normalized();
}

DensityOperator random_density(const HilbertFactorization& space, Rng& rng, Eigen::Index rank) {
  const auto d = static_cast<Eigen::Index>(space.total());
  const Matrix g = ginibre(d, rank > 0 ? rank : d, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityOperator(std::move(rho), space);
}

}  // namespace qlink
