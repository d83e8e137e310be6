#pragma once

// Seeded generators for random states, operators and unitaries. Every function
// draws from the caller's engine so that results are reproducible per seed.

#include <cstdint>
#include <random>

#include "qlink/tensor.hpp"

namespace qlink {

using Rng = std::mt19937_64;

// Entries i.i.d. complex standard normal.
Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
Matrix random_unitary(Eigen::Index dim, Rng& rng);

// Haar-distributed isometry with `cols` orthonormal columns.
Matrix random_isometry(Eigen::Index rows, Eigen::Index cols, Rng& rng);

Matrix random_hermitian(Eigen::Index dim, Rng& rng);

StateVector random_state(const HilbertFactorization& space, Rng& rng);

// rank 0 means full rank.
DensityOperator random_density(const HilbertFactorization& space, Rng& rng,
                               Eigen::Index rank = 0);

}  // namespace qlink
