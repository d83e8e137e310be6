#pragma once

// Zero-error codes for channels with a small environment.
//
// Classical codes are grown greedily: each new codeword is orthogonal to every
// vector K_i†K_j|c_k⟩ produced by the codewords already chosen, so the
// channel outputs of distinct codewords have orthogonal supports. Quantum
// codes superpose classical codewords over the two groups of a Radon
// partition of their Knill–Laflamme matrices, which makes those matrices
// coincide. The block decoder diagonalizes the shared matrix and recovers
// code states through a projective measurement followed by a unitary.

#include <cstdint>
#include <optional>
#include <vector>

#include "qlink/channel.hpp"
#include "qlink/random.hpp"
#include "qlink/tensor.hpp"

namespace qlink {

struct ClassicalZeroErrorCode {
  std::vector<StateVector> codewords;
  // M(k)_ij = ⟨c_k|K_i†K_j|c_k⟩, one d_Y x d_Y matrix per codeword.
  std::vector<Matrix> kl_matrices;
  std::size_t carrier_dim = 2;
  std::size_t uses = 1;
  std::size_t env_dim = 1;

  std::size_t size() const noexcept { return codewords.size(); }
  // (1/n)·log2 ℓ bits per use.
  double rate() const;
  // d^n / d_Y^2, the guaranteed lower bound on the size.
  double size_bound() const;
};

struct QuantumZeroErrorCode {
  std::vector<StateVector> basis;
  Matrix shared_matrix;
  std::size_t carrier_dim = 2;
  std::size_t uses = 1;
  std::size_t env_dim = 1;

  std::size_t size() const noexcept { return basis.size(); }
  double rate() const;
  // Columns are the basis vectors.
  Matrix isometry() const;
  Matrix projector() const;
  // Size bounds for a given number of uses: the loose form d^n/(d_Y^4+d_Y^2)
  // and the tight form d^n/(d_Y^2+2) that follows from running Radon in the
  // d_Y^2-dimensional real space of Hermitian d_Y x d_Y matrices.
  double loose_size_bound() const;
  double tight_size_bound() const;
};

struct CodeReport {
  double residual = 0.0;
  bool passes = false;
};

struct RadonPartition {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  std::vector<double> first_weights;
  std::vector<double> second_weights;
  // max-abs difference of the two convex combinations.
  double residual = 0.0;
};

struct GreedyOptions {
  std::optional<std::size_t> max_size;
  // Vectors whose Gram–Schmidt remainder falls below this relative norm are
  // treated as already in the span.
  double dependence_threshold = 1e-12;
};

ClassicalZeroErrorCode greedy_classical_code(const KrausChannel& ch, const GreedyOptions& options = {});

// max over k≠k', i, j of |⟨c_k|K_i†K_j|c_k'⟩|.
CodeReport verify_classical(const ClassicalZeroErrorCode& code, const KrausChannel& ch,
                            double tolerance = 1e-9);

// Dimension of span{K_i†K_j|c_k⟩}; used for the greedy termination invariant.
std::size_t greedy_span_dimension(const ClassicalZeroErrorCode& code, const KrausChannel& ch,
                                  double threshold = 1e-10);

// Affine dependence Σ α_k M(k) = 0, Σ α_k = 0 split by sign. The group that
// contains the largest |α_k| is `first`.
RadonPartition radon_partition(const std::vector<Matrix>& points, double tolerance = 1e-9);

// logical_dim == 2 follows the guaranteed Radon path on the first d_Y^2+2
// codewords. logical_dim > 2 is a best-effort search: the mean of all M(k)
// is targeted as a convex combination within each of logical_dim disjoint
// round-robin pools. Throws ConstructionError when either path fails.
QuantumZeroErrorCode build_quantum_code(const ClassicalZeroErrorCode& code, const KrausChannel& ch,
                                        std::size_t logical_dim = 2);

// Quantum code assembled from explicit basis vectors (shared matrix taken from
// the first basis vector).
QuantumZeroErrorCode make_quantum_code(std::vector<StateVector> basis, const KrausChannel& ch);

// max of |⟨q_k|K_i†K_j|q_k'⟩| (k≠k') and |⟨q_k|K_i†K_j|q_k⟩ − M_ij|.
CodeReport verify_quantum(const QuantumZeroErrorCode& code, const KrausChannel& ch,
                          double tolerance = 1e-8);

// One recovery branch of the decoder.
struct DecoderBlock {
  std::size_t index = 0;       // j
  double lambda = 0.0;         // λ_j
  Matrix rotated_kraus;        // F_j = Σ_i O_ij K_i
  Matrix unitary;              // U_j from the polar decomposition of F_j P
  Matrix range_basis;          // U_j Q: orthonormal basis of the range of P_j
  Matrix projector() const;    // P_j = U_j P U_j†
};

struct DecodeBranch {
  std::size_t outcome = 0;
  double probability = 0.0;
  DensityOperator recovered;
};

class BlockDecoder {
 public:
  const Matrix& rotation() const noexcept { return rotation_; }
  // All eigenvalues of the shared matrix, nonincreasing.
  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
  // Blocks with λ_j above kActiveThreshold.
  const std::vector<DecoderBlock>& blocks() const noexcept { return blocks_; }
  const Matrix& code_isometry() const noexcept { return code_isometry_; }
  const HilbertFactorization& input_space() const noexcept { return input_space_; }

  // max of |⟨q_k|F_i†F_j|q_k'⟩ − δ_kk' δ_ij λ_j|.
  double orthogonality_residual() const noexcept { return orthogonality_residual_; }
  // max of |P_i P_j − δ_ij P_j| over active blocks.
  double projector_residual() const;
  double eigenvalue_sum() const;

  static constexpr double kActiveThreshold = 1e-12;

  friend BlockDecoder build_decoder(const QuantumZeroErrorCode&, const KrausChannel&);

 private:
  Matrix rotation_;
  std::vector<double> eigenvalues_;
  std::vector<DecoderBlock> blocks_;
  Matrix code_isometry_;
  HilbertFactorization input_space_;
  double orthogonality_residual_ = 0.0;
};

// Throws PreconditionError when the shared matrix has an eigenvalue below −1e-9.
BlockDecoder build_decoder(const QuantumZeroErrorCode& code, const KrausChannel& ch);

// All measurement branches for a channel output. Throws LeakageError when
// Σ_j Tr[P_j ρ] < 1 − leakage_tolerance.
std::vector<DecodeBranch> decode_branches(const BlockDecoder& decoder, const DensityOperator& rho_out,
                                          double leakage_tolerance = 1e-8);
// One sampled measurement outcome.
DecodeBranch decode(const BlockDecoder& decoder, const DensityOperator& rho_out, Rng& rng,
                    double leakage_tolerance = 1e-8);

// max-abs of Σ_j λ_j P_j U_j ρ U_j† P_j − Λ(ρ) for ρ = |ψ⟩⟨ψ|.
double block_form_residual(const BlockDecoder& decoder, const KrausChannel& ch, const StateVector& psi);
double block_form_residual(const BlockDecoder& decoder, const KrausChannel& ch, const DensityOperator& rho);

struct SchmidtStructureReport {
  std::vector<double> predicted_coefficients;  // √λ_j, nonincreasing
  std::vector<double> measured_coefficients;   // Schmidt coefficients of U(ψ⊗ω)
  double coefficient_residual = 0.0;
  // Distance between predicted and measured Schmidt subspaces, blocks with
  // equal λ merged.
  double vector_residual = 0.0;
  bool passes = false;
};

SchmidtStructureReport schmidt_structure_check(const QuantumZeroErrorCode& code,
                                               const UnitaryDilation& dilation, const StateVector& psi,
                                               double tolerance = 1e-8);

// Random normalized superposition of the code basis.
StateVector random_code_state(const QuantumZeroErrorCode& code, Rng& rng);

}  // namespace qlink
