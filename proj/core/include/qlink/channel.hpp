#pragma once

// CPTP maps in operator-sum (Kraus) and unitary-dilation (Stinespring) form.
//
// Two channels are considered equal when the operator norm of the difference
// of their Choi matrices is within tolerance; Kraus sets are never compared
// elementwise because they are not unique.

#include <cstdint>
#include <functional>
#include <vector>

#include "qlink/tensor.hpp"

namespace qlink {

enum class PruneZeros : bool { kNo = false, kYes = true };

class KrausChannel {
 public:
  // Operators with Frobenius norm below kPruneThreshold are dropped unless
  // prune == kNo, so env_dim() counts the operators actually kept.
  KrausChannel(std::vector<Matrix> operators, HilbertFactorization input,
               HilbertFactorization output, PruneZeros prune = PruneZeros::kYes);
  // Single-factor spaces taken from the operator shape.
  explicit KrausChannel(std::vector<Matrix> operators, PruneZeros prune = PruneZeros::kYes);

  static KrausChannel identity(const HilbertFactorization& space);
  static KrausChannel unitary(const Matrix& u);

  const std::vector<Matrix>& operators() const noexcept { return operators_; }
  std::size_t env_dim() const noexcept { return operators_.size(); }
  const HilbertFactorization& input_space() const noexcept { return input_; }
  const HilbertFactorization& output_space() const noexcept { return output_; }
  std::size_t input_dim() const noexcept { return input_.total(); }
  std::size_t output_dim() const noexcept { return output_.total(); }

  // max_ij |(Σ_j K_j†K_j − I)_ij|, computed once at construction.
  double completeness_residual() const noexcept { return completeness_residual_; }

  static constexpr double kPruneThreshold = 1e-14;

 private:
  std::vector<Matrix> operators_;
  HilbertFactorization input_;
  HilbertFactorization output_;
  double completeness_residual_ = 0.0;
};

struct CptpReport {
  double residual = 0.0;
  bool passes = false;
};

// Unitary on system ⊗ environment (system factor first), environment start
// state |ω⟩ and an orthonormal environment basis {|ξ_j⟩} stored as columns.
struct UnitaryDilation {
  Matrix unitary;
  HilbertFactorization system;
  StateVector env_state;
  Matrix env_basis;

  std::size_t env_dim() const noexcept { return env_state.dim(); }
  // max of the unitarity residual of `unitary` and the orthonormality
  // residual of `env_basis`.
  double residual() const;
};

enum class ComposeMode { kSequential, kParallel };

// Σ K ρ K†. Throws DimensionError on shape mismatch and PreconditionError
// when the completeness residual exceeds `cptp_tolerance`.
DensityOperator apply(const KrausChannel& ch, const DensityOperator& rho,
                      double cptp_tolerance = tol::kStructural);
DensityOperator apply(const KrausChannel& ch, const StateVector& psi,
                      double cptp_tolerance = tol::kStructural);

// Tr_Y[U(ρ⊗ω)U†] evaluated directly from the dilation.
DensityOperator apply(const UnitaryDilation& dilation, const DensityOperator& rho);

CptpReport verify_cptp(const KrausChannel& ch, double tolerance = tol::kStructural);

// K_j = ⟨ξ_j|U|ω⟩. Throws PreconditionError when the dilation is not unitary.
KrausChannel dilation_to_kraus(const UnitaryDilation& dilation,
                               PruneZeros prune = PruneZeros::kYes,
                               double tolerance = tol::kStructural);

// Stinespring isometry Σ_j K_j ⊗ |j⟩ completed to a unitary with a
// deterministic orthonormal-complement extension; environment starts in |0⟩.
UnitaryDilation kraus_to_dilation(const KrausChannel& ch, double tolerance = tol::kStructural);

// Sequential: a ∘ b (b acts first), Kraus {A_i B_j}. Parallel: {A_i ⊗ B_j}.
KrausChannel compose(const KrausChannel& a, const KrausChannel& b, ComposeMode mode);

// Choi matrix Σ_ab |a⟩⟨b| ⊗ Λ(|a⟩⟨b|), input factor first.
Matrix choi(const KrausChannel& ch);
Matrix choi(const UnitaryDilation& dilation);
double choi_distance(const KrausChannel& a, const KrausChannel& b);

// A multi-use channel {Λ^(n)}: a deterministic generator n ↦ Λ^(n) on
// carrier_dim^n inputs, the output factors that belong to the n-th use, and
// the environment dimension d_Y^(n) of the representation provided.
class MultiUseFamily {
 public:
  using Generator = std::function<KrausChannel(std::size_t)>;
  using FactorSelector = std::function<std::vector<std::size_t>(std::size_t)>;
  using EnvDims = std::function<std::size_t(std::size_t)>;

  // Defaults: the n-th use owns the last output factor; d_Y^(n) is the
  // operator count of the generated Kraus set.
  MultiUseFamily(Generator generator, std::size_t carrier_dim,
                 FactorSelector last_use_outputs = {}, EnvDims env_dims = {});

  KrausChannel channel(std::size_t n) const;
  std::size_t carrier_dim() const noexcept { return carrier_dim_; }
  std::size_t env_dim(std::size_t n) const;
  std::vector<std::size_t> last_use_outputs(std::size_t n) const;

 private:
  Generator generator_;
  std::size_t carrier_dim_;
  FactorSelector last_use_outputs_;
  EnvDims env_dims_;
};

// Λ^(n) = Λ^{⊗n}.
MultiUseFamily memoryless_family(const KrausChannel& single);

// Carriers interact one at a time with a d_mem-dimensional memory that is
// never reset: Λ^(n)(ρ) = Tr_mem[U_n⋯U_1 (ρ ⊗ |0⟩⟨0|) U_1†⋯U_n†], U_k being
// `coupling` on (carrier k, memory). d_Y^(n) = d_mem for every n.
KrausChannel finite_memory_channel(const Matrix& coupling, std::size_t carrier_dim,
                                   std::size_t memory_dim, std::size_t uses);
MultiUseFamily finite_memory_family(const Matrix& coupling, std::size_t carrier_dim,
                                    std::size_t memory_dim);

// Tr_{n-th use}[Λ^(n)(ρ⊗σ)] = Λ^(n−1)(ρ) on a fixed seeded panel of random
// product inputs.
bool marginal_consistency(const MultiUseFamily& family, std::size_t n, double tolerance,
                          std::size_t panel_size = 3, std::uint64_t seed = 7);
// Largest deviation found by the same panel.
double marginal_deviation(const MultiUseFamily& family, std::size_t n,
                          std::size_t panel_size = 3, std::uint64_t seed = 7);

// (1/n)·log2 d_Y^(n) for n = 1..n_max.
std::vector<double> pm_rate(const MultiUseFamily& family, std::size_t n_max);

}  // namespace qlink
