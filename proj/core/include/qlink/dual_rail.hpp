#pragma once

// The dual-rail transfer protocol: run, decompose, parity check, recover, and
// account for the fallback resources.
//
// Vectors named *_component live in the sector basis of the run's simulator.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qlink/random.hpp"
#include "qlink/spin_link.hpp"
#include "qlink/tensor.hpp"

namespace qlink {

struct ProtocolRun {
  Vector input;        // 2^n message amplitudes
  Vector final_state;  // W|ψ, E^m, ω⟩
  double eta0 = 0.0;   // weight of the mediator ground component
  double pi_n = 0.0;   // Π p_k
  std::vector<double> p_list;

  // final = √η₀·phi + √(1−η₀)·chi; phi = √(Π/η₀)·yes + √(1−Π/η₀)·delta.
  Vector phi_component;
  Vector chi_component;
  Vector yes_component;
  Vector delta_component;

  // Schmidt coefficients across (A B | M) and |⟨ω|v₀⟩| for the leading
  // mediator vector.
  std::vector<double> schmidt_coefficients;
  double schmidt_ground_overlap = 0.0;

  // max of the ProtocolRun invariant residuals (orthogonality, reconstruction).
  double decomposition_residual = 0.0;
};

class DualRailProtocol {
 public:
  DualRailProtocol(LinkModel model, Schedule schedule);

  const LinkSimulator& simulator() const noexcept { return sim_; }
  std::size_t uses() const noexcept { return sim_.schedule().uses(); }

  // Throws PreconditionError unless psi has 2^n unit-norm amplitudes.
  ProtocolRun run(const Vector& psi) const;

  // Conditional success probabilities along the all-success trajectory.
  std::vector<double> success_probabilities(const Vector& psi) const;

  // Every B^(k) holds exactly one excitation.
  bool is_yes(std::size_t basis_index) const { return yes_mask_[basis_index]; }
  Vector project_yes(const Vector& v) const;
  Vector project_no(const Vector& v) const;

  // Max spread of (p_1..p_n, η₀) over the panel.
  double input_independence(const std::vector<Vector>& panel) const;

  struct ParityOutcome {
    bool yes = false;
    double probability = 0.0;
    Vector post_state;
  };
  ParityOutcome parity_measurement(const ProtocolRun& run, Rng& rng) const;

  struct SamplingReport {
    std::size_t shots = 0;
    std::size_t yes_count = 0;
    double frequency = 0.0;
    double sigma = 0.0;
    bool within_three_sigma = false;
  };
  SamplingReport sample_parity(const ProtocolRun& run, Rng& rng, std::size_t shots = 100000) const;

  struct YesRecovery {
    Vector decoded;         // Bob-local decoder output on 2^n amplitudes
    double fidelity = 0.0;  // |⟨ψ|decoded⟩|²
    // max |U'(ψ⊗E^m) − E^n⊗Φ_ψ| and the unitarity residual of U'.
    double swap_residual = 0.0;
    double unitarity_residual = 0.0;
  };
  // Throws PreconditionError when the YES branch has zero probability.
  YesRecovery recover_yes(const ProtocolRun& run) const;

  // NO-branch σ_AB on the register configurations that carry weight.
  struct NoBranchState {
    std::vector<std::uint64_t> configurations;
    Matrix sigma;  // normalized by 1 − Π_n
  };
  NoBranchState no_branch_state(const ProtocolRun& run) const;

  // Kraus operators ⟨μ|P_NO W|x, E^m, ω⟩ (rows: register configurations).
  std::vector<Matrix> no_branch_kraus() const;

  // Knill–Laflamme Gram residual of the NO-conditioned channel on the columns
  // of `basis` (2^n x k, orthonormal); 0 when the NO branch is empty.
  double no_branch_residual(const Matrix& basis) const;
  double no_branch_residual() const;  // full logical space

  // An orthonormal code subspace 𝒬_A for the NO-conditioned channel built
  // with the zero-error construction; nullopt when 2^n does not exceed
  // 2·d_M²(d_M²+1) with d_M the number of NO-branch Kraus operators.
  std::optional<Matrix> no_branch_code_subspace() const;

 private:
  // Normalized single-excitation amplitude profile of each B^(k) on the
  // success trajectory.
  std::vector<std::vector<Complex>> bob_profiles() const;
  // Columns W|x, E^m, ω⟩ for every message basis input x.
  Matrix evolved_basis() const;

  LinkSimulator sim_;
  std::vector<bool> yes_mask_;
  std::vector<bool> ground_mask_;
  // step_masks_[k][i]: B^(k) holds one excitation and the mediator is empty.
  std::vector<std::vector<bool>> step_masks_;
};

enum class FallbackMode { kTeleport, kRetry };

struct RateReport {
  FallbackMode mode = FallbackMode::kTeleport;
  double epsilon = 0.0;
  double n1 = 0.0;
  double teleport_ebits = 0.0;
  double teleport_cbits = 0.0;
  double first_round_rate = 1.0;
  std::vector<double> retry_rate_sequence;
  double asymptotic_rate = 1.0;
};

// Teleport mode uses pi_values.front() as Π_n. Retry mode requires uniform
// pi_values (Π = 1 − ε) and ε·log₂3 < 1; `rounds` entries of the retry
// sequence are reported.
RateReport resource_accounting(std::size_t n, const std::vector<double>& pi_values, std::size_t mediator_dim,
                               FallbackMode mode, std::size_t rounds = 8);

std::string to_string(FallbackMode mode);

}  // namespace qlink
