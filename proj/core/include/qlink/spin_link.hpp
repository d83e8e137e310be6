#pragma once

// Dual-rail spin-chain mediator between two qutrit registers.
//
// Registers: Alice holds n qutrits a_1..a_n, Bob holds m = Σ m_k qutrits split
// into sub-registers B^(1)..B^(n). Qutrit symbols are 0, 1 and the fiduciary
// E. The mediator is L chains of N spins each; spin index q = c·N + s for
// chain c, site s, and the mediator configuration is an integer whose most
// significant bit is spin 0 (bit set = spin up).
//
// Site 0 of every chain touches Alice, site N−1 touches Bob. The excitation
// number (non-E qutrits plus up spins) is conserved by every step, so all
// evolution is carried out inside one fixed-excitation sector.

#include <cstdint>
#include <optional>
#include <vector>

#include "qlink/channel.hpp"
#include "qlink/tensor.hpp"

namespace qlink {

enum Symbol : std::uint8_t { kZero = 0, kOne = 1, kEmpty = 2 };

struct LinkModel {
  std::size_t chains = 2;
  std::size_t sites = 1;
  // couplings[c][s] is the exchange strength of bond (s, s+1) on chain c.
  std::vector<std::vector<double>> couplings;
  double tau = 0.0;

  static LinkModel uniform(std::size_t sites, double coupling, double tau, std::size_t chains = 2);

  std::size_t spins() const noexcept { return chains * sites; }
  std::size_t mediator_dim() const noexcept { return std::size_t{1} << spins(); }
  // Throws PreconditionError on an inconsistent coupling table.
  void validate() const;
};

class Schedule {
 public:
  // Throws PreconditionError unless every m_k >= 1.
  explicit Schedule(std::vector<std::size_t> budgets);
  static Schedule uniform(std::size_t uses, std::size_t budget);
  // Allows m_k = 0 (Bob idle during use k); only for counterfactual comparisons.
  static Schedule hypothetical(std::vector<std::size_t> budgets);

  std::size_t uses() const noexcept { return budgets_.size(); }
  const std::vector<std::size_t>& budgets() const noexcept { return budgets_; }
  std::size_t budget(std::size_t k) const { return budgets_.at(k); }
  std::size_t total() const noexcept { return total_; }
  // Index of the first Bob qutrit of sub-register k.
  std::size_t offset(std::size_t k) const { return offsets_.at(k); }

 private:
  Schedule() = default;
  std::vector<std::size_t> budgets_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

std::size_t popcount(std::uint64_t x) noexcept;

// Mediator Hamiltonian Σ_bonds (J/2)(XX+YY+ZZ) on all 2^{LN} configurations.
Matrix build_hamiltonian(const LinkModel& model);
// The same restricted to the mediator configurations in `configs` (any set
// closed under the dynamics, e.g. a fixed popcount), in the order given.
Matrix build_hamiltonian(const LinkModel& model, const std::vector<std::uint64_t>& configs);
// Mediator configurations with exactly `e` up spins, increasing.
std::vector<std::uint64_t> mediator_configs(std::size_t spins, std::size_t e);
// Σ_{e<=k} C(L·N, e) sums for the register/mediator sector size.
std::size_t sector_dimension(const LinkModel& model, std::size_t registers, std::size_t excitations);

struct Configuration {
  std::vector<std::uint8_t> registers;  // a_1..a_n then Bob's m qutrits
  std::uint64_t mediator = 0;
};

class SectorBasis {
 public:
  SectorBasis(const LinkModel& model, std::size_t registers, std::size_t excitations);

  std::size_t excitation_count() const noexcept { return excitations_; }
  std::size_t registers() const noexcept { return registers_; }
  std::size_t spins() const noexcept { return spins_; }
  std::size_t size() const noexcept { return keys_.size(); }

  Configuration config(std::size_t i) const;
  std::uint64_t mediator(std::size_t i) const { return keys_[i] & mask_; }
  std::uint64_t register_index(std::size_t i) const { return keys_[i] >> spins_; }
  std::optional<std::size_t> index_of(const Configuration& c) const;
  std::optional<std::size_t> index_of(std::uint64_t register_index, std::uint64_t mediator) const;
  // Index in the full space 3^registers ⊗ 2^spins.
  std::uint64_t full_index(std::size_t i) const { return keys_[i]; }

  // Contiguous runs of basis states sharing one register configuration.
  struct Block {
    std::size_t start;
    std::size_t excitations;  // mediator excitations in this block
  };
  const std::vector<Block>& blocks() const noexcept { return blocks_; }

 private:
  std::size_t registers_;
  std::size_t spins_;
  std::size_t excitations_;
  std::uint64_t mask_;
  std::vector<std::uint64_t> keys_;
  std::vector<Block> blocks_;
};

std::uint64_t encode_registers(const std::vector<std::uint8_t>& digits);
std::vector<std::uint8_t> decode_registers(std::uint64_t index, std::size_t count);

class LinkSimulator {
 public:
  LinkSimulator(LinkModel model, Schedule schedule);

  const LinkModel& model() const noexcept { return model_; }
  const Schedule& schedule() const noexcept { return schedule_; }
  const SectorBasis& basis() const noexcept { return basis_; }
  std::size_t dim() const noexcept { return basis_.size(); }
  std::size_t registers() const noexcept { return schedule_.uses() + schedule_.total(); }

  // |x⟩_A |E⟩^⊗m |ω⟩_M for a message-subspace input on 2^n amplitudes.
  Vector initial_state(const Vector& message) const;

  void free_evolution(Vector& v) const;
  void alice_gate(Vector& v, std::size_t k) const;
  // Bob gate on Bob qutrit j (global index in 0..m−1).
  void bob_gate(Vector& v, std::size_t j) const;
  void apply_v(Vector& v, std::size_t k) const;
  void apply_w(Vector& v) const;

  Matrix free_matrix() const;
  Matrix alice_gate_matrix(std::size_t k) const;
  Matrix bob_gate_matrix(std::size_t j) const;
  Matrix v_matrix(std::size_t k) const;
  Matrix w_matrix() const;

  // Per-basis-state mediator / total excitation numbers.
  RealVector mediator_excitations() const;
  RealVector total_excitations() const;

 private:
  template <class F>
  Matrix as_matrix(F&& f) const;
  std::vector<std::size_t> swap_permutation(std::size_t reg, std::size_t site) const;

  LinkModel model_;
  Schedule schedule_;
  SectorBasis basis_;
  std::vector<Matrix> propagators_;  // per mediator excitation count
  std::vector<std::vector<std::size_t>> alice_perm_;
  std::vector<std::vector<std::size_t>> bob_perm_;
};

// Λ_{A→AB}: message qubits in, all register qutrits out (a_1..a_n, then Bob),
// the mediator traced. Zero Kraus operators are dropped.
KrausChannel channel_a_to_ab(const LinkModel& model, const Schedule& schedule);
// Λ_{A→B}: Alice's registers traced as well.
KrausChannel channel_a_to_b(const LinkModel& model, const Schedule& schedule);
// Λ_{A→A}: Bob's registers traced.
KrausChannel channel_a_to_a(const LinkModel& model, const Schedule& schedule);

// n ↦ Λ_{A→AB} with every m_k = budget. The n-th use owns a_n and B^(n);
// env_dim reports d_M = 2^{LN}.
MultiUseFamily link_family(const LinkModel& model, std::size_t budget);

}  // namespace qlink
