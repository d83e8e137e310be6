#pragma once

// Spectral analysis of the receiver-side map 𝒩(ω) = Tr_b[S_b e^{−iHτ}(ω⊗|E⟩⟨E|)e^{iHτ}S_b†]
// on a mediator sector, and the memoryless approximation it induces.

#include <cstdint>
#include <vector>

#include "qlink/channel.hpp"
#include "qlink/spin_link.hpp"

namespace qlink {

// Column-stacking superoperator: vec(KρK†) = (conj(K) ⊗ K) vec(ρ).
class Superoperator {
 public:
  explicit Superoperator(const KrausChannel& source);

  const Matrix& matrix() const noexcept { return matrix_; }
  const KrausChannel& source() const noexcept { return source_; }
  std::size_t dim() const noexcept { return source_.input_dim(); }

  Matrix apply(const Matrix& rho) const;

 private:
  KrausChannel source_;
  Matrix matrix_;
};

Vector vectorize(const Matrix& m);
Matrix unvectorize(const Vector& v, Eigen::Index dim);

struct SpectralReport {
  std::vector<Complex> eigenvalues;  // nonincreasing modulus
  std::vector<DensityOperator> fixed_points;
  double gap = 0.0;  // 1 − |λ₂|
  double fixed_point_purity = 0.0;
  bool is_mixing = false;

  static constexpr double kPeripheral = 1e-10;
};

SpectralReport to_spectrum(const Superoperator& sup);

// Tr[(ω*)²]; throws PreconditionError unless exactly one fixed point exists.
double fixed_point_purity(const SpectralReport& report);
// Purity within 1e-9 of 1.
bool is_information_draining(const SpectralReport& report);

// Mediator configurations with at most `max_excitations` up spins, increasing.
std::vector<std::uint64_t> mediator_sector(const LinkModel& model, std::size_t max_excitations);

// Receiver map restricted to mediator_sector(model, max_excitations).
KrausChannel receiver_map(const LinkModel& model, std::size_t max_excitations = 1);

// Trace distances D(𝒩^k(ω₀), ω*) for k = 0..steps. Throws PreconditionError
// when the map is not mixing.
std::vector<double> iterate_convergence(const KrausChannel& ch, const DensityOperator& omega0,
                                        std::size_t steps);
// Geometric-mean decay ratio (d_end/d_{end−window})^{1/window} of a distance sequence.
double tail_decay_ratio(const std::vector<double>& distances, std::size_t window = 10);

// Λ̃(ρ_A) = Tr_M[S_A(ρ_A ⊗ ω*)S_A†] for one message qubit in and Alice's
// qutrit out, ω* being the fixed point of the receiver map on the given sector.
KrausChannel effective_memoryless(const LinkModel& model, std::size_t max_excitations = 1);

// Choi distance between Λ_{A→A}^(n) and Λ̃^{⊗n}.
double memoryless_distance(const LinkModel& model, const Schedule& schedule,
                           std::size_t max_excitations = 1);

}  // namespace qlink
