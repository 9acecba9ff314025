#pragma once

// Finite-dimensional semantic state space: pure states, Hermitian
// observables, projective (Born-rule) measurement and unitary evolution.
// Dimensions here are tiny (2 to 8), so everything is computed exactly by
// dense eigendecomposition.

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include "sbell/random.hpp"

namespace sbell {

using Complex = std::complex<double>;

inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kDichotomicTolerance = 1e-10;
inline constexpr double kDegeneracyTolerance = 1e-8;

/// Unit vector |ψ⟩ in C^dim, expressed in the coordinate basis {|e_i⟩}.
class SemanticState {
 public:
  /// Throws std::invalid_argument unless dim ≥ 1 and ‖ψ‖ = 1 within 1e-10.
  explicit SemanticState(Eigen::VectorXcd amplitudes);

  /// Scales a nonzero vector to unit norm.
  static SemanticState normalized(Eigen::VectorXcd amplitudes);
  static SemanticState basis(std::size_t dim, std::size_t index);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
  const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
  Complex amplitude(std::size_t i) const { return amplitudes_(static_cast<Eigen::Index>(i)); }

  /// ⟨this|other⟩
  Complex inner(const SemanticState& other) const;

 private:
  Eigen::VectorXcd amplitudes_;
};

/// One eigenspace of an observable: eigenvalue m_i and projector P_i.
struct Eigenspace {
  double eigenvalue;
  Eigen::MatrixXcd projector;
};

/// Hermitian operator on C^dim.
class Observable {
 public:
  /// Throws std::invalid_argument unless square, nonempty and Hermitian within 1e-12.
  explicit Observable(Eigen::MatrixXcd matrix);

  /// Additionally requires M² = I within 1e-10 (spectrum ⊆ {+1, −1}).
  static Observable dichotomic(Eigen::MatrixXcd matrix);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
  bool is_dichotomic() const;

  /// Eigenspaces in ascending eigenvalue order, eigenvalues closer than 1e-8 merged.
  const std::vector<Eigenspace>& spectrum() const noexcept { return spectrum_; }
  /// Orthonormal eigenvectors (columns) and eigenvalues, unmerged.
  const Eigen::MatrixXcd& eigenvectors() const noexcept { return eigenvectors_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

 private:
  Eigen::MatrixXcd matrix_;
  Eigen::MatrixXcd eigenvectors_;
  Eigen::VectorXd eigenvalues_;
  std::vector<Eigenspace> spectrum_;
};

/// Generator of semantic time evolution, exp(−i·H·t/ħ_sem).
class EvolutionSpec {
 public:
  /// Throws std::invalid_argument when hbar_sem ≤ 0.
  EvolutionSpec(Observable hamiltonian, double duration, double hbar_sem = 1.0);

  const Observable& hamiltonian() const noexcept { return hamiltonian_; }
  double duration() const noexcept { return duration_; }
  double hbar_sem() const noexcept { return hbar_sem_; }

 private:
  Observable hamiltonian_;
  double duration_;
  double hbar_sem_;
};

struct OutcomeProbability {
  double eigenvalue;
  double probability;
};

/// P(m_i) = ⟨ψ|P_i|ψ⟩ for every (merged) eigenvalue of `obs`.
std::vector<OutcomeProbability> born_probabilities(const SemanticState& state, const Observable& obs);

struct Measurement {
  double outcome;
  SemanticState post_state;
};

/// Samples an eigenvalue with Born probabilities and collapses onto its eigenspace.
Measurement measure(const SemanticState& state, const Observable& obs, Rng& rng);

/// max |(AB − BA)_jk|
double commutator_norm(const Observable& a, const Observable& b);

SemanticState evolve(const SemanticState& state, const EvolutionSpec& evo);

/// Kronecker product a ⊗ b.
Observable tensor(const Observable& a, const Observable& b);

/// ⟨ψ|(A⊗B)|ψ⟩ for a state on the 4-dimensional two-subsystem space.
double joint_correlation(const SemanticState& state, const Observable& a, const Observable& b);

/// Probabilities of (a, b) = (+1,+1), (+1,−1), (−1,+1), (−1,−1) for the
/// joint measurement of dichotomic `a` on the first and `b` on the second
/// subsystem.
std::array<double, 4> joint_distribution(const SemanticState& state, const Observable& a,
                                         const Observable& b);

/// cos θ·σ_z + sin θ·σ_x, the dichotomic observable at planar angle θ.
Observable planar_spin(double theta);

/// (|01⟩ − |10⟩)/√2
SemanticState singlet();

}  // namespace sbell
