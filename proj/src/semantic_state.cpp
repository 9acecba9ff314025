#include "sbell/semantic_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sbell {
namespace {

void require_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

double max_abs(const Eigen::MatrixXcd& m) {
  double out = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out = std::max(out, std::abs(m(i, j)));
  return out;
}

}  // namespace

SemanticState::SemanticState(Eigen::VectorXcd amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() == 0) throw std::invalid_argument("SemanticState: dim must be >= 1");
  const double norm2 = amplitudes_.squaredNorm();
  if (!std::isfinite(norm2) || std::abs(norm2 - 1.0) > kNormTolerance) {
    throw std::invalid_argument("SemanticState: amplitudes not normalized (|psi|^2 = " +
                                std::to_string(norm2) + ")");
  }
}

SemanticState SemanticState::normalized(Eigen::VectorXcd amplitudes) {
  const double n = amplitudes.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("SemanticState: zero vector");
  amplitudes /= n;
  return SemanticState(std::move(amplitudes));
}

SemanticState SemanticState::basis(std::size_t dim, std::size_t index) {
  if (index >= dim) throw std::invalid_argument("SemanticState::basis: index out of range");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return SemanticState(std::move(v));
}

Complex SemanticState::inner(const SemanticState& other) const {
  require_dims(dim(), other.dim(), "inner");
  return amplitudes_.dot(other.amplitudes_);  // Eigen conjugates the left operand
}

Observable::Observable(Eigen::MatrixXcd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols())
    throw std::invalid_argument("Observable: matrix must be square and nonempty");
  if (max_abs(matrix_ - matrix_.adjoint()) > kHermitianTolerance)
    throw std::invalid_argument("Observable: matrix is not Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix_);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Observable: eigensolver failed");
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();

  const Eigen::Index n = eigenvalues_.size();
  for (Eigen::Index k = 0; k < n;) {
    Eigen::Index end = k + 1;
    while (end < n && eigenvalues_(end) - eigenvalues_(k) < kDegeneracyTolerance) ++end;
    const auto block = eigenvectors_.middleCols(k, end - k);
    spectrum_.push_back({eigenvalues_.segment(k, end - k).mean(), block * block.adjoint()});
    k = end;
  }
}

Observable Observable::dichotomic(Eigen::MatrixXcd matrix) {
  Observable obs(std::move(matrix));
  if (!obs.is_dichotomic()) throw std::invalid_argument("Observable: spectrum is not {+1, -1}");
  return obs;
}

bool Observable::is_dichotomic() const {
  const auto n = matrix_.rows();
  return max_abs(matrix_ * matrix_ - Eigen::MatrixXcd::Identity(n, n)) <= kDichotomicTolerance;
}

EvolutionSpec::EvolutionSpec(Observable hamiltonian, double duration, double hbar_sem)
    : hamiltonian_(std::move(hamiltonian)), duration_(duration), hbar_sem_(hbar_sem) {
  if (!(hbar_sem_ > 0.0) || !std::isfinite(hbar_sem_))
    throw std::invalid_argument("EvolutionSpec: hbar_sem must be > 0");
  if (!std::isfinite(duration_)) throw std::invalid_argument("EvolutionSpec: duration not finite");
}

std::vector<OutcomeProbability> born_probabilities(const SemanticState& state, const Observable& obs) {
  require_dims(state.dim(), obs.dim(), "born_probabilities");
  const Eigen::VectorXcd& psi = state.amplitudes();
  std::vector<OutcomeProbability> out;
  out.reserve(obs.spectrum().size());
  for (const Eigenspace& space : obs.spectrum()) {
    const double p = psi.dot(space.projector * psi).real();
    out.push_back({space.eigenvalue, std::clamp(p, 0.0, 1.0)});
  }
  return out;
}

Measurement measure(const SemanticState& state, const Observable& obs, Rng& rng) {
  const auto probs = born_probabilities(state, obs);
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t pick = probs.size() - 1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i].probability;
    if (u < cumulative) {
      pick = i;
      break;
    }
  }
  // Rounding can leave u just above the final cumulative sum; fall back to the
  // last outcome that actually carries probability.
  while (probs[pick].probability <= 0.0 && pick > 0) --pick;

  Eigen::VectorXcd projected = obs.spectrum()[pick].projector * state.amplitudes();
  const double n = projected.norm();
  if (!(n > 0.0)) throw std::logic_error("measure: sampled a zero-probability outcome");
  projected /= n;
  return {probs[pick].eigenvalue, SemanticState(std::move(projected))};
}

double commutator_norm(const Observable& a, const Observable& b) {
  require_dims(a.dim(), b.dim(), "commutator_norm");
  return max_abs(a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

SemanticState evolve(const SemanticState& state, const EvolutionSpec& evo) {
  const Observable& h = evo.hamiltonian();
  require_dims(state.dim(), h.dim(), "evolve");
  const double scale = evo.duration() / evo.hbar_sem();
  const Eigen::MatrixXcd& v = h.eigenvectors();
  Eigen::VectorXcd coeffs = v.adjoint() * state.amplitudes();
  for (Eigen::Index k = 0; k < coeffs.size(); ++k)
    coeffs(k) *= std::polar(1.0, -h.eigenvalues()(k) * scale);
  Eigen::VectorXcd out = v * coeffs;
  // Unitary up to rounding; renormalize so the output honours the state invariant exactly.
  return SemanticState::normalized(std::move(out));
}

Observable tensor(const Observable& a, const Observable& b) {
  const auto na = static_cast<Eigen::Index>(a.dim());
  const auto nb = static_cast<Eigen::Index>(b.dim());
  Eigen::MatrixXcd k(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j) k.block(i * nb, j * nb, nb, nb) = a.matrix()(i, j) * b.matrix();
  return Observable(std::move(k));
}

double joint_correlation(const SemanticState& state, const Observable& a, const Observable& b) {
  if (state.dim() != 4 || a.dim() != 2 || b.dim() != 2)
    throw std::invalid_argument("joint_correlation: expects a 4-dim state and two 2-dim observables");
  const Eigen::VectorXcd& psi = state.amplitudes();
  return psi.dot(tensor(a, b).matrix() * psi).real();
}

std::array<double, 4> joint_distribution(const SemanticState& state, const Observable& a,
                                         const Observable& b) {
  if (state.dim() != 4 || a.dim() != 2 || b.dim() != 2)
    throw std::invalid_argument("joint_distribution: expects a 4-dim state and two 2-dim observables");
  if (!a.is_dichotomic() || !b.is_dichotomic())
    throw std::invalid_argument("joint_distribution: observables must be dichotomic");
  // Projectors onto ±1: (I ± M)/2.
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const std::array<Eigen::MatrixXcd, 2> pa{(id + a.matrix()) / 2.0, (id - a.matrix()) / 2.0};
  const std::array<Eigen::MatrixXcd, 2> pb{(id + b.matrix()) / 2.0, (id - b.matrix()) / 2.0};
  const Eigen::VectorXcd& psi = state.amplitudes();
  std::array<double, 4> out{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Eigen::MatrixXcd p(4, 4);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) p.block(r * 2, c * 2, 2, 2) = pa[i](r, c) * pb[j];
      out[static_cast<std::size_t>(i * 2 + j)] = std::clamp(psi.dot(p * psi).real(), 0.0, 1.0);
    }
  }
  return out;
}

Observable planar_spin(double theta) {
  Eigen::MatrixXcd m(2, 2);
  m << std::cos(theta), std::sin(theta), std::sin(theta), -std::cos(theta);
  return Observable(std::move(m));
}

SemanticState singlet() {
  Eigen::VectorXcd v(4);
  v << 0.0, 1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2, 0.0;
  return SemanticState::normalized(std::move(v));
}

}  // namespace sbell
