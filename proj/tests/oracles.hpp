#pragma once
// Independent reference computations for the tests. Nothing here calls into
// the library's numerics: matrices are spelled out by hand and sums are
// plain loops, so agreement is evidence rather than tautology.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace oracle {

// Frozen values, derived by hand / brute force outside the library.
inline constexpr std::array<int, 16> kStrategyS{2, 2, -2, -2, -2, 2, -2, 2, 2, -2, 2, -2, -2, -2, 2, 2};
inline constexpr double kHalfSqrt2 = 0.70710678118654752440;
// Singlet at (0, π/2, π/4, 3π/4): E = −cos(Δθ) per context AB, AB′, A′B, A′B′.
inline constexpr std::array<double, 4> kTsirelsonE{-kHalfSqrt2, kHalfSqrt2, -kHalfSqrt2, -kHalfSqrt2};
inline constexpr double kTsirelsonS = -2.0 * 1.41421356237309504880;

inline double chsh(const std::array<double, 4>& e) { return e[0] - e[1] + e[2] + e[3]; }

// Brute-force CHSH S for an ordered list of trials. Each trial is
// [context][alice word1, alice word2, bob word1, bob word2].
using RawTrial = std::array<std::array<int, 4>, 4>;

inline std::array<double, 4> expectations(const std::vector<RawTrial>& trials) {
  std::array<double, 4> e{};
  for (int c = 0; c < 4; ++c) {
    long long acc = 0;
    for (const RawTrial& t : trials) acc += t[c][0] * t[c][2] + t[c][1] * t[c][3];
    e[c] = static_cast<double>(acc) / (2.0 * static_cast<double>(trials.size()));
  }
  return e;
}

// ⟨ψ|σ(θa) ⊗ σ(θb)|ψ⟩ for ψ = (|01⟩ − |10⟩)/√2, with σ(θ) = [[cos, sin], [sin, −cos]].
inline double singlet_correlation(double ta, double tb) {
  const double a[2][2] = {{std::cos(ta), std::sin(ta)}, {std::sin(ta), -std::cos(ta)}};
  const double b[2][2] = {{std::cos(tb), std::sin(tb)}, {std::sin(tb), -std::cos(tb)}};
  const double psi[4] = {0.0, kHalfSqrt2, -kHalfSqrt2, 0.0};
  double acc = 0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) acc += psi[r] * a[r / 2][c / 2] * b[r % 2][c % 2] * psi[c];
  return acc;
}

inline double k_bits(int n, double per_concept, double per_relationship) {
  double k = 0;
  for (int i = 0; i < n; ++i) {
    k += per_concept;
    for (int j = i + 1; j < n; ++j) k += per_relationship;
  }
  return k;
}

}  // namespace oracle
