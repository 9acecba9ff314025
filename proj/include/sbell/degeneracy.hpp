#pragma once

// Kolmogorov-complexity model of semantic degeneracy: the bits needed to pin
// down an intended meaning, and the probability that an interpreter recovers
// every one of them.

#include <optional>
#include <string>
#include <vector>

namespace sbell {

struct DegeneracyModel {
  int n_concepts = 1;
  double bits_per_concept = 5.0;
  double bits_per_relationship = 1.0;
  /// Exactly one of these selects the form of p_perfect.
  std::optional<double> error_per_bit;
  std::optional<double> mean_degeneracy_per_bit;
  /// Apply the 1/N! prefactor.
  bool include_factorial = false;

  /// Throws std::invalid_argument outside the valid parameter region.
  void validate() const;
};

/// K = N·c_concept + C(N,2)·c_relationship
double k_bits(const DegeneracyModel& model);

/// prefactor·(1 − p_e)^K, or prefactor·(1/d̄_b)^K; prefactor = 1/N! or 1.
/// Throws std::invalid_argument unless exactly one of p_e, d̄_b is set.
double p_perfect(const DegeneracyModel& model);

/// log10 of p_perfect, finite even where p_perfect underflows.
double log10_p_perfect(const DegeneracyModel& model);

struct SweepRow {
  int n_concepts;
  double k_bits;
  std::vector<double> p;  // one per error value
};

struct SweepTable {
  std::vector<double> error_values;
  std::vector<SweepRow> rows;
};

/// One row per N in [n_min, n_max]; the template's error_per_bit /
/// mean_degeneracy_per_bit fields are ignored and replaced by each value in
/// `error_values` (interpreted as p_e).
SweepTable sweep_curves(const DegeneracyModel& model_template, int n_min, int n_max,
                        const std::vector<double>& error_values);

/// Tab-separated table: header "N<TAB>K<TAB>p_e=<v>..." then one row per N.
std::string sweep_text(const SweepTable& table);

}  // namespace sbell
