#include "sbell/degeneracy.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sbell {
namespace {

// log of the per-bit success probability for the selected form.
double log_base(const DegeneracyModel& m) {
  if (m.error_per_bit) return std::log1p(-*m.error_per_bit);
  return -std::log(*m.mean_degeneracy_per_bit);
}

double log_prefactor(const DegeneracyModel& m) {
  return m.include_factorial ? -std::lgamma(static_cast<double>(m.n_concepts) + 1.0) : 0.0;
}

}  // namespace

void DegeneracyModel::validate() const {
  if (n_concepts < 1) throw std::invalid_argument("n_concepts must be >= 1");
  if (!(bits_per_concept > 0) || !(bits_per_relationship > 0))
    throw std::invalid_argument("bit costs must be positive");
  if (error_per_bit.has_value() == mean_degeneracy_per_bit.has_value())
    throw std::invalid_argument("set exactly one of error_per_bit and mean_degeneracy_per_bit");
  if (error_per_bit && !(*error_per_bit >= 0.0 && *error_per_bit < 1.0))
    throw std::invalid_argument("error_per_bit must be in [0, 1)");
  if (mean_degeneracy_per_bit && !(*mean_degeneracy_per_bit >= 1.0))
    throw std::invalid_argument("mean_degeneracy_per_bit must be >= 1");
}

double k_bits(const DegeneracyModel& model) {
  if (model.n_concepts < 1) throw std::invalid_argument("n_concepts must be >= 1");
  const double n = model.n_concepts;
  return n * model.bits_per_concept + n * (n - 1.0) / 2.0 * model.bits_per_relationship;
}

double log10_p_perfect(const DegeneracyModel& model) {
  model.validate();
  return (log_prefactor(model) + k_bits(model) * log_base(model)) / std::log(10.0);
}

double p_perfect(const DegeneracyModel& model) {
  model.validate();
  const double lp = log_prefactor(model) + k_bits(model) * log_base(model);
  return lp == 0.0 ? 1.0 : std::exp(lp);
}

SweepTable sweep_curves(const DegeneracyModel& model_template, int n_min, int n_max,
                        const std::vector<double>& error_values) {
  if (n_min < 1 || n_max < n_min) throw std::invalid_argument("sweep_curves: empty N range");
  SweepTable t;
  t.error_values = error_values;
  for (int n = n_min; n <= n_max; ++n) {
    DegeneracyModel m = model_template;
    m.n_concepts = n;
    m.mean_degeneracy_per_bit.reset();
    SweepRow row{n, k_bits(m), {}};
    for (double pe : error_values) {
      m.error_per_bit = pe;
      row.p.push_back(p_perfect(m));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string sweep_text(const SweepTable& table) {
  std::ostringstream out;
  out << "N\tK";
  for (double pe : table.error_values) out << "\tp_e=" << pe;
  out << '\n';
  char buf[32];
  for (const SweepRow& r : table.rows) {
    out << r.n_concepts << '\t' << r.k_bits;
    for (double p : r.p) {
      std::snprintf(buf, sizeof buf, "%.10e", p);
      out << '\t' << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace sbell
