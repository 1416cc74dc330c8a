#include "spde/spectrum.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spde {

void SpectrumSpec::validate() {
  if (eigenvalues.empty()) throw std::invalid_argument("spectrum: no eigenvalues");
  if (kernel_dim < 1 || kernel_dim >= n_modes())
    throw std::invalid_argument("spectrum: kernel_dim out of range");
  for (int k = 0; k < n_modes(); ++k) {
    if (!std::isfinite(eigenvalues[k]))
      throw std::invalid_argument("spectrum: non-finite eigenvalue");
    if (k > 0 && eigenvalues[k] < eigenvalues[k - 1])
      throw std::invalid_argument("spectrum: eigenvalues not ascending");
  }
  for (int k = 0; k < kernel_dim; ++k)
    if (eigenvalues[k] != 0.0)
      throw std::invalid_argument("spectrum: kernel eigenvalues must be exactly 0");
  const double gap = eigenvalues[kernel_dim];
  if (gap <= 0.0) throw std::invalid_argument("spectrum: no spectral gap");
  if (spectral_gap_rho <= 0.0) spectral_gap_rho = gap;
  if (spectral_gap_rho > gap)
    throw std::invalid_argument("spectrum: rho above lambda_{n+1}");
  if (growth_exponent <= 0.0)
    throw std::invalid_argument("spectrum: growth exponent must be positive");
  double c = std::numeric_limits<double>::infinity();
  for (int k = growth_threshold; k <= n_modes(); ++k)
    c = std::min(c, eigenvalues[k - 1] / std::pow(double(k), growth_exponent));
  if (!(c > 0.0))
    throw std::invalid_argument("spectrum: eigenvalue growth constant not positive");
  growth_constant = c;
}

std::shared_ptr<const SpectrumSpec> make_gl_spectrum(int n_modes) {
  if (n_modes < 2) throw std::invalid_argument("gl spectrum: need at least 2 modes");
  SpectrumSpec s;
  s.eigenvalues.resize(n_modes);
  for (int k = 1; k <= n_modes; ++k) s.eigenvalues[k - 1] = double(k) * k - 1.0;
  s.kernel_dim = 1;
  s.growth_exponent = 2.0;
  s.validate();
  return std::make_shared<const SpectrumSpec>(std::move(s));
}

static void require_valid(const SpectralField& f) {
  if (!f.spectrum) throw std::invalid_argument("field: no spectrum attached");
  if (static_cast<int>(f.coeffs.size()) != f.spectrum->n_modes())
    throw std::invalid_argument("field: coefficient count does not match spectrum");
}

SpectralField make_field(std::shared_ptr<const SpectrumSpec> spec,
                         std::vector<double> coeffs, double alpha_index) {
  SpectralField f{std::move(spec), std::move(coeffs), alpha_index};
  require_valid(f);
  return f;
}

SpectralField basis_field(std::shared_ptr<const SpectrumSpec> spec, int k,
                          double alpha_index) {
  if (k < 1 || k > spec->n_modes()) throw std::out_of_range("basis_field: k out of range");
  std::vector<double> c(spec->n_modes(), 0.0);
  c[k - 1] = 1.0;
  return make_field(std::move(spec), std::move(c), alpha_index);
}

double alpha_norm_raw(const SpectrumSpec& spec, const double* coeffs, int n,
                      double alpha) {
  double s = 0.0;
  if (alpha == 0.0) {
    for (int k = 0; k < n; ++k) s += coeffs[k] * coeffs[k];
  } else {
    for (int k = 0; k < n; ++k)
      s += coeffs[k] * coeffs[k] * std::pow(spec.eigenvalues[k] + 1.0, alpha);
  }
  double r = std::sqrt(s);
  if (!std::isfinite(r)) throw std::invalid_argument("alpha_norm: non-finite field");
  return r;
}

double alpha_norm(const SpectralField& f, double alpha) {
  require_valid(f);
  return alpha_norm_raw(*f.spectrum, f.coeffs.data(),
                        static_cast<int>(f.coeffs.size()), alpha);
}

double alpha_norm(const SpectralField& f) { return alpha_norm(f, f.alpha_index); }

double inner_product(const SpectralField& f, const SpectralField& g) {
  require_valid(f);
  require_valid(g);
  if (f.coeffs.size() != g.coeffs.size())
    throw std::invalid_argument("inner_product: size mismatch");
  double s = 0.0;
  for (size_t k = 0; k < f.coeffs.size(); ++k) s += f.coeffs[k] * g.coeffs[k];
  if (!std::isfinite(s)) throw std::invalid_argument("inner_product: non-finite field");
  return s;
}

SpectralField project_kernel(const SpectralField& f) {
  require_valid(f);
  SpectralField out = f;
  for (int k = f.spectrum->kernel_dim; k < f.spectrum->n_modes(); ++k)
    out.coeffs[k] = 0.0;
  return out;
}

SpectralField project_stable(const SpectralField& f) {
  require_valid(f);
  SpectralField out = f;
  for (int k = 0; k < f.spectrum->kernel_dim; ++k) out.coeffs[k] = 0.0;
  return out;
}

void semigroup_factors(const SpectrumSpec& spec, double t, std::vector<double>& out) {
  if (t < 0.0) throw std::domain_error("semigroup: t must be nonnegative");
  out.resize(spec.eigenvalues.size());
  for (size_t k = 0; k < out.size(); ++k) out[k] = std::exp(-spec.eigenvalues[k] * t);
}

SpectralField apply_semigroup(const SpectralField& f, double t) {
  require_valid(f);
  if (t < 0.0) throw std::domain_error("semigroup: t must be nonnegative");
  SpectralField out = f;
  for (int k = 0; k < f.spectrum->n_modes(); ++k)
    out.coeffs[k] *= std::exp(-f.spectrum->eigenvalues[k] * t);
  return out;
}

SemigroupBoundReport check_semigroup_bound(const SpectrumSpec& spec, double alpha,
                                           double beta,
                                           const std::vector<double>& t_samples,
                                           const std::vector<SpectralField>& field_samples,
                                           double rho_override) {
  if (beta > alpha) throw std::domain_error("semigroup bound: need beta <= alpha");
  if (t_samples.empty() || field_samples.empty())
    throw std::invalid_argument("semigroup bound: empty sample set");
  const double rho = rho_override > 0.0 ? rho_override : spec.spectral_gap_rho;
  if (rho <= 0.0 || rho > spec.eigenvalues[spec.kernel_dim])
    throw std::domain_error("semigroup bound: rho outside the spectral gap");

  SemigroupBoundReport rep;
  rep.rho = rho;
  rep.alpha = alpha;
  rep.beta = beta;
  rep.n_t = static_cast<int>(t_samples.size());
  rep.n_fields = static_cast<int>(field_samples.size());
  const double p = (alpha - beta) / spec.growth_exponent;
  for (const SpectralField& f : field_samples) {
    SpectralField fs = project_stable(f);
    const double denom = alpha_norm(fs, beta);
    if (denom == 0.0) continue;
    for (double t : t_samples) {
      if (!(t > 0.0)) throw std::domain_error("semigroup bound: t samples must be positive");
      const double num = alpha_norm(apply_semigroup(fs, t), alpha);
      const double ratio = num * std::pow(t, p) * std::exp(rho * t) / denom;
      rep.m_hat = std::max(rep.m_hat, ratio);
    }
  }
  return rep;
}

}  // namespace spde
