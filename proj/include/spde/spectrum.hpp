#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace spde {

// Diagonal spectral data of the linear operator A: eigenvalues -lambda_k with
// 0 = lambda_1 <= lambda_2 <= ..., the first kernel_dim of them exactly zero.
struct SpectrumSpec {
  std::vector<double> eigenvalues;  // lambda_k, ascending, lambda_1 = 0
  int kernel_dim = 1;               // n
  double growth_exponent = 2.0;     // m: lambda_k >= C k^m eventually
  double spectral_gap_rho = 0.0;    // rho in (lambda_n, lambda_{n+1}]
  double growth_constant = 0.0;     // recorded C, computed at validation
  int growth_threshold = 2;

  int n_modes() const { return static_cast<int>(eigenvalues.size()); }
  void validate();  // throws std::invalid_argument, also fills growth_constant
};

// Ginzburg-Landau spectrum on [0, pi] with Dirichlet conditions:
// lambda_k = k^2 - 1, kernel = span{e_1}, gap rho = lambda_2 = 3.
std::shared_ptr<const SpectrumSpec> make_gl_spectrum(int n_modes);

// Coefficients gamma_k of f = sum gamma_k e_k; alpha_index labels the space
// the field is considered to live in (default norm index).
struct SpectralField {
  std::shared_ptr<const SpectrumSpec> spectrum;
  std::vector<double> coeffs;
  double alpha_index = 1.0;
};

SpectralField make_field(std::shared_ptr<const SpectrumSpec> spec,
                         std::vector<double> coeffs, double alpha_index = 1.0);
SpectralField basis_field(std::shared_ptr<const SpectrumSpec> spec, int k,
                          double alpha_index = 1.0);  // e_k, 1-based

// ( sum_k gamma_k^2 (lambda_k + 1)^alpha )^{1/2}
double alpha_norm(const SpectralField& f, double alpha);
double alpha_norm(const SpectralField& f);  // at f.alpha_index
double alpha_norm_raw(const SpectrumSpec& spec, const double* coeffs, int n,
                      double alpha);

double inner_product(const SpectralField& f, const SpectralField& g);  // alpha = 0

SpectralField project_kernel(const SpectralField& f);  // P_c: keep k <= n
SpectralField project_stable(const SpectralField& f);  // P_s: keep k > n

// e^{At}: coefficient k multiplied by exp(-lambda_k t); t >= 0.
SpectralField apply_semigroup(const SpectralField& f, double t);
void semigroup_factors(const SpectrumSpec& spec, double t, std::vector<double>& out);

// Empirical constant for the decay bound
//   |e^{At} P_s f|_alpha <= M t^{-(alpha-beta)/m} e^{-rho t} |P_s f|_beta:
// max over the sampled (t, f) grid of the left/right ratio.
struct SemigroupBoundReport {
  double m_hat = 0.0;
  double rho = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  int n_t = 0;
  int n_fields = 0;
};

SemigroupBoundReport check_semigroup_bound(const SpectrumSpec& spec, double alpha,
                                           double beta,
                                           const std::vector<double>& t_samples,
                                           const std::vector<SpectralField>& field_samples,
                                           double rho_override = -1.0);

}  // namespace spde
