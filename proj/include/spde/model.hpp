#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "spde/spectrum.hpp"

namespace spde {

// Sine-polynomial products on [0, pi] without aliasing: fields with modes
// k <= N are sampled on a padded interior grid (default 4N points) where the
// discrete sine transform is exact for every frequency a triple product can
// produce, so analyzed coefficients carry no wrap-around error.
class SineGrid {
 public:
  SineGrid(int n_modes, int grid_points = 0);

  int modes() const { return n_; }
  int points() const { return m_; }

  // e-basis coefficients (length N) -> values at the interior nodes x_j
  void synth(const double* coeffs, double* values) const;
  // values at the nodes -> e-basis coefficients of the first N modes
  void analyze(const double* values, double* coeffs) const;

  const std::vector<double>& nodes() const { return x_; }

 private:
  int n_;      // retained modes
  int m_;      // grid size M; interior nodes are j pi / M, j = 1..M-1
  std::vector<double> x_;
  std::vector<double> table_;  // sin(k x_j), row k-major
};

// Exact L2 projection of a product of two sine polynomials onto the first N
// modes. sin(a)sin(b) is a cosine polynomial whose sine series is infinite, so
// a sampled grid aliases its tail; this route instead collects the cosine
// coefficients of u*w (O(N^2)) and projects each cos(m x) analytically.
class PairProduct {
 public:
  explicit PairProduct(int n_modes);

  int modes() const { return n_; }

  // out[j] = <u w, e_{j+1}> from the e-basis coefficients of u and w;
  // work must hold 2N+1 doubles. out may not alias u or w.
  void project(const double* u, const double* w, double* out, double* work) const;
  void project(const double* u, const double* w, double* out) const;

 private:
  int n_;
  std::vector<double> pmat_;  // <cos(m x), e_j>, j-major rows of length 2N+1
};

struct ModelSpec {
  std::shared_ptr<const SpectrumSpec> spectrum;
  double nu = 1.0;
  std::vector<double> noise_spectrum;  // alpha_k, covariance eigenvalues of Q
  double epsilon = 0.1;
  double kappa = 0.02;
  double alpha_index = 1.0;
  double domain_length = 0.0;          // pi, fixed by the Dirichlet instance
  int quadrature_points = 0;           // 0: use 4N
  double noise_tail_estimate = 0.0;    // truncated part of trace(Q), reported

  std::shared_ptr<const SineGrid> grid;
  std::shared_ptr<const PairProduct> pair;

  void validate();  // throws; also builds the grid and the tail estimate
};

// GL instance: spectrum lambda_k = k^2 - 1, noise alpha_k proportional to
// k^{-decay} normalized to unit trace over the truncation.
ModelSpec make_gl_model(int n_modes, double nu, double epsilon, double kappa,
                        double noise_decay = 4.0);

// Trilinear form F(u,v,w) = -(u v w), coefficients computed on the dealiased
// grid; F(u) below means F(u,u,u).
SpectralField eval_cubic(const SpectralField& u, const SpectralField& v,
                         const SpectralField& w);

// F restricted to the kernel: for a = gamma_e e_1 the result is
// -(3/4) gamma_sin^3 sin expressed in e-basis coefficients.
SpectralField eval_cubic_kernel(const SpectralField& a);

// G(u) applied to the k-th covariance direction: sqrt(alpha_k) u f_k with
// f_k = e_k / k; exact projection of the product onto the first N modes.
SpectralField apply_diffusion(const ModelSpec& model, const SpectralField& u, int k);

// sigma_k = (4/pi)(cos(k pi) - 1)/(k^2 (k^2 - 4)), sigma_2 = 0.
double sigma_k(int k);

struct ReducedCoefficients {
  std::vector<double> sigma;      // closed form sigma_k
  std::vector<double> couplings;  // s_k: e_1-coefficient of e_1 f_k (grid route)
  double Sigma = 0.0;             // sum alpha_k sigma_k^2 (display convention)
  double Sigma_oracle = 0.0;      // sum alpha_k s_k^2, drives the amplitude SDE
  double cubic_coeff = -0.75;     // sin-amplitude variable
  double cubic_coeff_e = 0.0;     // same nonlinearity in e-basis coefficients
  double drift_coeff = 0.0;       // nu
};

// Computes sigma_k both ways (closed form and brute-force projection of
// e_1 * Q^{1/2} f_k on the grid) and the effective noise strength in both
// normalization conventions; Sigma_oracle is the one consumed downstream.
ReducedCoefficients noise_strength(const ModelSpec& model);

struct CubicFormReport {
  int n_samples = 0;
  int violations_dissipative = 0;  // <F_c(u), u> <= 0
  int violations_cross = 0;        // <F_c(u,u,w), w> <= 0
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;  // feasible constants for the mixed bound
  bool constants_feasible = false;
  double worst_margin = 0.0;  // max over samples of lhs - rhs at (c0,c1,c2)
};

// Samples kernel triples and checks the sign conditions of the cubic form;
// for the mixed inequality
//   <F_c(u,v,w) - F_c(v), u> <= -c0|u|^4 + c1|w|^4 + c2|w|^2|v|^2
// it searches constants valid on every sample and reports them. Constants are
// sample-dependent: the inequality degenerates as |w| -> 0 with u v^3 > 0.
CubicFormReport check_assumption3(const ModelSpec& model, int n_samples,
                                  uint64_t seed);

// Empirical Hilbert-Schmidt ratio: max over sampled u of
// sum_k |G(u) f_k|_alpha^2 / (|u|_alpha^2 trace Q).
double diffusion_hs_ratio(const ModelSpec& model, int n_samples, uint64_t seed);

}  // namespace spde
