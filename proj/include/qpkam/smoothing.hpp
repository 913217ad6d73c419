#pragma once

// Analytic approximation of finitely differentiable quasi-periodic data.
// Smoothing multiplies shell Fourier coefficients (and Chebyshev coefficients
// in y) by a C-infinity low-pass symbol, which is convolution with a kernel
// whose transform is flat near the origin.

#include <functional>
#include <vector>

#include "qpkam/qpfourier.hpp"

namespace qpkam {

// h(x, y) = F(omega x, y) for a shell sampler F(theta, y), |y| <= s.
struct SampledCpFunction {
  Frequency freq;
  std::function<double(const double* theta, double y)> shell;
  double p = 0.0;           // declared smoothness, possibly fractional
  double norm_bound = 0.0;  // declared ||h||_p
  double s = 1.0;           // real half-width in y

  double operator()(double x, double y) const;
};

// Wrap a strip function as sampled data.
SampledCpFunction as_sampled(const StripFunction& f, double p, double norm_bound);

// 1 on [0, 1/2], 0 on [1, inf), C-infinity and nonincreasing in between.
double lowpass(double t);

struct SmoothOptions {
  int grid = 0;            // shell collocation grid, default_grid(K) when 0
  double bandwidth = 1.0;  // passband |k| <= bandwidth / (2 delta)
};

// h_delta on E_delta as a truncated series with cutoff K and Chebyshev degree
// J. Throws SamplerNotFinite.
StripFunction smooth(const SampledCpFunction& h, double delta, int K, int J, const SmoothOptions& opt = {});

// Largest admissible q for (p, tau); both branches are returned.
struct QBound {
  double smoothness_branch = 0.0;  // (p - 2 tau - 1)/(p + 1) log 2
  double tau_branch = 0.0;         // 1e-2 4^{-tau}
  double value() const;
};
QBound q_bound(double p, double tau);

struct SmoothingConstants {
  double c0 = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

struct SmoothingFamily {
  std::vector<double> deltas;
  std::vector<StripFunction> members;
  SmoothingConstants constants;
};

// Measured left sides of the three inequalities, divided by their
// right-hand factors so that each entry is a lower bound for the constant.
struct FamilyRatios {
  std::vector<double> c0;  // |h_d|_{E_d} / |h|_inf
  std::vector<double> c1;  // |h - h_d|_R / (||h||_p d^p)
  std::vector<double> c2;  // |h_d - h_d'|_{E_d} / (||h||_p d'^p), d < d'
  SmoothingConstants max() const;
};

// deltas must be decreasing and members[i] = smooth(h, deltas[i]).
FamilyRatios family_ratios(const SampledCpFunction& h, const std::vector<double>& deltas,
                           const std::vector<StripFunction>& members, int check_grid = 0);

struct FamilyCheck {
  bool pass = true;
  FamilyRatios ratios;
};
FamilyCheck check_family(const SampledCpFunction& h, const std::vector<double>& deltas,
                         const std::vector<StripFunction>& members, const SmoothingConstants& c, int check_grid = 0);

// delta_k = ((1 + q)/2)^k for k = 0..depth, constants fitted on the members.
// Throws QTooLarge when q exceeds q_bound(h.p, tau).
SmoothingFamily build_family(const SampledCpFunction& h, double tau, double q, int depth, int K, int J,
                             const SmoothOptions& opt = {});

// ||h||_p = sum over i + j <= floor(p) of sup |d_x^i d_y^j h| plus, for
// fractional p, the Hoelder seminorm of the top derivatives estimated on
// dyadic shifts. Derivatives are spectral on an interpolant (K, J, grid).
double estimate_cp_norm(const SampledCpFunction& h, double p, int K, int J, int grid = 0);

// Same norm for the shell function: partial derivatives in theta, y-free.
double shell_cp_norm(const ShellFunction& F, int p, int grid = 0);

// sup |h| over the real sampling grid of a strip interpolant.
double real_sup(const StripFunction& f, int grid = 0);

}  // namespace qpkam
