#pragma once

// Difference equations over the quasi-periodic shell:
//   u(x + alpha, y) - u(x, y) = f(x, y) - [f](y)
// and the coupled pair
//   u(x + alpha, y) - u(x, y) = eps v(x, y) + f(x, y)
//   v(x + alpha, y) - v(x, y) = g(x, y) - [g](y).
// Divisors do not depend on y, so both act slice by slice in Chebyshev degree.

#include <optional>
#include <vector>

#include "qpkam/diophantine.hpp"
#include "qpkam/qpfourier.hpp"

namespace qpkam {

// eps(rho) = 6^{-(n+1)/2} gamma / Gamma(tau + 1) rho^tau.
double epsilon_of(double rho, double gamma, double tau, int n);

struct CohomologyOptions {
  double residual_tol = 1e-9;  // scaled by 1 + sup |input| on the check grid
  int grid = 0;                // check grid per dimension, default_grid(K) + 1
};

struct EquationResidual {
  double sup = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct NormCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct CohomologySolution {
  StripFunction u;
  std::optional<StripFunction> v;
  double epsilon = 0.0;
  double rho = 0.0;
  std::vector<double> subtracted_mean;   // [f] removed by the single solve
  std::vector<EquationResidual> residuals;  // one per equation
  std::vector<NormCheck> bounds;            // |u| bound, then |v| bound when coupled
  bool ok() const;
};

// u_k = f_k / (e^{i<k,omega> alpha} - 1), u_0 = 0. No certification.
StripFunction difference_solve(const StripFunction& f, double alpha);

// sup over a staggered real grid of |u(x + alpha) - u(x) - c v(x) - rhs(x)|
// where rhs = f - [f] (v may be null). Also returns sup |f| on the grid.
struct ResidualSample {
  double sup = 0.0;
  double input_sup = 0.0;
};
ResidualSample difference_residual(const StripFunction& u, const StripFunction& f, double alpha,
                                   const StripFunction* v = nullptr, double c = 0.0, bool subtract_mean = true,
                                   int grid = 0);

// Throws UncertifiedDivisor when f.K() > alpha.K and std::invalid_argument
// unless 0 < rho < r.
CohomologySolution solve_single(const StripFunction& f, const RotationNumber& alpha, double rho,
                                const CohomologyOptions& opt = {});

// eps = epsilon_of(rho, ...), f and g on the same domain. Requires 2 rho < r.
CohomologySolution solve_coupled(const StripFunction& f, const StripFunction& g, const RotationNumber& alpha,
                                 double rho, const CohomologyOptions& opt = {});
// Explicit coupling constant; the bounds are reported against this eps.
CohomologySolution solve_coupled(const StripFunction& f, const StripFunction& g, const RotationNumber& alpha,
                                 double rho, double eps, const CohomologyOptions& opt = {});

// g_m(y) = sum_{1 <= |k| <= m} |f_k(y) / (e^{i<k,omega>alpha} - 1)| e^{r |k|_1}
// against 6^{(n+1)/2} m^tau / gamma |f|_{r,s}, at sample points y.
struct PartialSumReport {
  std::vector<int> m;
  std::vector<double> lhs;  // max over sampled y
  std::vector<double> rhs;
  bool pass = true;
};
PartialSumReport partial_sum_check(const StripFunction& f, const RotationNumber& alpha);

}  // namespace qpkam
