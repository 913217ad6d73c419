#include "qpkam/cohomology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "check_grid.hpp"
#include "qpkam/errors.hpp"

namespace qpkam {

namespace {

void require_certified(const StripFunction& f, const RotationNumber& alpha) {
  if (f.K() > alpha.K)
    throw UncertifiedDivisor("truncation radius " + std::to_string(f.K()) + " exceeds certified K = " +
                             std::to_string(alpha.K));
}

EquationResidual judge(const ResidualSample& r, double tol) {
  EquationResidual e;
  e.sup = r.sup;
  e.tol = tol * (1.0 + r.input_sup);
  e.pass = r.sup <= e.tol;
  return e;
}

StripFunction with_width(StripFunction f, double r) {
  f.set_domain(StripDomain(r, f.domain().s));
  return f;
}

}  // namespace

double epsilon_of(double rho, double gamma, double tau, int n) {
  if (!(rho > 0.0)) throw std::invalid_argument("epsilon_of: rho > 0");
  return std::pow(6.0, -0.5 * (n + 1)) * gamma / std::tgamma(tau + 1.0) * std::pow(rho, tau);
}

bool CohomologySolution::ok() const {
  for (const auto& r : residuals)
    if (!r.pass) return false;
  for (const auto& b : bounds)
    if (!b.pass) return false;
  return true;
}

StripFunction difference_solve(const StripFunction& f, double alpha) {
  StripFunction u(f.freq(), f.domain(), f.K(), f.J());
  const Lattice& lat = f.lattice();
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    if (idx == lat.zero()) continue;
    const cd d = std::exp(cd(0.0, f.freq().dot(lat.k(idx)) * alpha)) - 1.0;
    for (int j = 0; j <= f.J(); ++j) u.at(idx, j) = f.at(idx, j) / d;
  }
  return u;
}

ResidualSample difference_residual(const StripFunction& u, const StripFunction& f, double alpha,
                                   const StripFunction* v, double c, bool subtract_mean, int grid) {
  const int n = f.n();
  const int N = grid > 0 ? grid : default_grid(std::max(u.K(), f.K())) + 1;
  const auto ys = detail::check_ys(f.domain().s, std::max(u.J(), f.J()));
  std::vector<double> half(n, std::numbers::pi / N), moved(half);
  for (int d = 0; d < n; ++d) moved[d] += f.freq().omega[d] * alpha;

  // The k = 0 slice cancels exactly in u(x + alpha) - u(x); sampling it
  // would only add cancellation error proportional to [u].
  StripFunction w = u;
  for (int j = 0; j <= w.J(); ++j) w.at(w.lattice().zero(), j) = 0.0;
  const auto u0 = sample_shifted(w, N, half.data(), ys);
  const auto u1 = sample_shifted(w, N, moved.data(), ys);
  const auto fv = sample_shifted(f, N, half.data(), ys);
  const auto vv = v ? sample_shifted(*v, N, half.data(), ys) : std::vector<double>(fv.size(), 0.0);
  std::vector<double> mean(ys.size(), 0.0);
  if (subtract_mean) {
    const auto mv = mean_value(f);
    for (std::size_t m = 0; m < ys.size(); ++m) mean[m] = eval_mean(mv, ys[m], f.domain().s);
  }

  ResidualSample out;
  for (std::size_t i = 0; i < fv.size(); ++i) {
    const double rhs = fv[i] - mean[i % ys.size()];
    out.sup = std::max(out.sup, std::abs(u1[i] - u0[i] - c * vv[i] - rhs));
    out.input_sup = std::max({out.input_sup, std::abs(fv[i]), std::abs(c * vv[i])});
  }
  return out;
}

CohomologySolution solve_single(const StripFunction& f, const RotationNumber& alpha, double rho,
                                const CohomologyOptions& opt) {
  require_certified(f, alpha);
  const double r = f.domain().r;
  if (!(rho > 0.0 && rho < r)) throw std::invalid_argument("solve_single: need 0 < rho < r");
  CohomologySolution sol;
  sol.rho = rho;
  sol.epsilon = epsilon_of(rho, alpha.gamma, alpha.tau, f.n());
  sol.subtracted_mean = mean_value(f);
  sol.u = with_width(difference_solve(f, alpha.alpha), r - rho);
  sol.residuals.push_back(judge(difference_residual(sol.u, f, alpha.alpha, nullptr, 0.0, true, opt.grid),
                                opt.residual_tol));
  NormCheck b;
  b.lhs = sol.u.upper_norm(r - rho);
  b.rhs = f.upper_norm(r) / sol.epsilon;
  b.pass = b.lhs <= b.rhs;
  sol.bounds.push_back(b);
  return sol;
}

CohomologySolution solve_coupled(const StripFunction& f, const StripFunction& g, const RotationNumber& alpha,
                                 double rho, const CohomologyOptions& opt) {
  return solve_coupled(f, g, alpha, rho, epsilon_of(rho, alpha.gamma, alpha.tau, f.n()), opt);
}

CohomologySolution solve_coupled(const StripFunction& f, const StripFunction& g, const RotationNumber& alpha,
                                 double rho, double eps, const CohomologyOptions& opt) {
  require_certified(f, alpha);
  require_certified(g, alpha);
  if (f.K() != g.K() || f.J() != g.J() || f.domain().r != g.domain().r || f.domain().s != g.domain().s)
    throw std::invalid_argument("solve_coupled: f and g must share the domain and truncation");
  if (!(eps > 0.0)) throw std::invalid_argument("solve_coupled: eps > 0");
  const double r = f.domain().r;
  if (!(rho > 0.0 && 2.0 * rho < r)) throw std::invalid_argument("solve_coupled: need 0 < 2 rho < r");

  CohomologySolution sol;
  sol.rho = rho;
  sol.epsilon = eps;
  const std::size_t z = f.lattice().zero();

  // [v] = -[f] / eps makes eps v + f mean-free.
  StripFunction v = difference_solve(g, alpha.alpha);
  for (int j = 0; j <= f.J(); ++j) v.at(z, j) = -f.at(z, j) / eps;
  StripFunction h = f;
  h += eps * difference_solve(g, alpha.alpha);
  sol.u = with_width(difference_solve(h, alpha.alpha), r - 2.0 * rho);
  sol.v = with_width(v, r - rho);

  sol.residuals.push_back(judge(
      difference_residual(sol.u, f, alpha.alpha, &*sol.v, eps, false, opt.grid), opt.residual_tol));
  sol.residuals.push_back(judge(
      difference_residual(*sol.v, g, alpha.alpha, nullptr, 0.0, true, opt.grid), opt.residual_tol));

  const double M = std::max(f.upper_norm(r), g.upper_norm(r));
  NormCheck bu, bv;
  bu.lhs = sol.u.upper_norm(r - 2.0 * rho);
  bu.rhs = 2.0 * M / eps;
  bu.pass = bu.lhs <= bu.rhs;
  bv.lhs = sol.v->upper_norm(r - rho);
  bv.rhs = 2.0 * M / eps;
  bv.pass = bv.lhs <= bv.rhs;
  sol.bounds = {bu, bv};
  return sol;
}

PartialSumReport partial_sum_check(const StripFunction& f, const RotationNumber& alpha) {
  require_certified(f, alpha);
  const Lattice& lat = f.lattice();
  const int n = f.n(), J = f.J();
  const double r = f.domain().r;
  const double fr = f.upper_norm(r);
  const auto ys = detail::check_ys(f.domain().s, J);
  std::vector<double> T(J + 1);
  // Per lattice point, |f_k(y) / d_k| e^{r|k|_1} at each sampled y.
  std::vector<std::vector<double>> term(ys.size(), std::vector<double>(lat.size(), 0.0));
  for (std::size_t iy = 0; iy < ys.size(); ++iy) {
    cheb::values(ys[iy] / f.domain().s, J, T.data());
    for (std::size_t idx = 0; idx < lat.size(); ++idx) {
      if (idx == lat.zero()) continue;
      cd fk = 0.0;
      for (int j = 0; j <= J; ++j) fk += f.at(idx, j) * T[j];
      const double d = std::abs(std::exp(cd(0.0, f.freq().dot(lat.k(idx)) * alpha.alpha)) - 1.0);
      term[iy][idx] = std::abs(fk) / d * std::exp(r * lat.l1_norm(idx));
    }
  }
  PartialSumReport rep;
  const double pre = std::pow(6.0, 0.5 * (n + 1)) / alpha.gamma * fr;
  for (int m = 1; m <= f.K(); ++m) {
    double lhs = 0.0;
    for (std::size_t iy = 0; iy < ys.size(); ++iy) {
      double g = 0.0;
      for (std::size_t idx = 0; idx < lat.size(); ++idx)
        if (lat.max_norm(idx) <= m) g += term[iy][idx];
      lhs = std::max(lhs, g);
    }
    rep.m.push_back(m);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(pre * std::pow(static_cast<double>(m), alpha.tau));
    rep.pass = rep.pass && lhs <= rep.rhs.back();
  }
  return rep;
}

}  // namespace qpkam
