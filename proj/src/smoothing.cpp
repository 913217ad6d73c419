#include "qpkam/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "check_grid.hpp"
#include "qpkam/errors.hpp"

namespace qpkam {

namespace {

double bump(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

int check_grid_for(const StripFunction& f, int grid) { return grid > 0 ? grid : default_grid(f.K()) + 1; }

// sup over the tensor check grid of |sum_q w_q f_q|.
double sup_combination(const std::vector<const StripFunction*>& fs, const std::vector<double>& w, int N,
                       const SampledCpFunction* h = nullptr, double hw = 0.0) {
  const int n = fs[0]->n();
  std::vector<double> P, Y;
  detail::tensor_points(n, N, fs[0]->domain().s, fs[0]->J(), P, Y);
  const std::size_t npts = Y.size(), nf = fs.size();
  std::vector<double> out(npts * nf);
  eval_many(fs, npts, P.data(), Y.data(), out.data());
  double m = 0.0;
  for (std::size_t i = 0; i < npts; ++i) {
    double v = 0.0;
    for (std::size_t q = 0; q < nf; ++q) v += w[q] * out[i * nf + q];
    if (h) v += hw * h->shell(&P[i * n], Y[i]);
    m = std::max(m, std::abs(v));
  }
  return m;
}

double sup_sampler(const SampledCpFunction& h, int N, int J) {
  const int n = h.freq.n();
  const auto pts = detail::staggered_points(n, N);
  double m = 0.0;
  for (std::size_t p = 0; p < pts.size() / n; ++p)
    for (double y : detail::check_ys(h.s, J)) m = std::max(m, std::abs(h.shell(&pts[p * n], y)));
  return m;
}

StripFunction shifted_x(const StripFunction& f, double d) {
  StripFunction g = f;
  const Lattice& lat = f.lattice();
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    const cd ph = std::exp(cd(0.0, f.freq().dot(lat.k(idx)) * d));
    for (int j = 0; j <= f.J(); ++j) g.at(idx, j) *= ph;
  }
  return g;
}

}  // namespace

double SampledCpFunction::operator()(double x, double y) const {
  std::vector<double> th(freq.n());
  for (int d = 0; d < freq.n(); ++d) th[d] = std::fmod(freq.omega[d] * x, 2.0 * std::numbers::pi);
  return shell(th.data(), y);
}

SampledCpFunction as_sampled(const StripFunction& f, double p, double norm_bound) {
  SampledCpFunction h;
  h.freq = f.freq();
  h.p = p;
  h.norm_bound = norm_bound;
  h.s = f.domain().s;
  h.shell = [f](const double* th, double y) { return f.eval_shell(th, y); };
  return h;
}

double lowpass(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  const double u = 2.0 * (t - 0.5);
  const double a = bump(1.0 - u), b = bump(u);
  return a / (a + b);
}

StripFunction smooth(const SampledCpFunction& h, double delta, int K, int J, const SmoothOptions& opt) {
  if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("smooth: need 0 < delta <= 1");
  if (!h.shell) throw std::invalid_argument("smooth: empty sampler");
  const int N = opt.grid > 0 ? opt.grid : default_grid(K);
  // Oversample in y so that the retained degrees are not aliased.
  const int Js = J > 0 ? 2 * J + 1 : 0;
  auto fn = [&](const double* phi, double y) {
    const double v = h.shell(phi, y);
    if (!std::isfinite(v)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "non-finite sample %g at theta_0 = %.6g, y = %.6g", v, phi[0], y);
      throw SamplerNotFinite(buf);
    }
    return v;
  };
  StripFunction g = interpolate(h.freq, StripDomain(delta, h.s), K, Js, N, fn);
  const Lattice& lat = g.lattice();
  const double scale = delta / opt.bandwidth;
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    const double sk = lowpass(scale * lat.max_norm(idx));
    for (int j = 0; j <= Js; ++j) g.at(idx, j) *= sk * lowpass(scale * j);
  }
  return g.resized(K, J);
}

double QBound::value() const { return std::min(smoothness_branch, tau_branch); }

QBound q_bound(double p, double tau) {
  // (p - 2 tau - 1)/(p + 1) -> 1 as p -> infinity.
  const double frac = std::isinf(p) && p > 0.0 ? 1.0 : (p - 2.0 * tau - 1.0) / (p + 1.0);
  return QBound{frac * std::numbers::ln2, 1e-2 * std::pow(4.0, -tau)};
}

SmoothingConstants FamilyRatios::max() const {
  SmoothingConstants c;
  c.c0 = 1.0;
  for (double v : c0) c.c0 = std::max(c.c0, v);
  for (double v : c1) c.c1 = std::max(c.c1, v);
  for (double v : c2) c.c2 = std::max(c.c2, v);
  return c;
}

FamilyRatios family_ratios(const SampledCpFunction& h, const std::vector<double>& deltas,
                           const std::vector<StripFunction>& members, int check_grid) {
  if (deltas.size() != members.size()) throw std::invalid_argument("family_ratios: size mismatch");
  FamilyRatios r;
  if (members.empty()) return r;
  const int N = check_grid_for(members[0], check_grid);
  const double hinf = sup_sampler(h, N, members[0].J());
  const double hp = h.norm_bound;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const double d = deltas[i];
    const double up = members[i].upper_norm(d);
    r.c0.push_back(hinf > 0.0 ? up / hinf : (up > 0.0 ? HUGE_VAL : 0.0));
    const double err = sup_combination({&members[i]}, {-1.0}, N, &h, 1.0);
    r.c1.push_back(hp > 0.0 ? err / (hp * std::pow(d, h.p)) : 0.0);
  }
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      // delta_j < delta_i: norm on the smaller set E_{delta_j}, power of delta_i.
      const StripFunction diff = members[j] - members[i];
      const double up = diff.upper_norm(deltas[j]);
      r.c2.push_back(hp > 0.0 ? up / (hp * std::pow(deltas[i], h.p)) : 0.0);
    }
  return r;
}

FamilyCheck check_family(const SampledCpFunction& h, const std::vector<double>& deltas,
                         const std::vector<StripFunction>& members, const SmoothingConstants& c, int check_grid) {
  FamilyCheck out;
  out.ratios = family_ratios(h, deltas, members, check_grid);
  for (double v : out.ratios.c0) out.pass = out.pass && v <= c.c0;
  for (double v : out.ratios.c1) out.pass = out.pass && v <= c.c1;
  for (double v : out.ratios.c2) out.pass = out.pass && v <= c.c2;
  return out;
}

SmoothingFamily build_family(const SampledCpFunction& h, double tau, double q, int depth, int K, int J,
                             const SmoothOptions& opt) {
  if (depth < 0) throw std::invalid_argument("build_family: depth >= 0");
  const QBound qb = q_bound(h.p, tau);
  if (!(q > 0.0) || q > qb.value()) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "q = %.6g exceeds min{%.6g, %.6g}", q, qb.smoothness_branch, qb.tau_branch);
    throw QTooLarge(buf);
  }
  SmoothingFamily fam;
  for (int k = 0; k <= depth; ++k) {
    const double d = std::pow(0.5 * (1.0 + q), k);
    fam.deltas.push_back(d);
    fam.members.push_back(smooth(h, d, K, J, opt));
  }
  fam.constants = family_ratios(h, fam.deltas, fam.members).max();
  return fam;
}

double real_sup(const StripFunction& f, int grid) {
  return sup_combination({&f}, {1.0}, check_grid_for(f, grid));
}

double estimate_cp_norm(const SampledCpFunction& h, double p, int K, int J, int grid) {
  if (!(p >= 0.0)) throw std::invalid_argument("estimate_cp_norm: p >= 0");
  const int N = grid > 0 ? grid : default_grid(K);
  const StripFunction g = interpolate(h.freq, StripDomain(1.0, h.s), K, J, N, h.shell);
  const int l = static_cast<int>(std::floor(p));
  const double frac = p - l;
  double total = 0.0;
  StripFunction row = g;
  for (int i = 0; i <= l; ++i) {
    StripFunction D = row;
    for (int j = 0; i + j <= l; ++j) {
      total += real_sup(D, N + 1);
      if (i + j == l && frac > 0.0) {
        double hx = 0.0, hy = 0.0;
        for (int m = 0; m <= 12; ++m) {
          const double d = std::ldexp(1.0, -m);
          const StripFunction diff = shifted_x(D, d) - D;
          hx = std::max(hx, real_sup(diff, N + 1) / std::pow(d, frac));
        }
        if (J > 0) {
          const StripFunction Dy = D.dy();
          // Lipschitz in y bounds the Hoelder quotient on |y| <= s.
          hy = real_sup(Dy, N + 1) * std::pow(2.0 * h.s, 1.0 - frac);
        }
        total += std::max(hx, hy);
      }
      D = D.dy();
    }
    row = row.dx();
  }
  return total;
}

double shell_cp_norm(const ShellFunction& F, int p, int grid) {
  const int n = F.n();
  const Lattice& lat = F.lattice();
  const int N = grid > 0 ? grid : default_grid(F.K()) + 1;
  double total = 0.0;
  std::vector<int> beta(n, 0);
  // Enumerate multi-indices with |beta| <= p.
  while (true) {
    int ord = 0;
    for (int b : beta) ord += b;
    if (ord <= p) {
      ShellFunction D = F;
      for (std::size_t idx = 0; idx < lat.size(); ++idx) {
        cd m = 1.0;
        for (int d = 0; d < n; ++d)
          for (int e = 0; e < beta[d]; ++e) m *= cd(0.0, lat.k(idx)[d]);
        D[idx] *= m;
      }
      const auto v = sample(D, N);
      double mx = 0.0;
      for (double x : v) mx = std::max(mx, std::abs(x));
      total += mx;
    }
    int d = 0;
    while (d < n && ++beta[d] > p) beta[d++] = 0;
    if (d == n) break;
  }
  return total;
}

}  // namespace qpkam
