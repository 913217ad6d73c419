#include "qpkam/kam.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "check_grid.hpp"
#include "fft.hpp"
#include "qpkam/errors.hpp"
#include "taylor.hpp"

namespace qpkam {

namespace {

using detail::TaylorTable;

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::vector<double> scaled_nodes(double s, int J) {
  auto t = cheb::nodes(J);
  for (double& x : t) x *= s;
  return t;
}

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> zero_shift(int n) { return std::vector<double>(n, 0.0); }

// Monomial coefficients of sum_j c_j T_j(t).
std::vector<double> cheb_to_monomial(const std::vector<double>& c) {
  const int J = static_cast<int>(c.size()) - 1;
  std::vector<double> out(c.size(), 0.0);
  std::vector<double> Tm(c.size(), 0.0), T(c.size(), 0.0);  // T_{j-1}, T_j
  if (J < 0) return out;
  T[0] = 1.0;
  for (int j = 0; j <= J; ++j) {
    for (int i = 0; i <= J; ++i) out[i] += c[j] * T[i];
    // T_{j+1} = 2 t T_j - T_{j-1}, with T_1 = t.
    std::vector<double> next(c.size(), 0.0);
    for (int i = 0; i < J; ++i) next[i + 1] += (j == 0 ? 1.0 : 2.0) * T[i];
    if (j > 0)
      for (int i = 0; i <= J; ++i) next[i] -= Tm[i];
    Tm = T;
    T = next;
  }
  return out;
}

// Re-sample a strip function onto a smaller y-range.
StripFunction restrict_to(const StripFunction& f, StripDomain dom, int N) {
  const auto ys = scaled_nodes(dom.s, f.J());
  const auto z = zero_shift(f.n());
  return from_samples(f.freq(), dom, f.K(), f.J(), N, sample_shifted(f, N, z.data(), ys));
}

}  // namespace

// ---------------------------------------------------------------------------
// Schedule

KamSchedule build_schedule(double p, int n, double tau, double gamma, std::optional<double> q, int k_max) {
  if (!(p > 2.0 * tau + 1.0)) throw SmoothnessTooLow(fmt("p = %g must exceed 2 tau + 1 = %g", p, 2.0 * tau + 1.0));
  if (k_max < 0) throw std::invalid_argument("build_schedule: k_max >= 0");
  if (n < 1) throw std::invalid_argument("build_schedule: n >= 1");
  KamSchedule s;
  s.p = p;
  s.n = n;
  s.tau = tau;
  s.gamma = gamma;
  s.q = q ? *q : q_bound(p, tau).value();
  if (!(s.q > 0.0 && s.q < 1.0)) throw std::invalid_argument("build_schedule: need 0 < q < 1");
  s.theta = std::pow(2.0, -tau);
  s.s0 = s.theta / 300.0;
  s.eps0 = std::pow(6.0, -(tau + 0.5 * (n + 1))) * gamma / std::tgamma(tau + 1.0);
  s.M0 = s.q * s.eps0 * s.s0 / 3.0;
  for (int k = 0; k <= k_max; ++k) {
    const double h = std::ldexp(1.0, -k);
    s.r.push_back(h);
    s.s.push_back(h * s.s0);
    s.r_prime.push_back(4.0 / 3.0 * (s.r.back() - s.s.back()));
    s.s_prime.push_back(4.0 / 3.0 * s.s.back());
    s.eps.push_back(std::pow(2.0, -k * tau) * s.eps0);
    s.M.push_back(std::pow(2.0, -k * (tau + 1.0)) * s.M0);
    s.b.push_back(std::pow(2.0, -k * tau) * std::pow(1.0 - s.q, k));
    s.B.push_back(std::pow(1.0 + s.q, k));
    s.delta.push_back(std::pow(0.5 * (1.0 + s.q), k));
  }
  // For infinite p both sides are divided by p.
  if (std::isinf(p)) {
    s.condition_lhs = std::log1p(s.q);
    s.condition_rhs = std::numbers::ln2;
  } else {
    s.condition_lhs = p * std::log1p(s.q) - std::log1p(-s.q);
    s.condition_rhs = (p - 1.0 - 2.0 * tau) * std::numbers::ln2;
  }
  s.condition_ok = s.condition_lhs <= s.condition_rhs;

  std::string msg;
  if (!(s.q <= 1e-2 * s.theta * s.theta)) msg += "q > (theta/10)^2; ";
  if (!(gamma > 0.0 && gamma < 0.5)) msg += "gamma outside (0, 1/2); ";
  if (!(tau >= n)) msg += "tau < n; ";
  for (int k = 0; k <= k_max; ++k)
    if (!(s.r[k] <= s.r_prime[k] && s.s[k] <= s.s_prime[k])) {
      msg += "D_k not inside D'_k; ";
      break;
    }
  s.relations_ok = msg.empty();
  s.relations_message = msg;
  return s;
}

nlohmann::json KamSchedule::to_json() const {
  nlohmann::json j;
  j["p"] = std::isinf(p) ? nlohmann::json("inf") : nlohmann::json(p);
  j["n"] = n;
  j["tau"] = tau;
  j["gamma"] = gamma;
  j["q"] = q;
  j["theta"] = theta;
  j["s0"] = s0;
  j["eps0"] = eps0;
  j["M0"] = M0;
  j["condition"] = {{"lhs", condition_lhs}, {"rhs", condition_rhs}, {"ok", condition_ok}};
  j["relations"] = {{"ok", relations_ok}, {"message", relations_message}};
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t k = 0; k < r.size(); ++k)
    levels.push_back({{"k", k}, {"r", r[k]}, {"s", s[k]}, {"r_prime", r_prime[k]}, {"s_prime", s_prime[k]},
                      {"eps", eps[k]}, {"M", M[k]}, {"b", b[k]}, {"B", B[k]}, {"delta", delta[k]}});
  j["levels"] = levels;
  return j;
}

double smallness_rhs0(const KamSchedule& s, const SmoothingConstants& c) {
  const double g = s.gamma / std::tgamma(s.tau + 1.0);
  return std::pow(6.0, -(s.n + 1)) / 3.0 * s.q / (300.0 * c.c0) * std::pow(1.0 / 72.0, s.tau) * g * g;
}

double smallness_rhsP(const KamSchedule& s, const SmoothingConstants& c) {
  const double den = 3.0 * c.c1 + c.c2;
  if (!(den > 0.0)) return INFINITY;
  const double g = s.gamma / std::tgamma(s.tau + 1.0);
  return std::pow(6.0, -(s.n + 1)) / 3.0 * s.q * (1.0 - s.q) / (3600.0 * den) * std::pow(1.0 / 288.0, s.tau) * g * g;
}

SmallnessReport smallness_check(const SampledCpFunction& f, const SampledCpFunction& g, const KamSchedule& s,
                                const SmoothingConstants& c, int K, int J) {
  SmallnessReport rep;
  rep.p_used = std::isinf(s.p) ? std::ceil(2.0 * s.tau + 2.0) : s.p;
  const int N = default_grid(K) + 1;
  auto sup_of = [&](const SampledCpFunction& h) {
    const auto pts = detail::staggered_points(h.freq.n(), N);
    const auto ys = detail::check_ys(h.s, J);
    double m = 0.0;
    for (std::size_t p = 0; p < pts.size() / h.freq.n(); ++p)
      for (double y : ys) m = std::max(m, std::abs(h.shell(&pts[p * h.freq.n()], y)));
    return m;
  };
  auto norm_of = [&](const SampledCpFunction& h) {
    return h.norm_bound > 0.0 ? h.norm_bound : estimate_cp_norm(h, rep.p_used, K, J);
  };
  rep.lhs0 = sup_of(f) + sup_of(g);
  rep.lhsP = norm_of(f) + norm_of(g);
  rep.rhs0 = smallness_rhs0(s, c);
  rep.rhsP = smallness_rhsP(s, c);
  rep.pass = rep.lhs0 <= rep.rhs0 && rep.lhsP <= rep.rhsP;
  return rep;
}

// ---------------------------------------------------------------------------
// Maps and small lemmas

double NormalizedMap::bound() const {
  return std::max(f.upper_norm(domain().r), g.upper_norm(domain().r));
}

NormalizedMap rotation_map(const Frequency& freq, StripDomain dom, int K, int J, double alpha, double eps) {
  return NormalizedMap{StripFunction(freq, dom, K, J), StripFunction(freq, dom, K, J), alpha, eps};
}

ConjugacyMap identity_conjugacy(const Frequency& freq, StripDomain dom, int K, int J) {
  if (J < 1) throw std::invalid_argument("identity_conjugacy: J >= 1");
  ConjugacyMap Z{StripFunction(freq, dom, K, J), StripFunction(freq, dom, K, J), 1.0, 1.0};
  Z.Y.at(Z.Y.lattice().zero(), 1) = dom.s;  // eta = s T_1(eta / s)
  return Z;
}

std::vector<double> truncate_series(const std::vector<double>& coeffs, int m, double q) {
  if (m < 1 || !(q > 0.0 && q < 1.0)) throw std::invalid_argument("truncate_series: m >= 1, 0 < q < 1");
  std::vector<double> out(m, 0.0);
  for (int k = 0; k < m && k < static_cast<int>(coeffs.size()); ++k)
    out[k] = (1.0 - std::pow(q, 2.0 * (m - k))) * coeffs[k];
  return out;
}

TruncationCheck truncation_check(const std::vector<double>& coeffs, int m, double q, double r, int samples) {
  const auto t = truncate_series(coeffs, m, q);
  auto poly = [](const std::vector<double>& c, cd z) {
    cd s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * z + *it;
    return s;
  };
  TruncationCheck out;
  double top = 0.0;
  for (int i = 0; i < samples; ++i) {
    const cd e = std::polar(1.0, 2.0 * std::numbers::pi * i / samples);
    out.lhs = std::max(out.lhs, std::abs(poly(coeffs, q * r * e) - poly(t, q * r * e)));
    top = std::max(top, std::abs(poly(coeffs, r * e)));
  }
  out.rhs = std::pow(q, m) * top;
  out.pass = out.lhs <= out.rhs * (1.0 + 1e-12) + 1e-300;
  return out;
}

LipschitzCheck lipschitz_check(const StripFunction& w, double d, int pairs, std::uint64_t seed) {
  const double r = w.domain().r, s = w.domain().s;
  if (!(d > 0.0 && d < r && d < s)) throw std::invalid_argument("lipschitz_check: need 0 < d < min(r, s)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto point = [&](double& xr, double& xi, cd& y) {
    xr = 40.0 * U(rng);
    xi = (r - d) * (2.0 * U(rng) - 1.0);
    y = std::polar((s - d) * std::sqrt(U(rng)), 2.0 * std::numbers::pi * U(rng));
  };
  LipschitzCheck out;
  out.bound = w.upper_norm(r) / d;
  for (int i = 0; i < pairs; ++i) {
    double xr, xi, xr2, xi2;
    cd y, y2;
    point(xr, xi, y);
    point(xr2, xi2, y2);
    // Pull the second point toward the first on a log scale.
    const double t = std::pow(10.0, -6.0 * U(rng));
    xr2 = xr + t * (xr2 - xr);
    xi2 = xi + t * (xi2 - xi);
    y2 = y + t * (y2 - y);
    const cd x(xr, xi), x2(xr2, xi2);
    const double dist = std::max(std::abs(x - x2), std::abs(y - y2));
    if (!(dist > 0.0)) continue;
    out.measured = std::max(out.measured, std::abs(w.eval(x, y) - w.eval(x2, y2)) / dist);
  }
  out.pass = out.measured <= out.bound * (1.0 + 1e-6);
  return out;
}

// ---------------------------------------------------------------------------
// Inductive step

StepResult inductive_step(const NormalizedMap& H, const RotationNumber& alpha, double theta, double q, double M,
                          const StepOptions& opt) {
  const StripDomain D = H.domain();
  const double r = D.r, s = D.s, rho = r / 6.0, eps = H.eps, epsp = theta * eps;
  const double Mh = H.bound();
  if (Mh > M) throw PreconditionDefect(fmt("|H - Omega|_D = %.3e exceeds M = %.3e", Mh, M));
  const Frequency& w = H.f.freq();
  const int n = w.n(), K = H.f.K(), J = H.f.J();
  const int N = opt.grid > 0 ? opt.grid : default_grid(K);
  const std::size_t G = detail::grid_size(n, N), Y = J + 1;

  StepResult res;
  // h o Theta has the same coefficients on |eta| < s / theta.
  StripFunction ft = H.f, gt = H.g;
  ft.set_domain(StripDomain(r, s / theta));
  gt.set_domain(StripDomain(r, s / theta));
  res.linear = solve_coupled(ft, gt, alpha, rho, eps);
  res.u = res.linear.u;
  res.v = *res.linear.v;

  const StripDomain Dp(r / 2.0, s / 2.0);
  const auto etas = scaled_nodes(Dp.s, J);
  std::vector<double> teta(etas);
  for (double& e : teta) e *= theta;
  const auto z0 = zero_shift(n);
  const auto U = sample_shifted(res.u, N, z0.data(), etas);
  const auto V = sample_shifted(res.v, N, z0.data(), etas);

  // F3 = h(x + u, theta eta + v) - h(x, theta eta).
  const double ucap = 1.01 * sup_abs(U) + 1e-300;
  const TaylorTable Tf(H.f, N, 0.0, teta, ucap), Tg(H.g, N, 0.0, teta, ucap);
  std::vector<double> F31(G * Y), F32(G * Y);
  for (std::size_t p = 0; p < G; ++p)
    for (std::size_t m = 0; m < Y; ++m) {
      const std::size_t i = p * Y + m;
      F31[i] = Tf.increment(p, m, U[i], V[i]);
      F32[i] = Tg.increment(p, m, U[i], V[i]);
    }

  const auto gmean = mean_value(H.g);
  std::vector<double> gbar(Y);
  for (std::size_t m = 0; m < Y; ++m) gbar[m] = eval_mean(gmean, teta[m], s);

  double Mreal = std::max(sup_abs(sample(H.f, N)), sup_abs(sample(H.g, N)));
  const double tol = opt.picard_tol * theta * theta * Mreal;
  std::vector<double> z1(G * Y, 0.0), z2(G * Y, 0.0), n1(G * Y), n2(G * Y);
  double acap = epsp * Dp.s + 2.0 * (sup_abs(F31) + 2.0 * std::max(sup_abs(U), sup_abs(V))) + 1e-300;
  for (;;) {
    const TaylorTable Tu(res.u, N, alpha.alpha, etas, acap), Tv(res.v, N, alpha.alpha, etas, acap);
    std::fill(z1.begin(), z1.end(), 0.0);
    std::fill(z2.begin(), z2.end(), 0.0);
    res.increments.clear();
    double amax = 0.0;
    bool done = false;
    for (int it = 0; it < opt.max_iter; ++it) {
      double inc = 0.0;
      amax = 0.0;
      for (std::size_t p = 0; p < G; ++p)
        for (std::size_t m = 0; m < Y; ++m) {
          const std::size_t i = p * Y + m;
          const double a = epsp * etas[m] + z1[i];
          const double b = (z2[i] + gbar[m]) / theta;
          amax = std::max(amax, std::abs(a));
          n1[i] = -Tu.increment(p, m, a, b) + F31[i];
          n2[i] = -Tv.increment(p, m, a, b) + F32[i];
          inc = std::max({inc, std::abs(n1[i] - z1[i]), std::abs(n2[i] - z2[i])});
        }
      z1.swap(n1);
      z2.swap(n2);
      if (!std::isfinite(inc)) throw ContractionDiverged("non-finite Picard iterate");
      res.increments.push_back(inc);
      if (inc <= tol) {
        done = true;
        break;
      }
      if (res.increments.size() > 3 && inc > 1e3 * res.increments[1])
        throw ContractionDiverged(fmt("Picard increments grew to %.3e", inc));
    }
    if (!done)
      throw ContractionDiverged(fmt("no fixed point after max_iter sweeps, last increment %.3e (tolerance %.3e)",
                                    res.increments.back(), tol));
    if (amax <= acap) break;
    acap = 2.0 * amax;
  }
  res.iterations = static_cast<int>(res.increments.size());
  for (std::size_t i = 1; i < res.increments.size(); ++i)
    if (res.increments[i - 1] > 1e3 * tol) res.contraction = std::max(res.contraction, res.increments[i] / res.increments[i - 1]);

  // phi = (z1, theta^{-1} (z2 + [g](theta eta))).
  std::vector<double> p1(G * Y), p2(G * Y);
  for (std::size_t p = 0; p < G; ++p)
    for (std::size_t m = 0; m < Y; ++m) {
      const std::size_t i = p * Y + m;
      p1[i] = z1[i];
      p2[i] = (z2[i] + gbar[m]) / theta;
    }
  res.phi.f = from_samples(w, Dp, K, J, N, p1);
  res.phi.g = from_samples(w, Dp, K, J, N, p2);
  res.phi.alpha = H.alpha;
  res.phi.eps = epsp;

  // theta^{-1} [g](theta eta) = sum g_j eta^j, truncated at m = 3 with q = theta / 2.
  const auto mono = cheb_to_monomial(gmean);
  std::vector<double> gj(3, 0.0);
  for (int j = 0; j < 3 && j < static_cast<int>(mono.size()); ++j) gj[j] = std::pow(theta, j - 1) * mono[j] / std::pow(s, j);
  const auto a = truncate_series(gj, 3, theta / 2.0);
  res.Q = TruncationPolynomial{a[0], a[1], a[2]};

  res.w_sup = std::max(res.u.upper_norm(res.u.domain().r), res.v.upper_norm(res.u.domain().r));
  res.w_bound = 2.0 / 3.0 * q * Dp.s;
  StripFunction pq = res.phi.g;
  {
    // Subtract Q in Chebyshev form on |eta| < s/2.
    const std::size_t zi = pq.lattice().zero();
    const double h = Dp.s;
    pq.at(zi, 0) -= res.Q.a0 + 0.5 * res.Q.a2 * h * h;
    if (J >= 1) pq.at(zi, 1) -= res.Q.a1 * h;
    if (J >= 2) pq.at(zi, 2) -= 0.5 * res.Q.a2 * h * h;
  }
  res.phi_minus_Q = std::max(res.phi.f.upper_norm(Dp.r), pq.upper_norm(Dp.r));
  res.phi_bound = 5.0 / 48.0 * theta * M;

  // Bi-Lipschitz ratios of W = Theta + w on real pairs of D'_+.
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> Ud(0.0, 1.0);
  const double sp = 4.0 / 3.0 * Dp.s;
  res.lip_lower = INFINITY;
  for (int i = 0; i < 200; ++i) {
    const double x = 40.0 * Ud(rng), y = sp * (2.0 * Ud(rng) - 1.0);
    const double t = std::pow(10.0, -4.0 * Ud(rng));
    const double x2 = x + t * (2.0 * Ud(rng) - 1.0), y2 = std::clamp(y + t * sp * (2.0 * Ud(rng) - 1.0), -sp, sp);
    const double W1x = x + res.u.eval(x, y).real(), W1y = theta * y + res.v.eval(x, y).real();
    const double W2x = x2 + res.u.eval(x2, y2).real(), W2y = theta * y2 + res.v.eval(x2, y2).real();
    const double dz = std::max(std::abs(x - x2), std::abs(y - y2));
    if (!(dz > 0.0)) continue;
    const double dW = std::max(std::abs(W1x - W2x), std::abs(W1y - W2y));
    res.lip_lower = std::min(res.lip_lower, dW / dz);
    res.lip_upper = std::max(res.lip_upper, dW / dz);
  }
  res.lip_lower_bound = theta * (1.0 - q);
  res.lip_upper_bound = 1.0 + q;
  return res;
}

ConjugacyMap compose_conjugacy(const ConjugacyMap& Z, const StepResult& w, double theta, StripDomain dom, int K, int J,
                               int grid) {
  const Frequency& fr = Z.X.freq();
  const int n = fr.n();
  const int N = grid > 0 ? grid : default_grid(std::max(K, Z.X.K()));
  const std::size_t G = detail::grid_size(n, N), Y = J + 1;
  const auto etas = scaled_nodes(dom.s, J);
  std::vector<double> teta(etas);
  for (double& e : teta) e *= theta;
  const auto z0 = zero_shift(n);
  const auto U = sample_shifted(w.u, N, z0.data(), etas);
  const auto V = sample_shifted(w.v, N, z0.data(), etas);
  const double cap = 1.01 * sup_abs(U) + 1e-300;
  const TaylorTable TX(Z.X, N, 0.0, teta, cap), TY(Z.Y, N, 0.0, teta, cap);
  std::vector<double> X(G * Y), Yv(G * Y);
  for (std::size_t p = 0; p < G; ++p)
    for (std::size_t m = 0; m < Y; ++m) {
      const std::size_t i = p * Y + m;
      X[i] = U[i] + TX.eval(p, m, U[i], V[i]);
      Yv[i] = TY.eval(p, m, U[i], V[i]);
    }
  ConjugacyMap out{from_samples(fr, dom, K, J, N, X), from_samples(fr, dom, K, J, N, Yv), Z.b, Z.B};
  return out;
}

// ---------------------------------------------------------------------------
// Solve back

NormalizedMap solve_back(const ConjugacyMap& Z, const NormalizedMap& A, const NormalizedMap& Phi,
                         SolveBackReport* report, int grid) {
  const Frequency& fr = Phi.f.freq();
  const int n = fr.n(), K = Phi.f.K(), J = Phi.f.J();
  const int N = grid > 0 ? grid : default_grid(std::max({K, Z.X.K(), A.f.K()}));
  const std::size_t G = detail::grid_size(n, N), Y = J + 1;
  const StripDomain D = Phi.domain();
  const double epsp = Phi.eps, alpha = Phi.alpha;
  const auto etas = scaled_nodes(D.s, J);
  const auto z0 = zero_shift(n);

  const auto Xz = sample_shifted(Z.X, N, z0.data(), etas);
  const auto Yz = sample_shifted(Z.Y, N, z0.data(), etas);
  const auto P1 = sample_shifted(Phi.f, N, z0.data(), etas);
  const auto P2 = sample_shifted(Phi.g, N, z0.data(), etas);

  // A at Z(zeta): expand about (x, 0) with exact y-Taylor to Y(zeta).
  const TaylorTable TfA(A.f, N, 0.0, {0.0}, 1.01 * sup_abs(Xz) + 1e-300);
  const TaylorTable TgA(A.g, N, 0.0, {0.0}, 1.01 * sup_abs(Xz) + 1e-300);
  std::vector<double> R1(G * Y), R2(G * Y);
  for (std::size_t p = 0; p < G; ++p)
    for (std::size_t m = 0; m < Y; ++m) {
      const std::size_t i = p * Y + m;
      R1[i] = Xz[i] + A.eps * Yz[i] + TfA.eval(p, 0, Xz[i], Yz[i]);
      R2[i] = Yz[i] + TgA.eval(p, 0, Xz[i], Yz[i]);
    }

  std::vector<double> av(G * Y), bv(G * Y);
  SolveBackReport rep;
  double acap = 2.0 * (epsp * D.s + sup_abs(P1)) + 1e-300;
  for (;;) {
    const TaylorTable TX(Z.X, N, alpha, etas, acap), TY(Z.Y, N, alpha, etas, acap);
    double amax = 0.0;
    rep = SolveBackReport{};
    for (std::size_t p = 0; p < G; ++p)
      for (std::size_t m = 0; m < Y; ++m) {
        const std::size_t i = p * Y + m;
        double a = epsp * etas[m] + P1[i], b = P2[i];
        auto residual = [&](double a_, double b_, double& e1, double& e2, double& t1, double& t2) {
          const double x = TX.eval(p, m, a_, b_), y = TY.eval(p, m, a_, b_);
          e1 = a_ + x - R1[i];
          e2 = y - R2[i];
          t1 = 1e-15 * (std::abs(a_) + std::abs(x) + std::abs(R1[i])) + 1e-300;
          t2 = 1e-15 * (std::abs(y) + std::abs(R2[i])) + 1e-300;
        };
        double e1, e2, t1, t2;
        residual(a, b, e1, e2, t1, t2);
        double err = std::max(std::abs(e1) / t1, std::abs(e2) / t2);
        int it = 0;
        for (; it < 40 && err > 1.0; ++it) {
          const double j11 = 1.0 + TX.eval(p, m, a, b, 1, 0), j12 = TX.eval(p, m, a, b, 0, 1);
          const double j21 = TY.eval(p, m, a, b, 1, 0), j22 = TY.eval(p, m, a, b, 0, 1);
          const double det = j11 * j22 - j12 * j21;
          if (!(std::abs(det) > 0.0)) break;
          const double da = (j22 * e1 - j12 * e2) / det, db = (j11 * e2 - j21 * e1) / det;
          double lam = 1.0, na = a, nb = b, ne = err;
          for (int h = 0; h < 30; ++h, lam *= 0.5) {
            na = a - lam * da;
            nb = b - lam * db;
            residual(na, nb, e1, e2, t1, t2);
            ne = std::max(std::abs(e1) / t1, std::abs(e2) / t2);
            if (ne < err) break;
          }
          if (!(ne < err)) break;  // stagnation at rounding level
          a = na;
          b = nb;
          err = ne;
        }
        if (!(err <= 1e3)) {
          std::vector<double> phi(n);
          grid_point(n, N, p, phi.data());
          throw RootFindFailed(fmt("no root at shell angle theta_0 = %.6g, eta = %.6g", phi[0], etas[m]));
        }
        rep.max_newton = std::max(rep.max_newton, it);
        rep.residual = std::max(rep.residual, std::max(std::abs(e1), std::abs(e2)));
        av[i] = a - epsp * etas[m];
        bv[i] = b;
        rep.diff_sup = std::max({rep.diff_sup, std::abs(av[i] - P1[i]), std::abs(bv[i] - P2[i])});
        amax = std::max(amax, std::abs(a));
      }
    if (amax <= acap) break;
    acap = 2.0 * amax;
  }
  if (report) *report = rep;
  NormalizedMap H{from_samples(fr, D, K, J, N, av), from_samples(fr, D, K, J, N, bv), alpha, epsp};
  return H;
}

// ---------------------------------------------------------------------------
// Intersection bound

IntersectionBoundReport intersection_bound(const NormalizedMap& Psi, const TruncationPolynomial& Q, double proof_N,
                                           double xi_span) {
  const int J = Psi.g.J(), K = Psi.g.K();
  const double s = Psi.domain().s;
  const int N = default_grid(K);
  const auto etas = scaled_nodes(s, J);
  const auto z0 = zero_shift(Psi.f.freq().n());
  const auto h1 = sample_shifted(Psi.f, N, z0.data(), etas);
  const auto h2 = sample_shifted(Psi.g, N, z0.data(), etas);
  IntersectionBoundReport rep;
  rep.proof_N = proof_N;
  for (std::size_t i = 0; i < h1.size(); ++i)
    rep.N = std::max({rep.N, std::abs(h1[i]), std::abs(h2[i] - Q(etas[i % etas.size()]))});

  const double span = xi_span > 0.0 ? xi_span : 2.0 * std::numbers::pi * 64.0;
  const int steps = 4096;
  for (double eta : etas) {
    const ShellFunction d = Psi.g.at_y(eta);
    auto at = [&](double x) { return eval(d, cd(x, 0.0)).value.real(); };
    double x0 = 0.0, d0 = at(0.0);
    bool found = d0 == 0.0;
    for (int i = 1; i <= steps && !found; ++i) {
      const double x1 = span * i / steps, d1 = at(x1);
      if (d1 == 0.0 || (d0 < 0.0) != (d1 < 0.0)) {
        double lo = x0, hi = x1, flo = d0;
        for (int b = 0; b < 60 && d1 != 0.0; ++b) {
          const double mid = 0.5 * (lo + hi), fm = at(mid);
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        x0 = d1 == 0.0 ? x1 : 0.5 * (lo + hi);
        found = true;
      } else {
        x0 = x1;
        d0 = d1;
      }
    }
    if (!found) throw NoIntersectionWitness(fmt("no radial sign change at eta = %.6g over xi in [0, %.4g]", eta, span));
    rep.witnesses.push_back(WitnessSample{eta, x0, Q(eta)});
  }
  rep.q_weight = Q.weight(s);
  rep.pass = rep.q_weight <= 3.0 * rep.N;
  return rep;
}

// ---------------------------------------------------------------------------
// Driver

NormalizedFamily normalize(const QpPlanarMap& m, const RotationNumber& alpha, const KamSchedule& s,
                           const KamOptions& opt) {
  NormalizedFamily fam;
  fam.eps0 = 600.0 * opt.radial_width;
  const double eps0 = fam.eps0, al = alpha.alpha;
  if (!(al - opt.radial_width >= m.a && al + opt.radial_width <= m.b))
    throw std::invalid_argument("normalize: the radial window leaves the action strip");
  auto hf = [&m, al, eps0](const double* phi, double y) { return m.increments(phi, al + eps0 * y).f; };
  auto hg = [&m, al, eps0](const double* phi, double y) { return m.increments(phi, al + eps0 * y).g / eps0; };
  const SampledCpFunction F{m.freq, hf, m.p, 0.0, fam.strip_halfwidth};
  const SampledCpFunction Gs{m.freq, hg, m.p, 0.0, fam.strip_halfwidth};
  const int N = opt.step.grid > 0 ? opt.step.grid : default_grid(opt.K);
  const StripDomain E(1.0, fam.strip_halfwidth);
  fam.A = NormalizedMap{interpolate(m.freq, E, opt.K, opt.J, N, hf), interpolate(m.freq, E, opt.K, opt.J, N, hg), al,
                        eps0};
  SmoothOptions so;
  so.grid = opt.step.grid;
  so.bandwidth = opt.bandwidth;
  for (double d : s.delta)
    fam.members.push_back(NormalizedMap{smooth(F, d, opt.K, opt.J, so), smooth(Gs, d, opt.K, opt.J, so), al, eps0});
  fam.A0_sup = fam.members.front().bound();
  fam.A0_bound = std::max(real_sup(fam.A.f), real_sup(fam.A.g));
  return fam;
}

DefectSample invariance_defect(const QpPlanarMap& m, const ConjugacyMap& Z, double alpha, double eps0, int grid) {
  const Frequency& fr = Z.X.freq();
  const int n = fr.n();
  const int N = grid > 0 ? grid : default_grid(Z.X.K()) + 1;
  std::vector<double> half(n, std::numbers::pi / N), moved(half);
  for (int d = 0; d < n; ++d) moved[d] += fr.omega[d] * alpha;
  const auto X0 = sample_shifted(Z.X, N, half.data(), {0.0}), Y0 = sample_shifted(Z.Y, N, half.data(), {0.0});
  const auto X1 = sample_shifted(Z.X, N, moved.data(), {0.0}), Y1 = sample_shifted(Z.Y, N, moved.data(), {0.0});
  const auto pts = detail::staggered_points(n, N);
  DefectSample out;
  std::vector<double> phi(n);
  for (std::size_t p = 0; p < X0.size(); ++p) {
    for (int d = 0; d < n; ++d) phi[d] = pts[p * n + d] + fr.omega[d] * X0[p];
    const MapIncrement inc = m.increments(phi.data(), alpha + eps0 * Y0[p]);
    const double dx = X0[p] + eps0 * Y0[p] + inc.f - X1[p];
    const double dy = Y0[p] + inc.g / eps0 - Y1[p];
    out.theta_r = std::max({out.theta_r, std::abs(dx), eps0 * std::abs(dy)});
    out.xy = std::max({out.xy, std::abs(dx), std::abs(dy)});
  }
  return out;
}

nlohmann::json LevelRecord::to_json() const {
  return {{"k", k},
          {"defect", defect},
          {"defect_xy", defect_xy},
          {"M_k", M_proof},
          {"M_measured", M_measured},
          {"BM", BM},
          {"W_minus_Theta", w_sup},
          {"Q", {Q.a0, Q.a1, Q.a2}},
          {"iterations", iterations},
          {"contraction", contraction},
          {"solve_back_diff", solve_back_diff},
          {"intersection", {{"N", intersection_N}, {"weight", intersection_weight}, {"pass", intersection_pass}}},
          {"regime", proof_regime ? "proof" : "numerical"}};
}

KamResult run(const QpPlanarMap& m, const RotationNumber& alpha, const KamSchedule& s, const KamOptions& opt) {
  const NormalizedFamily fam = normalize(m, alpha, s, opt);
  KamResult res;
  res.eps0 = fam.eps0;
  {
    const double al = alpha.alpha, eps0 = fam.eps0;
    const SampledCpFunction F{m.freq, [&m, al, eps0](const double* phi, double y) { return m.increments(phi, al + eps0 * y).f; },
                              m.p, 0.0, fam.strip_halfwidth};
    const SampledCpFunction Gs{m.freq, [&m, al, eps0](const double* phi, double y) { return m.increments(phi, al + eps0 * y).g; },
                               m.p, 0.0, fam.strip_halfwidth};
    SmoothingConstants c;
    c.c0 = std::max(1.0, fam.A0_sup / std::max(fam.A0_bound, 1e-300));
    c.c1 = c.c2 = 1.0;
    res.smallness = smallness_check(F, Gs, s, c, std::min(opt.K, 12), std::min(opt.J, 4));
  }

  const int N = opt.step.grid > 0 ? opt.step.grid : default_grid(opt.K);
  NormalizedMap H{restrict_to(fam.members[0].f, StripDomain(s.r[0], s.s[0]), N),
                  restrict_to(fam.members[0].g, StripDomain(s.r[0], s.s[0]), N), alpha.alpha, fam.eps0};
  ConjugacyMap Z = identity_conjugacy(m.freq, StripDomain(s.r_prime[0], s.s_prime[0]), opt.K, opt.J);
  const double eps_scale = fam.eps0 / s.eps0;  // numerical over proof eps0

  for (int k = 0;; ++k) {
    LevelRecord rec;
    rec.k = k;
    const DefectSample d = invariance_defect(m, Z, alpha.alpha, fam.eps0);
    rec.defect = d.theta_r;
    rec.defect_xy = d.xy;
    rec.M_proof = s.M[k];
    rec.M_measured = H.bound();
    rec.BM = s.B[k] * rec.M_measured;
    rec.proof_regime = res.smallness.pass && rec.M_measured <= s.M[k] && eps_scale <= 1.0;
    if (d.theta_r <= opt.tol || k == s.k_max()) {
      res.trace.push_back(rec);
      if (d.theta_r > opt.tol)
        throw KamNotConverged(fmt("defect %.3e above tolerance %.3e after the last level", d.theta_r, opt.tol),
                              res.trace);
      break;
    }

    try {
      const StepResult st = inductive_step(H, alpha, s.theta, s.q, rec.M_measured, opt.step);
      rec.w_sup = st.w_sup;
      rec.Q = st.Q;
      rec.iterations = st.iterations;
      rec.contraction = st.contraction;

      ConjugacyMap Zn = compose_conjugacy(Z, st, s.theta, StripDomain(s.r_prime[k + 1], s.s_prime[k + 1]), opt.K,
                                          opt.J, opt.step.grid);
      Zn.b = s.b[k + 1];
      Zn.B = s.B[k + 1];
      SolveBackReport sb;
      NormalizedMap Hn = solve_back(Zn, fam.members[k + 1], st.phi, &sb, opt.step.grid);
      rec.solve_back_diff = sb.diff_sup;
      if (opt.intersection) {
        try {
          const NormalizedMap Psi = solve_back(Zn, fam.A, st.phi, nullptr, opt.step.grid);
          const auto ib = intersection_bound(Psi, st.Q, 0.25 * s.M[k + 1]);
          rec.intersection_N = ib.N;
          rec.intersection_weight = ib.q_weight;
          rec.intersection_pass = ib.pass;
        } catch (const NoIntersectionWitness&) {
          rec.intersection_pass = false;
        }
      }
      res.trace.push_back(rec);
      Z = std::move(Zn);
      H = std::move(Hn);
    } catch (const Error& e) {
      res.trace.push_back(rec);
      throw KamNotConverged(std::string("level ") + std::to_string(k) + ": " + e.what(), res.trace);
    } catch (const std::domain_error& e) {
      // Series expansions refused the displacement: the perturbation is too large.
      res.trace.push_back(rec);
      throw KamNotConverged(std::string("level ") + std::to_string(k) + ": " + e.what(), res.trace);
    }
  }

  res.Z = Z;
  res.curve.phi = Z.X.at_y(0.0);
  res.curve.psi = Z.Y.at_y(0.0);
  res.curve.psi *= fam.eps0;
  res.curve.psi[res.curve.psi.lattice().zero()] += alpha.alpha;
  res.curve.rotation = alpha;
  res.curve.defect = res.trace.back().defect;
  return res;
}

}  // namespace qpkam
