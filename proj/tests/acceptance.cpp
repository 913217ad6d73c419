// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "generators.hpp"
#include "qpkam/cli.hpp"
#include "qpkam/cohomology.hpp"
#include "qpkam/diophantine.hpp"
#include "qpkam/errors.hpp"
#include "qpkam/kam.hpp"
#include "qpkam/maps.hpp"
#include "qpkam/smoothing.hpp"

using namespace qpkam;

namespace {

const double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);

struct Outcome {
  bool pass = false;
  std::string detail;
};

double ev(const ShellFunction& f, double x) { return eval(f, cd(x, 0.0)).value.real(); }

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Independent residual: u(x + alpha, y) - u(x, y) - c v(x, y) - rhs(x, y) at
// random points, with rhs = f - [f] when mean_free.
double pointwise_residual(const StripFunction& u, const StripFunction& f, double alpha, const StripFunction* v,
                          double c, bool mean_free, std::mt19937_64& rng) {
  StripFunction mean(f.freq(), f.domain(), f.K(), f.J());
  for (int j = 0; j <= f.J(); ++j) mean.at(mean.lattice().zero(), j) = f.at(f.lattice().zero(), j);
  std::uniform_real_distribution<double> X(-200.0, 200.0), Y(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const cd x(X(rng), 0.0), y(f.domain().s * Y(rng), 0.0);
    cd r = u.eval(x + alpha, y) - u.eval(x, y) - f.eval(x, y);
    if (v) r -= c * v->eval(x, y);
    if (mean_free) r += mean.eval(x, y);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

Outcome criterion1() {
  const Frequency w({1.0, kSqrt2});
  const auto cert = certify_rotation(0.7, w, 1e-3, 3.0, 0.4, 1.2, 16);
  if (!cert.accepted) return {false, "alpha not certified"};
  std::mt19937_64 rng(1001);
  const StripDomain dom(1.0, 0.5);
  double worst = 0.0;
  bool all = true;
  for (int i = 0; i < 50; ++i) {
    const auto f = testgen::random_strip(w, dom, 16, 2, 16, 0.6, rng);
    const double scale = 1.0 + f.upper_norm(dom.r);
    if (i % 2 == 0) {
      const auto s = solve_single(f, cert.rotation, 0.2);
      const double r = pointwise_residual(s.u, f, cert.rotation.alpha, nullptr, 0.0, true, rng) / scale;
      worst = std::max(worst, r);
      all = all && s.residuals[0].pass;
    } else {
      const auto g = testgen::random_strip(w, dom, 16, 2, 16, 0.6, rng);
      const double sc = std::max(scale, 1.0 + g.upper_norm(dom.r));
      const auto s = solve_coupled(f, g, cert.rotation, 0.2);
      // eps v + f is the right side of the first equation, with no mean removed.
      const double r1 = pointwise_residual(s.u, f, cert.rotation.alpha, &*s.v, s.epsilon, false, rng);
      const double r2 = pointwise_residual(*s.v, g, cert.rotation.alpha, nullptr, 0.0, true, rng);
      worst = std::max(worst, std::max(r1, r2) / sc);
      all = all && s.residuals[0].pass && s.residuals[1].pass;
    }
  }
  return {all && worst <= 1e-9, fmt("50 instances, worst residual/(1+norm) %.2e", worst)};
}

Outcome criterion2() {
  const Frequency w({1.0, kSqrt2});
  const auto cert = certify_rotation(0.7, w, 1e-3, 3.0, 0.4, 1.2, 30);
  if (!cert.accepted) return {false, "alpha not certified"};
  RotationNumber rot16 = cert.rotation;
  std::mt19937_64 rng(2002);
  int checked = 0, failed = 0;
  auto tally = [&](bool ok) {
    ++checked;
    failed += ok ? 0 : 1;
  };

  for (int i = 0; i < 10; ++i) {
    const auto f = testgen::random_strip(w, StripDomain(1.0, 0.5), 16, 2, 16, 0.6, rng);
    const auto g = testgen::random_strip(w, StripDomain(1.0, 0.5), 16, 2, 16, 0.6, rng);
    tally(solve_single(f, rot16, 0.2).bounds[0].pass);
    const auto c = solve_coupled(f, g, rot16, 0.2);
    tally(c.bounds[0].pass);
    tally(c.bounds[1].pass);
    tally(partial_sum_check(f, rot16).pass);
  }
  for (int m : {5, 10, 20}) tally(divisor_sum_bound_check(w, cert.rotation, m).pass);
  for (int i = 0; i < 20; ++i) {
    const double r = 0.1 + 0.025 * i;
    const ShellFunction f = testgen::random_shell(w, 8, 8, 0.7, rng);
    const auto nm = sup_norm(f, r);
    tally(weighted_l2(f, r) <= 4.0 * nm.upper * nm.upper);
  }
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (double q : {0.1, 0.3, 0.5})
    for (int i = 0; i < 100; ++i) {
      std::vector<double> c(1 + i % 13);
      for (double& x : c) x = U(rng);
      tally(truncation_check(c, 1 + i % 5, q, 0.7 + 0.3 * U(rng)).pass);
    }
  const Frequency golden({1.0, 0.5 * (1.0 + std::sqrt(5.0))});
  for (int t = 0; t < 10; ++t) {
    const auto f = testgen::random_strip(golden, StripDomain(0.6, 0.3), 6, 3, 4, 0.5, rng);
    tally(lipschitz_check(f, 0.1 + 0.01 * t, 400, 300 + t).pass);
  }
  return {failed == 0, fmt("%d instances, %d failures", checked, failed)};
}

// h = sum_{k >= 1} sin(k t) / k^7 equals (2 pi)^7 B_7(t / 2 pi) / (2 7!) on
// [0, 2 pi]; its derivatives are scaled Bernoulli polynomials as well.
// Long double keeps the cancellation in B_n below the 2^-8 smoothing error.
long double bernoulli(int n, long double x) {
  static const long double B[] = {1.0L, -0.5L, 1.0L / 6.0L, 0.0L, -1.0L / 30.0L, 0.0L, 1.0L / 42.0L, 0.0L};
  long double s = 0.0L, binom = 1.0L;
  for (int k = 0; k <= n; ++k) {
    s += binom * B[k] * std::pow(x, static_cast<long double>(n - k));
    binom = binom * (n - k) / (k + 1);
  }
  return s;
}

double sawtooth_derivative(int i, double t) {
  long double x = t / (2.0L * std::numbers::pi_v<long double>);
  x -= std::floor(x);
  long double fall = 1.0L;
  for (int m = 0; m < i; ++m) fall *= 7 - m;
  return static_cast<double>(std::pow(2.0L * std::numbers::pi_v<long double>, static_cast<long double>(7 - i)) * fall *
                             bernoulli(7 - i, x) / 10080.0L);
}

Outcome criterion3() {
  SampledCpFunction h;
  h.freq = Frequency({1.0});
  h.p = 6.0;
  h.shell = [](const double* th, double) { return sawtooth_derivative(0, th[0]); };
  // ||h||_6 from the exact polynomial pieces on a fine grid.
  double norm = 0.0;
  for (int i = 0; i <= 6; ++i) {
    double sup = 0.0;
    for (int m = 0; m <= 200000; ++m) sup = std::max(sup, std::abs(sawtooth_derivative(i, 2.0 * kPi * m / 200000.0)));
    norm += sup;
  }
  h.norm_bound = norm;

  std::vector<double> deltas, lx, ly;
  std::vector<StripFunction> members;
  SmoothOptions opt;
  opt.grid = 2048;
  for (int m = 3; m <= 8; ++m) {
    const double d = std::ldexp(1.0, -m);
    members.push_back(smooth(h, d, 256, 0, opt));
    double err = 0.0;
    for (int i = 0; i < 3000; ++i) {
      const double th = 2.0 * kPi * (i + 0.37) / 3000.0;
      err = std::max(err, std::abs(members.back().eval_shell(&th, 0.0) - h.shell(&th, 0.0)));
    }
    deltas.push_back(d);
    lx.push_back(std::log(d));
    ly.push_back(std::log(err));
  }
  const double sl = slope(lx, ly);
  // Constants fitted on the three coarsest members, then checked on all six.
  const std::vector<double> fit_d(deltas.begin(), deltas.begin() + 3);
  const std::vector<StripFunction> fit_m(members.begin(), members.begin() + 3);
  const SmoothingConstants c = family_ratios(h, fit_d, fit_m).max();
  const FamilyCheck chk = check_family(h, deltas, members, c);
  return {std::abs(sl - 6.0) <= 0.3 && chk.pass && c.c0 >= 1.0,
          fmt("slope %.3f, ||h||_6 = %.6f, fitted (c0, c1, c2) = (%.3g, %.3g, %.3g), family %s", sl, norm, c.c0, c.c1,
              c.c2, chk.pass ? "holds" : "violated")};
}

Outcome criterion4() {
  const Frequency w({1.0, kSqrt2});
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> U(0.4, 1.2);
  std::vector<double> alphas(1000);
  for (double& a : alphas) a = U(rng);
  std::vector<double> frac;
  for (double g : {1e-1, 1e-2, 1e-3}) frac.push_back(admissible_fraction(w, g, 3.0, 0.4, 1.2, 30, alphas));
  const bool mono = frac[0] <= frac[1] && frac[1] <= frac[2];
  return {mono && frac[2] > 0.9, fmt("fractions %.3f, %.3f, %.3f", frac[0], frac[1], frac[2])};
}

struct Instance {
  QpPlanarMap map;
  RotationNumber rotation;
  KamSchedule schedule;
  KamOptions options;
};

Instance pinned_instance(double lambda = -1.0, int k_max = -1) {
  const ExperimentConfig cfg = load_config(std::filesystem::path(QPKAM_CONFIG_DIR) / "acceptance.json");
  nlohmann::json mj = cfg.map;
  mj["omega"] = cfg.omega;
  if (lambda > 0.0) mj["lambda"] = lambda;
  Instance in;
  in.map = map_from_json(mj);
  in.map.p = cfg.p.value_or(INFINITY);
  const auto cert = certify_rotation(*cfg.alpha, Frequency(cfg.omega), cfg.gamma, cfg.tau, cfg.interval_a,
                                     cfg.interval_b, cfg.K);
  if (!cert.accepted) throw std::runtime_error("pinned alpha not certified: " + cert.message);
  in.rotation = cert.rotation;
  in.schedule = build_schedule(in.map.p, static_cast<int>(cfg.omega.size()), cfg.tau, cfg.gamma, cfg.q,
                               k_max >= 0 ? k_max : cfg.k_max);
  in.options.K = cfg.K;
  in.options.J = cfg.J;
  in.options.tol = cfg.tol;
  in.options.radial_width = cfg.radial_width;
  in.options.bandwidth = cfg.bandwidth;
  return in;
}

Outcome criterion5() {
  const Instance in = pinned_instance();
  const KamResult res = run(in.map, in.rotation, in.schedule, in.options);
  const auto& tr = res.trace;
  const int levels = static_cast<int>(tr.size()) - 1;
  double min_factor = HUGE_VAL;
  for (std::size_t i = 1; i < tr.size(); ++i) min_factor = std::min(min_factor, tr[i - 1].defect / tr[i].defect);

  const double alpha = in.rotation.alpha;
  const auto& phi = res.curve.phi;
  const auto& psi = res.curve.psi;
  std::mt19937_64 rng(5005);
  std::uniform_real_distribution<double> U(-1000.0, 1000.0);
  double conj = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double xi = U(rng);
    const Point z = apply(in.map, {xi + ev(phi, xi), ev(psi, xi)});
    conj = std::max({conj, std::abs(z.theta - xi - alpha - ev(phi, xi + alpha)), std::abs(z.r - ev(psi, xi + alpha))});
  }

  // Orbit test: 10^4 iterates of a point on the curve stay on its graph.
  const ShellFunction rho = graph_over_angle({phi, psi});
  Point z{ev(phi, 0.3) + 0.3, ev(psi, 0.3)};
  double orbit = 0.0;
  for (int i = 0; i < 10000; ++i) {
    z = apply(in.map, z);
    orbit = std::max(orbit, std::abs(z.r - ev(rho, z.theta)));
  }
  const bool pass = res.curve.defect <= 1e-8 && levels <= 6 && min_factor >= 4.0 && conj <= 1e-8 && orbit <= 1e-8;
  return {pass, fmt("defect %.2e after %d levels, min factor %.1f, conjugacy %.2e, orbit distance %.2e",
                    res.curve.defect, levels, min_factor, conj, orbit)};
}

Outcome criterion6() {
  std::vector<double> lx, ly;
  std::string vals;
  for (double lambda : {1e-3, 1e-4, 1e-5}) {
    Instance in = pinned_instance(lambda, 1);
    in.options.tol = 0.0;
    std::vector<LevelRecord> trace;
    try {
      trace = run(in.map, in.rotation, in.schedule, in.options).trace;
    } catch (const KamNotConverged& e) {
      trace = e.trace;
    }
    if (trace.size() < 2) return {false, fmt("lambda %.0e stopped before level 1", lambda)};
    lx.push_back(std::log(lambda));
    ly.push_back(std::log(trace[1].defect));
    vals += fmt(" %.3e", trace[1].defect);
  }
  const double sl = slope(lx, ly);
  return {std::abs(sl - 1.0) <= 0.15, fmt("slope %.3f, level-1 defects%s", sl, vals.c_str())};
}

// Small random curve with |phi|, |psi - level| <= amp on the reals.
CurveGraph random_curve(const Frequency& w, double level, double amp, std::mt19937_64& rng) {
  ShellFunction phi = testgen::random_shell(w, 8, 2, 0.5, rng);
  ShellFunction psi = testgen::random_shell(w, 8, 2, 0.5, rng);
  phi[phi.lattice().zero()] = 0.0;
  psi[psi.lattice().zero()] = 0.0;
  phi *= amp / sup_norm(phi, 0.0).upper;
  psi *= amp / sup_norm(psi, 0.0).upper;
  psi[psi.lattice().zero()] = level;
  return {phi, psi};
}

Outcome criterion7() {
  const Frequency w({1.0, kSqrt2});
  std::mt19937_64 rng(7007);
  const QpPlanarMap gen =
      generating_map(w, 0.02, {{{1, 0}, 1.0}, {{0, 1}, 0.5}, {{1, -1}, 0.3}}, 0.01, {{{1, 1}, 1.0}}, -1.0, 3.0);
  int witnesses = 0;
  double exact = 0.0;
  for (int i = 0; i < 20; ++i) {
    const CurveGraph c = random_curve(w, 0.5 + 0.05 * i, 0.1, rng);
    witnesses += intersection_witness(gen, c).sign_change ? 1 : 0;
    exact = std::max(exact, std::abs(exactness_defect(gen, c, 96)));
  }
  int shift_witnesses = 0;
  for (double shift : {0.05, -0.02, 0.01}) {
    CurveGraph c = random_curve(w, 0.8, 0.1, rng);
    c.psi = constant(w, 8, 0.8);
    shift_witnesses += intersection_witness(rigid_shift(w, shift, -1.0, 3.0), c).sign_change ? 1 : 0;
  }
  const std::vector<TrigMode> modes{{{1, 0}, 1.0}, {{1, -1}, 0.5}};
  double flux_err = 0.0;
  for (int i = 0; i < 5; ++i) {
    const CurveGraph c = random_curve(w, 0.7, 0.1, rng);
    exact = std::max(exact, std::abs(exactness_defect(kicked_twist(w, 0.03, modes, -1.0, 3.0), c)));
    const double flux = 1e-3 * (i + 1);
    flux_err = std::max(flux_err, std::abs(exactness_defect(flux_twist(w, 0.03, modes, flux, -1.0, 3.0), c) - flux));
  }
  const bool pass = witnesses == 20 && shift_witnesses == 0 && exact <= 1e-8 && flux_err <= 1e-9;
  return {pass, fmt("witnesses %d/20, rigid-shift witnesses %d/3, exactness %.1e, flux error %.1e", witnesses,
                    shift_witnesses, exact, flux_err)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome criterion8() {
  const ExperimentConfig cfg = load_config(std::filesystem::path(QPKAM_CONFIG_DIR) / "acceptance.json");
  const auto base = std::filesystem::temp_directory_path() / ("qpkam_acceptance_" + std::to_string(::getpid()));
  std::ostringstream quiet;
  std::vector<std::string> curves;
  for (const char* run_dir : {"a", "b"}) {
    CliContext ctx;
    ctx.out = base / run_dir;
    ctx.log = &quiet;
    const int code = cmd_solve(cfg, ctx);
    if (code != kExitOk) return {false, fmt("cmd_solve exited %d", code)};
    curves.push_back(slurp(ctx.out / "curve.json"));
  }
  const bool same = !curves[0].empty() && curves[0] == curves[1];
  std::filesystem::remove_all(base);
  return {same, fmt("curve JSON %zu bytes, %s", curves[0].size(), same ? "identical" : "differs")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget;  // seconds
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> all = {
      {"cohomology exactness", 10.0, criterion1},  {"proved inequalities", 30.0, criterion2},
      {"smoothing order", 20.0, criterion3},       {"measure estimate", 10.0, criterion4},
      {"end-to-end construction", 120.0, criterion5}, {"perturbation scaling", 180.0, criterion6},
      {"structural diagnostics", 30.0, criterion7}, {"determinism", 0.0, criterion8}};
  int failures = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = all[i].budget <= 0.0 || secs <= all[i].budget;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s %zu %s: %s (%.1f s%s)\n", pass ? "PASS" : "FAIL", i + 1, all[i].name, o.detail.c_str(), secs,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
