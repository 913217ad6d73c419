#include <cmath>
#include <array>
#include <numbers>
#include <random>

#include "doctest.h"
#include "qpkam/errors.hpp"
#include "qpkam/smoothing.hpp"

using namespace qpkam;

namespace {

const double kSqrt2 = std::sqrt(2.0);

// sum_{k >= 1} sin(k t) / k^e, summed from the tail; the omitted remainder
// is below 4096^{1-e}.
double sine_series(double t, int e) {
  double s = 0.0;
  for (int k = 4096; k >= 1; --k) s += std::sin(k * t) / std::pow(static_cast<double>(k), e);
  return s;
}

SampledCpFunction sawtooth7() {
  SampledCpFunction h;
  h.freq = Frequency({1.0});
  h.p = 6.0;
  h.shell = [](const double* th, double) { return sine_series(th[0], 7); };
  return h;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

}  // namespace

TEST_CASE("lowpass symbol is flat, compactly supported and monotone") {
  CHECK(lowpass(0.0) == 1.0);
  CHECK(lowpass(0.5) == 1.0);
  CHECK(lowpass(1.0) == 0.0);
  CHECK(lowpass(3.0) == 0.0);
  CHECK(lowpass(0.75) == doctest::Approx(0.5).epsilon(1e-15));
  double prev = 1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = lowpass(0.5 + 0.5 * i / 1000.0);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("smooth: zero, trig polynomials and non-finite samples") {
  const Frequency w({1.0, kSqrt2});
  SampledCpFunction zero;
  zero.freq = w;
  zero.p = 3;
  zero.shell = [](const double*, double) { return 0.0; };
  const auto z = smooth(zero, 0.5, 6, 2);
  CHECK(z.max_coeff() == 0.0);

  SampledCpFunction trig;
  trig.freq = w;
  trig.p = 3;
  trig.s = 0.5;
  trig.shell = [](const double* th, double y) {
    return 0.3 * std::cos(th[0] - 2 * th[1]) + y * std::sin(th[1]) - 0.2 * y * y + 0.1;
  };
  // Passband |k| <= 1/(2 delta) = 2 and Chebyshev degree <= 2 keep every mode.
  const auto t = smooth(trig, 0.25, 6, 4);
  double err = 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double th[2] = {U(rng), U(rng)};
    const double y = U(rng) / 6.0;
    err = std::max(err, std::abs(t.eval_shell(th, y) - trig.shell(th, y)));
  }
  CHECK(err <= 1e-12);
  // A crude delta drops the mode at |k| = 2.
  const auto crude = smooth(trig, 1.0, 6, 4);
  CHECK(crude.at(crude.lattice().index(std::vector<int>{1, -2}), 0) == cd(0.0));

  SampledCpFunction bad = trig;
  bad.shell = [](const double* th, double) { return th[0] > 3.0 ? std::nan("") : 1.0; };
  CHECK_THROWS_AS(smooth(bad, 0.5, 4, 0), SamplerNotFinite);
}

TEST_CASE("q bound: both branches and QTooLarge") {
  const QBound b = q_bound(8.0, 2.5);
  CHECK(b.smoothness_branch == doctest::Approx(2.0 / 9.0 * std::numbers::ln2).epsilon(1e-14));
  CHECK(b.smoothness_branch == doctest::Approx(0.15403).epsilon(1e-4));
  CHECK(b.tau_branch == doctest::Approx(3.125e-4).epsilon(1e-14));
  CHECK(b.value() == b.tau_branch);
  CHECK(q_bound(INFINITY, 2.5).smoothness_branch == std::numbers::ln2);

  SampledCpFunction h;
  h.freq = Frequency({1.0, kSqrt2});
  h.p = 8.0;
  h.norm_bound = 1.0;
  h.shell = [](const double* th, double) { return std::cos(th[0]); };
  CHECK_THROWS_AS(build_family(h, 2.5, 1e-3, 1, 4, 0), QTooLarge);
  const auto fam = build_family(h, 2.5, 3e-4, 0, 4, 0);
  REQUIRE(fam.members.size() == 1);
  CHECK(fam.deltas[0] == 1.0);
  CHECK(fam.constants.c0 >= 1.0);
}

TEST_CASE("smoothing error has slope p for a series with known smoothness") {
  const auto h = sawtooth7();
  std::vector<double> lx, ly;
  for (int m = 3; m <= 8; ++m) {
    const double d = std::ldexp(1.0, -m);
    SmoothOptions opt;
    opt.grid = 2048;
    const auto hd = smooth(h, d, 256, 0, opt);
    double err = 0.0;
    for (int i = 0; i < 3000; ++i) {
      const double th = 2.0 * std::numbers::pi * (i + 0.37) / 3000.0;
      err = std::max(err, std::abs(hd.eval_shell(&th, 0.0) - h.shell(&th, 0.0)));
    }
    lx.push_back(std::log(d));
    ly.push_back(std::log(err));
  }
  MESSAGE("slope " << slope(lx, ly));
  CHECK(std::abs(slope(lx, ly) - 6.0) <= 0.3);
}

TEST_CASE("property: smoothing error decreases along a dyadic family") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Frequency w({1.0, kSqrt2});
  for (int trial = 0; trial < 5; ++trial) {
    // |k|^{-5} decay with random phases: C^3 data.
    std::vector<std::array<double, 4>> modes;
    for (int k1 = -12; k1 <= 12; ++k1)
      for (int k2 = 0; k2 <= 12; ++k2) {
        if (k2 == 0 && k1 <= 0) continue;
        const double nk = std::max(std::abs(k1), k2);
        modes.push_back({double(k1), double(k2), U(rng) / std::pow(nk, 5.0), U(rng) * 3.0});
      }
    SampledCpFunction h;
    h.freq = w;
    h.p = 2.0;
    h.shell = [modes](const double* th, double) {
      double v = 0.0;
      for (const auto& m : modes) v += m[2] * std::cos(m[0] * th[0] + m[1] * th[1] + m[3]);
      return v;
    };
    double prev = HUGE_VAL;
    for (int m = 1; m <= 4; ++m) {
      const auto hd = smooth(h, std::ldexp(1.0, -m), 12, 0);
      const double err = real_sup(hd - interpolate(w, hd.domain(), 12, 0, default_grid(12), h.shell));
      CHECK(err <= 2.0 * prev);
      prev = err;
    }
  }
}

TEST_CASE("property: every family passes with its fitted constants, which stay uniform") {
  const Frequency w({1.0, kSqrt2});
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const std::vector<double> deltas{0.5, 0.25, 0.125};
  double lo1 = HUGE_VAL, hi1 = 0.0, lo2 = HUGE_VAL, hi2 = 0.0;
  for (int i = 0; i < 8; ++i) {
    std::vector<std::array<double, 4>> modes;
    for (int k1 = -6; k1 <= 6; ++k1)
      for (int k2 = 0; k2 <= 6; ++k2) {
        if (k2 == 0 && k1 <= 0) continue;
        const double nk = std::max(std::abs(k1), k2);
        modes.push_back({double(k1), double(k2), U(rng) / std::pow(nk, 7.0), U(rng) * 3.0});
      }
    SampledCpFunction h;
    h.freq = w;
    h.p = 4.0;
    h.s = 0.5;
    h.shell = [modes](const double* th, double y) {
      double v = 0.0;
      for (const auto& m : modes) v += m[2] * std::cos(m[0] * th[0] + m[1] * th[1] + m[3]);
      return v * (1.0 + 0.3 * y);
    };
    h.norm_bound = estimate_cp_norm(h, h.p, 6, 3);
    std::vector<StripFunction> ms;
    for (double d : deltas) ms.push_back(smooth(h, d, 6, 3));
    const auto c = family_ratios(h, deltas, ms).max();
    CHECK(c.c0 >= 1.0);
    CHECK(check_family(h, deltas, ms, c).pass);
    lo1 = std::min(lo1, c.c1), hi1 = std::max(hi1, c.c1);
    lo2 = std::min(lo2, c.c2), hi2 = std::max(hi2, c.c2);
  }
  MESSAGE("c1 in [" << lo1 << ", " << hi1 << "], c2 in [" << lo2 << ", " << hi2 << "]");
  CHECK(hi1 <= 20.0 * lo1);
  CHECK(hi2 <= 20.0 * lo2);
}

TEST_CASE("Cp norm estimates on single modes") {
  SampledCpFunction h;
  h.freq = Frequency({1.0});
  h.shell = [](const double* th, double) { return std::sin(th[0]); };
  // Grid sup: a lower estimate within (pi/65)^2/2 per term.
  CHECK(estimate_cp_norm(h, 3.0, 4, 0, 64) == doctest::Approx(4.0).epsilon(5e-3));
  CHECK(estimate_cp_norm(h, 3.0, 4, 0, 64) <= 4.0);
  const double frac = estimate_cp_norm(h, 1.5, 4, 0);
  CHECK(frac > 2.9);
  // Hoelder-1/2 quotient of cos never exceeds 2 sin(d/2)/sqrt(d) <= 1.21.
  CHECK(frac < 2.0 + 1.21);

  // ||h||_p <= max(1, |omega|_1^p) ||F||_p on a trig polynomial.
  const Frequency w({1.0, kSqrt2});
  ShellFunction F = trig_mode(w, 4, {1, -2}, 0.4, 0.1) + trig_mode(w, 4, {3, 1}, 0.05, 0.0);
  SampledCpFunction hf = as_sampled(lift(F, StripDomain(1.0, 1.0), 0), 0, 0);
  for (int p = 1; p <= 4; ++p) {
    const double hn = estimate_cp_norm(hf, p, 4, 0, 40);
    const double Fn = shell_cp_norm(F, p, 40);
    CHECK(hn <= std::max(1.0, std::pow(1.0 + kSqrt2, p)) * Fn * (1 + 1e-12));
  }
}
