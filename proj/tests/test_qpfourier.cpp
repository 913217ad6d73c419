#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "qpkam/errors.hpp"
#include "qpkam/qpfourier.hpp"

using namespace qpkam;

namespace {

const double kSqrt2 = std::sqrt(2.0);

Frequency omega_sqrt2() { return Frequency({1.0, kSqrt2}); }

// Direct scalar evaluation of sum f_k e^{i <k,omega> x}, independent of the
// library's power tables.
std::complex<double> direct_eval(const ShellFunction& f, double x) {
  std::complex<double> acc = 0.0;
  for (std::size_t idx = 0; idx < f.lattice().size(); ++idx)
    acc += f[idx] * std::exp(std::complex<double>(0.0, f.freq().dot(f.lattice().k(idx)) * x));
  return acc;
}

ShellFunction random_real(const Frequency& w, int K, double decay, std::mt19937_64& rng, double amp = 1.0) {
  std::normal_distribution<double> N01(0.0, 1.0);
  ShellFunction f(w, K, 0.0);
  for (std::size_t idx = 0; idx < f.lattice().size(); ++idx)
    f[idx] = amp * std::complex<double>(N01(rng), N01(rng)) * std::exp(-decay * f.lattice().l1_norm(idx));
  f.symmetrize();
  return f;
}

}  // namespace

TEST_CASE("eval: constant, cosine at zero, diagonal mode") {
  const Frequency w = omega_sqrt2();
  const ShellFunction two = constant(w, 3, 2.0);
  CHECK(eval(two, 17.3).value.real() == doctest::Approx(2.0).epsilon(1e-15));

  const ShellFunction c = trig_mode(w, 3, {1, 0}, 1.0, 0.0);
  CHECK(eval(c, 0.0).value.real() == doctest::Approx(1.0).epsilon(1e-15));

  const ShellFunction d = trig_mode(w, 3, {1, 1}, 1.0, 0.0);
  const double oracle = std::cos(1.0 + kSqrt2);
  CHECK(std::abs(eval(d, 1.0).value.real() - oracle) < 1e-14);
  CHECK(oracle == doctest::Approx(-0.7469196454668814).epsilon(1e-14));
  CHECK(std::abs(eval(d, 1.0).value.imag()) < 1e-14);
}

TEST_CASE("eval: out-of-strip evaluation is flagged") {
  ShellFunction c = trig_mode(omega_sqrt2(), 2, {1, 0}, 1.0, 0.0);
  c.set_width(0.5);
  CHECK_FALSE(eval(c, {0.0, 0.3}).extrapolated);
  CHECK(eval(c, {0.0, 0.4}).extrapolated);  // 0.4 * sqrt(2) > 0.5
}

TEST_CASE("sup_norm brackets") {
  const Frequency w = omega_sqrt2();
  const auto two = sup_norm(constant(w, 2, 2.0), 0.7);
  CHECK(two.lower == doctest::Approx(2.0));
  CHECK(two.upper == doctest::Approx(2.0));

  const ShellFunction c = trig_mode(w, 2, {1, 0}, 1.0, 0.0);
  const auto n0 = sup_norm(c, 0.0);
  CHECK(n0.lower == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(n0.upper == doctest::Approx(1.0).epsilon(1e-14));

  // Weighted sum gives e; the true strip sup |cos(i)| = cosh(1) is reached by
  // the boundary grid.
  const auto n1 = sup_norm(c, 1.0);
  CHECK(n1.upper == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(n1.lower == doctest::Approx(std::cosh(1.0)).epsilon(1e-12));
  CHECK(std::cosh(1.0) == doctest::Approx(1.54308).epsilon(1e-5));
}

TEST_CASE("property: grid round trip reproduces coefficients") {
  std::mt19937_64 rng(11);
  for (int K : {3, 8, 16}) {
    const ShellFunction f = random_real(omega_sqrt2(), K, 0.1, rng);
    const int N = 2 * K + 2;
    const ShellFunction g = from_samples(f.freq(), K, N, sample(f, N));
    double err = 0.0;
    for (std::size_t i = 0; i < f.lattice().size(); ++i) err = std::max(err, std::abs(f[i] - g[i]));
    CHECK(err < 1e-12);
  }
}

TEST_CASE("property: sample agrees with direct evaluation along the line") {
  std::mt19937_64 rng(5);
  const ShellFunction f = random_real(omega_sqrt2(), 6, 0.3, rng);
  std::uniform_real_distribution<double> U(-50.0, 50.0);
  for (int i = 0; i < 20; ++i) {
    const double x = U(rng);
    CHECK(std::abs(eval(f, x).value.real() - direct_eval(f, x).real()) < 1e-12);
    CHECK(std::abs(direct_eval(f, x).imag()) < 1e-12);
  }
}

TEST_CASE("property: weighted l2 sum is bounded by 2^n times the squared sup") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const double r = 0.1 + 0.1 * trial / 4.0;
    const ShellFunction f = random_real(omega_sqrt2(), 8, 1.0, rng);
    const auto nm = sup_norm(f, r);
    CHECK(weighted_l2(f, r) <= 4.0 * nm.upper * nm.upper);
    // The lower estimate is a true lower bound of the strip sup, so the
    // inequality must hold with it too.
    CHECK(weighted_l2(f, r) <= 4.0 * nm.lower * nm.lower * (1.0 + 1e-9));
  }
}

TEST_CASE("compose_angle examples") {
  const Frequency w = omega_sqrt2();
  std::mt19937_64 rng(3);
  const ShellFunction g = random_real(w, 6, 0.5, rng);
  const ShellFunction same = compose_angle(g, ShellFunction(w, 6));
  for (std::size_t i = 0; i < g.lattice().size(); ++i) CHECK(std::abs(same[i] - g[i]) < 1e-13);

  const ShellFunction c = compose_angle(constant(w, 4, 3.5), random_real(w, 4, 1.0, rng, 0.1));
  CHECK(std::abs(c[c.lattice().zero()] - 3.5) < 1e-13);
  CHECK(c.max_coeff() == doctest::Approx(3.5));

  const ShellFunction cosx = trig_mode(w, 6, {1, 0}, 1.0, 0.0);
  const ShellFunction shifted = compose_angle(cosx, constant(w, 6, std::numbers::pi));
  for (double x : {0.0, 0.3, 1.7, -4.2}) CHECK(std::abs(eval(shifted, x).value.real() + std::cos(x)) < 1e-12);
}

TEST_CASE("compose_angle rejects a displacement leaving the strip") {
  const Frequency w = omega_sqrt2();
  ShellFunction g = trig_mode(w, 4, {1, 0}, 1.0, 0.0);
  g.set_width(0.1);
  ShellFunction f = trig_mode(w, 4, {0, 1}, 0.5, 0.0);
  f.set_width(0.1);
  CHECK_THROWS_AS(compose_angle(g, f), CertifiedStripExceeded);
}

TEST_CASE("invert_angle_map examples") {
  const Frequency w = omega_sqrt2();
  const ShellFunction z = invert_angle_map(ShellFunction(w, 6));
  CHECK(z.max_coeff() < 1e-15);

  const ShellFunction m = invert_angle_map(constant(w, 6, 0.25));
  CHECK(std::abs(m[m.lattice().zero()] + 0.25) < 1e-14);

  const ShellFunction h = trig_mode(w, 16, {1, 0}, 0.0, 0.1);
  const ShellFunction h1 = invert_angle_map(h);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-100.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double t = U(rng);
    const double a = direct_eval(h1, t).real();
    worst = std::max(worst, std::abs(a + 0.1 * std::sin(t + a)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("invert_angle_map rejects folds") {
  const ShellFunction h = trig_mode(omega_sqrt2(), 4, {1, 0}, 0.0, 1.5);
  CHECK_THROWS_AS(invert_angle_map(h), NotMonotone);
}

TEST_CASE("property: compose after invert is the identity displacement") {
  std::mt19937_64 rng(99);
  const Frequency w = omega_sqrt2();
  for (int trial = 0; trial < 10; ++trial) {
    ShellFunction h = random_real(w, 1, 0.5, rng).resized(16);
    h *= 0.2 / sup_norm(h, 0.0).upper;
    const ShellFunction h1 = invert_angle_map(h);
    const ShellFunction id = h1 + compose_angle(h, h1);
    CHECK(sup_norm(id, 0.0).upper <= 1e-9);
  }
}

TEST_CASE("strip function evaluation, derivatives and mean value") {
  const Frequency w = omega_sqrt2();
  const StripDomain dom(0.5, 0.2);
  // f(x, y) = y + cos(x)
  auto fn = [](const double* phi, double y) { return y + std::cos(phi[0]); };
  const StripFunction f = interpolate(w, dom, 4, 3, default_grid(4), fn);
  const auto m = mean_value(f);
  for (double y : {-0.2, 0.0, 0.13}) CHECK(eval_mean(m, y, dom.s) == doctest::Approx(y).epsilon(1e-14));
  CHECK(std::abs(f.eval(0.7, 0.1).real() - (0.1 + std::cos(0.7))) < 1e-14);

  // g(x, y) = (3 + sin(sqrt2 x)) y^2; derivatives checked against the formula.
  auto gn = [](const double* phi, double y) { return (3.0 + std::sin(phi[1])) * y * y; };
  const StripFunction g = interpolate(w, dom, 4, 4, default_grid(4), gn);
  const double x = 0.37, y = -0.11;
  CHECK(std::abs(g.dx().eval(x, y).real() - kSqrt2 * std::cos(kSqrt2 * x) * y * y) < 1e-13);
  CHECK(std::abs(g.dy().eval(x, y).real() - 2.0 * (3.0 + std::sin(kSqrt2 * x)) * y) < 1e-13);
  const auto gm = mean_value(g);
  for (double yy : {-0.2, 0.05}) CHECK(eval_mean(gm, yy, dom.s) == doctest::Approx(3.0 * yy * yy).epsilon(1e-13));

  // Birkhoff average over t in [0, 1e6] as the independent oracle.
  const double yy = 0.15;
  double acc = 0.0;
  const int T = 1000000;
  for (int t = 0; t < T; ++t) acc += (3.0 + std::sin(kSqrt2 * (t + 0.5))) * yy * yy;
  CHECK(std::abs(acc / T - eval_mean(gm, yy, dom.s)) < 1e-3);

  // Mean of zero is zero.
  const StripFunction z(w, dom, 3, 2);
  for (double v : mean_value(z)) CHECK(v == 0.0);
}

TEST_CASE("eval_many agrees with scalar evaluation") {
  std::mt19937_64 rng(4);
  const Frequency w = omega_sqrt2();
  const StripDomain dom(0.3, 0.4);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const StripFunction f = interpolate(w, dom, 5, 4, default_grid(5), [](const double* p, double y) {
    return std::sin(p[0] + 2 * p[1]) * (1 + y) + std::cos(p[1]) * y * y * y;
  });
  std::vector<double> phis, ys;
  for (int i = 0; i < 10; ++i) {
    phis.push_back(3 * U(rng));
    phis.push_back(3 * U(rng));
    ys.push_back(0.4 * U(rng));
  }
  std::vector<double> out(10);
  eval_many({&f}, 10, phis.data(), ys.data(), out.data());
  for (int i = 0; i < 10; ++i) {
    const double ex = std::sin(phis[2 * i] + 2 * phis[2 * i + 1]) * (1 + ys[i]) +
                      std::cos(phis[2 * i + 1]) * ys[i] * ys[i] * ys[i];
    CHECK(std::abs(out[i] - ex) < 1e-13);
  }
}

TEST_CASE("strip norm bracket is ordered") {
  const Frequency w = omega_sqrt2();
  const StripFunction f = interpolate(w, StripDomain(0.5, 0.1), 4, 3, default_grid(4),
                                      [](const double* p, double y) { return std::cos(p[0]) + 10 * y; });
  const auto nm = f.norm(0.2);
  CHECK(nm.lower <= nm.upper);
  CHECK(nm.lower >= std::cosh(0.2) + 1.0 - 1e-9);
}
