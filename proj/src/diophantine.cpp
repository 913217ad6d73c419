#include "qpkam/diophantine.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "qpkam/errors.hpp"

namespace qpkam {

namespace {

constexpr double kTwelveCubed = 1728.0;

std::vector<int> kvec(const Lattice& lat, std::size_t idx) { return std::vector<int>(lat.k(idx), lat.k(idx) + lat.n()); }

std::string kstr(const std::vector<int>& k) {
  std::string s = "(";
  for (std::size_t d = 0; d < k.size(); ++d) s += (d ? "," : "") + std::to_string(k[d]);
  return s + ")";
}

// Half lattice (k > 0 in index order) in max-norm shell order: k and -k give
// the same distances.
std::vector<std::size_t> half_shells(const Lattice& lat) {
  std::vector<std::size_t> out;
  for (std::size_t idx : lat.by_shell())
    if (idx > lat.zero()) out.push_back(idx);
  return out;
}

}  // namespace

Frequency certify_frequency(const std::vector<double>& omega, int K, double sigma0) {
  if (K < 1) throw std::invalid_argument("certify_frequency: K >= 1");
  Frequency f(omega);
  const Lattice& lat = *Lattice::get(f.n(), K);
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t idx : half_shells(lat)) {
    const int* k = lat.k(idx);
    double v = 0.0, scale = 0.0;
    for (int d = 0; d < f.n(); ++d) {
      v += k[d] * omega[d];
      scale += std::abs(k[d] * omega[d]);
    }
    if (std::abs(v) <= 1e-14 * scale) throw ResonantFrequency("<k,omega> = 0 at k = " + kstr(kvec(lat, idx)));
    c = std::min(c, std::abs(v) * std::pow(static_cast<double>(lat.max_norm(idx)), sigma0));
  }
  f.c = c;
  f.sigma0 = sigma0;
  f.K = K;
  return f;
}

RotationCertificate certify_rotation(double alpha, const Frequency& freq, double gamma, double tau, double a,
                                     double b, int K) {
  if (K < 1) throw std::invalid_argument("certify_rotation: K >= 1");
  if (!(tau > freq.n())) throw std::invalid_argument("certify_rotation: need tau > n");
  RotationCertificate cert;
  cert.rotation = RotationNumber{alpha, gamma, tau, a, b, K};
  char buf[256];

  if (!(gamma > 0.0) || !(gamma < 0.5 * std::min(1.0, kTwelveCubed * (b - a)))) {
    cert.line = RejectLine::Parameters;
    cert.message = "need 0 < gamma < min{1, 12^3 (b - a)} / 2";
    return cert;
  }
  const double lo = a + gamma / kTwelveCubed, hi = b - gamma / kTwelveCubed;
  if (!(alpha >= lo && alpha <= hi)) {
    cert.line = RejectLine::Interval;
    cert.margin = std::min(alpha - lo, hi - alpha);
    std::snprintf(buf, sizeof buf, "alpha = %.17g outside [%.17g, %.17g]", alpha, lo, hi);
    cert.message = buf;
    return cert;
  }

  const Lattice& lat = *Lattice::get(freq.n(), K);
  std::vector<double> bound(K + 1);
  for (int m = 1; m <= K; ++m) bound[m] = gamma / std::pow(static_cast<double>(m), tau);
  cert.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t idx : half_shells(lat)) {
    const double x = freq.dot(lat.k(idx)) * alpha / (2.0 * std::numbers::pi);
    // Only the two integers within distance 1 can violate the bound.
    const double fl = std::floor(x);
    for (double jj : {fl, fl + 1.0}) {
      const double dist = std::abs(x - jj);
      const double margin = dist - bound[lat.max_norm(idx)];
      cert.min_margin = std::min(cert.min_margin, margin);
      if (margin < -kTieTol) {
        cert.line = RejectLine::Lattice;
        cert.k = kvec(lat, idx);
        cert.j = static_cast<long long>(jj);
        cert.distance = dist;
        cert.margin = margin;
        std::snprintf(buf, sizeof buf, "violation at k = %s, j = %lld: distance %.3e < %.3e", kstr(cert.k).c_str(),
                      cert.j, dist, bound[lat.max_norm(idx)]);
        cert.message = buf;
        return cert;
      }
    }
  }
  cert.accepted = true;
  cert.margin = cert.min_margin;
  return cert;
}

double admissible_fraction(const Frequency& freq, double gamma, double tau, double a, double b, int K,
                           const std::vector<double>& alphas) {
  if (alphas.empty()) return 0.0;
  std::size_t ok = 0;
  for (double al : alphas) ok += certify_rotation(al, freq, gamma, tau, a, b, K).accepted ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(alphas.size());
}

SampleResult sample_admissible(const Frequency& freq, double gamma, double tau, double a, double b, int K, int count,
                               std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_admissible: count >= 1");
  SampleResult res;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(a + gamma / kTwelveCubed, b - gamma / kTwelveCubed);
  for (int i = 0; i < count; ++i) {
    const double al = U(rng);
    res.drawn.push_back(al);
    const auto c = certify_rotation(al, freq, gamma, tau, a, b, K);
    if (c.accepted) res.accepted.push_back(c.rotation);
  }
  res.fraction = static_cast<double>(res.accepted.size()) / count;
  if (res.accepted.empty())
    throw NoneAdmissible("all " + std::to_string(count) + " draws rejected; decrease gamma");
  return res;
}

DivisorTable divisor_table(const Frequency& freq, const RotationNumber& rot, int m) {
  if (m > rot.K) throw UncertifiedDivisor("m = " + std::to_string(m) + " exceeds certified K = " + std::to_string(rot.K));
  DivisorTable t;
  t.m = m;
  const Lattice& lat = *Lattice::get(freq.n(), m);
  for (std::size_t idx : lat.by_shell()) {
    const double th = freq.dot(lat.k(idx)) * rot.alpha;
    const double x = th / (2.0 * std::numbers::pi);
    t.k.push_back(kvec(lat, idx));
    t.divisor.push_back(std::abs(std::exp(std::complex<double>(0.0, th)) - 1.0));
    t.distance.push_back(std::abs(x - std::nearbyint(x)));
  }
  return t;
}

DivisorSumReport divisor_sum_bound_check(const Frequency& freq, const RotationNumber& rot, int m) {
  const DivisorTable t = divisor_table(freq, rot, m);
  DivisorSumReport r;
  r.m = m;
  for (double d : t.divisor) r.lhs += 1.0 / (d * d);
  r.rhs = std::pow(3.0, freq.n() + 3) / 8.0 / (rot.gamma * rot.gamma) * std::pow(static_cast<double>(m), 2.0 * rot.tau);
  r.pass = r.lhs <= r.rhs;
  return r;
}

}  // namespace qpkam
