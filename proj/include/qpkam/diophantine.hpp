#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpkam/qpfourier.hpp"

namespace qpkam {

// Admissible rotation number: for 0 < |k| <= K and all integers j,
//   |<k,omega> alpha / 2pi - j| >= gamma / |k|^tau,
// and a + gamma/12^3 <= alpha <= b - gamma/12^3.
struct RotationNumber {
  double alpha = 0.0;
  double gamma = 0.0;
  double tau = 0.0;
  double a = 0.0, b = 0.0;
  int K = 0;
};

enum class RejectLine { None, Parameters, Interval, Lattice };

struct RotationCertificate {
  bool accepted = false;
  RotationNumber rotation;
  RejectLine line = RejectLine::None;
  std::vector<int> k;       // violating lattice vector
  long long j = 0;          // violating integer
  double distance = 0.0;    // |<k,omega> alpha/2pi - j| at the violation
  double margin = 0.0;      // distance - gamma/|k|^tau (negative on rejection)
  double min_margin = 0.0;  // smallest margin over the scanned lattice
  std::string message;
};

// Largest c with |<k,omega>| >= c / |k|^sigma0 for 0 < |k| <= K.
// Throws ResonantFrequency when <k,omega> vanishes to 1e-14 relative.
Frequency certify_frequency(const std::vector<double>& omega, int K, double sigma0);

// Tie tolerance: a margin within 1e-15 of the bound counts as satisfied.
inline constexpr double kTieTol = 1e-15;

// Throws std::invalid_argument when tau <= n or K < 1.
RotationCertificate certify_rotation(double alpha, const Frequency& freq, double gamma, double tau, double a,
                                     double b, int K);

struct SampleResult {
  std::vector<RotationNumber> accepted;
  std::vector<double> drawn;
  double fraction = 0.0;
};

// Uniform draws from [a + gamma/12^3, b - gamma/12^3]. Throws NoneAdmissible
// when every draw is rejected.
SampleResult sample_admissible(const Frequency& freq, double gamma, double tau, double a, double b, int K, int count,
                               std::uint64_t seed);

// Acceptance fraction on a fixed set of alphas.
double admissible_fraction(const Frequency& freq, double gamma, double tau, double a, double b, int K,
                           const std::vector<double>& alphas);

struct DivisorTable {
  int m = 0;
  std::vector<std::vector<int>> k;  // 0 < |k| <= m, max-norm shell order
  std::vector<double> divisor;      // |e^{i<k,omega> alpha} - 1|
  std::vector<double> distance;     // |<k,omega> alpha/2pi - nearest j|
};

// Throws UncertifiedDivisor when m > rot.K.
DivisorTable divisor_table(const Frequency& freq, const RotationNumber& rot, int m);

struct DivisorSumReport {
  int m = 0;
  double lhs = 0.0;  // sum over 0 < |k| <= m of |e^{i<k,omega>alpha} - 1|^{-2}
  double rhs = 0.0;  // 3^{n+3}/8 gamma^{-2} m^{2 tau}
  bool pass = false;
};

DivisorSumReport divisor_sum_bound_check(const Frequency& freq, const RotationNumber& rot, int m);

}  // namespace qpkam
