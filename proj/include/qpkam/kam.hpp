#pragma once

// The KAM iteration for a quasi-periodic twist map. After the linear change
// theta = x, r = alpha + eps0 y the map reads A = Omega_0 + (f, g) with
//   Omega_k(x, y) = (x + alpha + eps_k y, y),
// and each level conjugates H_k to Omega_{k+1} + small on a shrunken strip,
// rescaling y by Theta(x, y) = (x, theta y).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpkam/cohomology.hpp"
#include "qpkam/diophantine.hpp"
#include "qpkam/errors.hpp"
#include "qpkam/maps.hpp"
#include "qpkam/qpfourier.hpp"
#include "qpkam/smoothing.hpp"

namespace qpkam {

struct KamSchedule {
  double p = 0.0, tau = 0.0, gamma = 0.0, q = 0.0;
  int n = 0;
  double theta = 0.0;
  double s0 = 0.0;
  double eps0 = 0.0;  // proof value 6^{-(tau + (n+1)/2)} gamma / Gamma(tau + 1)
  double M0 = 0.0;
  std::vector<double> r, s, r_prime, s_prime, eps, M, b, B, delta;

  // (1 + q)^p / (1 - q) <= 2^{p - 1 - 2 tau}, compared in logs.
  double condition_lhs = 0.0, condition_rhs = 0.0;
  bool condition_ok = false;
  bool relations_ok = false;  // q <= (theta/10)^2, 0 < gamma < 1/2, tau >= n, D_k inside D'_k
  std::string relations_message;

  int k_max() const { return static_cast<int>(r.size()) - 1; }
  double rho(int k) const { return r[k] / 6.0; }
  nlohmann::json to_json() const;
};

// Throws SmoothnessTooLow when p <= 2 tau + 1, std::invalid_argument for
// gamma outside (0, 1/2) or tau < n. q defaults to q_bound(p, tau).
KamSchedule build_schedule(double p, int n, double tau, double gamma, std::optional<double> q, int k_max);

struct SmallnessReport {
  double lhs0 = 0.0, rhs0 = 0.0;  // sup |f| + sup |g| against its threshold
  double lhsP = 0.0, rhsP = 0.0;  // ||f||_p + ||g||_p against its threshold
  double p_used = 0.0;            // finite order used for the norm
  bool pass = false;
};

double smallness_rhs0(const KamSchedule& s, const SmoothingConstants& c);
double smallness_rhsP(const KamSchedule& s, const SmoothingConstants& c);

// Norms come from the declared norm_bound when positive, else from
// estimate_cp_norm at order min(p, ceil(2 tau + 2)). Advisory only.
SmallnessReport smallness_check(const SampledCpFunction& f, const SampledCpFunction& g, const KamSchedule& s,
                                const SmoothingConstants& c, int K = 12, int J = 4);

// H = Omega + (f, g) on D(r, s) = f.domain(), Omega with twist eps.
struct NormalizedMap {
  StripFunction f, g;
  double alpha = 0.0;
  double eps = 0.0;

  const StripDomain& domain() const { return f.domain(); }
  double bound() const;  // max of the two upper norms on the domain
};

// Omega + 0 on dom with cutoffs (K, J).
NormalizedMap rotation_map(const Frequency& freq, StripDomain dom, int K, int J, double alpha, double eps);

// Z(xi, eta) = (xi + X(xi, eta), Y(xi, eta)).
struct ConjugacyMap {
  StripFunction X, Y;
  double b = 1.0, B = 1.0;

  const StripDomain& domain() const { return X.domain(); }
};

ConjugacyMap identity_conjugacy(const Frequency& freq, StripDomain dom, int K, int J);

// Q(eta) = (0, a0 + a1 eta + a2 eta^2).
struct TruncationPolynomial {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0;
  double operator()(double eta) const { return a0 + eta * (a1 + eta * a2); }
  // |a0| + |a1| s + |a2| s^2.
  double weight(double s) const { return std::abs(a0) + std::abs(a1) * s + std::abs(a2) * s * s; }
};

// Coefficients (1 - q^{2(m-k)}) f_k for k < m of a power series.
std::vector<double> truncate_series(const std::vector<double>& coeffs, int m, double q);

// sup_{|z| <= q r} |f - f_{m-1,q}| against q^m sup_{|z| < r} |f| on circles.
struct TruncationCheck {
  double lhs = 0.0, rhs = 0.0;
  bool pass = false;
};
TruncationCheck truncation_check(const std::vector<double>& coeffs, int m, double q, double r, int samples = 256);

// Largest |w(z) - w(z')| / |z - z'| over sampled pairs of D - d, against
// sup_D |w| / d. The max norm on C^2 is used for |z - z'|.
struct LipschitzCheck {
  double measured = 0.0, bound = 0.0;
  bool pass = false;
};
LipschitzCheck lipschitz_check(const StripFunction& w, double d, int pairs, std::uint64_t seed);

struct StepOptions {
  double picard_tol = 1e-13;  // times theta^2 M
  int max_iter = 200;
  int grid = 0;               // collocation grid, default_grid(K)
};

struct StepResult {
  StripFunction u, v;             // W - Theta, defined on |Im x| < 4 rho, |eta| < s / theta
  NormalizedMap phi;              // Phi_+ on D_+ = D(r/2, s/2) with eps_+ = theta eps
  TruncationPolynomial Q;
  CohomologySolution linear;
  int iterations = 0;
  std::vector<double> increments;  // sup |z_{m+1} - z_m| per Picard sweep
  double contraction = 0.0;        // largest ratio of successive increments
  double w_sup = 0.0, w_bound = 0.0;          // |W - Theta| against (2/3) q s
  double phi_minus_Q = 0.0, phi_bound = 0.0;  // |Phi_+ - Omega_+ - Q| against (5/48) theta M
  double lip_lower = 0.0, lip_upper = 0.0;    // sampled bi-Lipschitz ratios of W
  double lip_lower_bound = 0.0, lip_upper_bound = 0.0;  // theta (1 - q) and 1 + q
};

// Throws PreconditionDefect when |H - Omega|_D > M and ContractionDiverged.
StepResult inductive_step(const NormalizedMap& H, const RotationNumber& alpha, double theta, double q, double M,
                          const StepOptions& opt = {});

// Z_{k+1} = Z o W on D'(r', s') with the given cutoffs.
ConjugacyMap compose_conjugacy(const ConjugacyMap& Z, const StepResult& w, double theta, StripDomain dom, int K, int J,
                               int grid = 0);

struct SolveBackReport {
  int max_newton = 0;
  double residual = 0.0;    // largest root-finding residual
  double diff_sup = 0.0;    // sup over the grid of |H - Phi|
};

// H with Z o H = A o Z on Phi's grid, A a level-0 normalized map (eps0)
// whose domain must contain Z(D). Newton per point, seeded at Phi.
// Throws RootFindFailed.
NormalizedMap solve_back(const ConjugacyMap& Z, const NormalizedMap& A, const NormalizedMap& Phi,
                         SolveBackReport* report = nullptr, int grid = 0);

struct WitnessSample {
  double eta = 0.0;
  double xi0 = 0.0;
  double Q = 0.0;  // Psi^(2)(xi0, eta) - eta - (Psi - Omega - Q)^(2)(xi0, eta)
};

struct IntersectionBoundReport {
  std::vector<WitnessSample> witnesses;
  double N = 0.0;           // sup |Psi - Omega - Q| on the real grid
  double q_weight = 0.0;    // |a0| + |a1| s + |a2| s^2
  double proof_N = 0.0;
  bool pass = false;        // q_weight <= 3 N
};

// Psi - Omega on the reals. For every Chebyshev node eta, the first sign
// change of Psi^(2) - eta along xi is located; throws NoIntersectionWitness
// when some node has none.
IntersectionBoundReport intersection_bound(const NormalizedMap& Psi, const TruncationPolynomial& Q, double proof_N,
                                           double xi_span = 0.0);

struct KamOptions {
  int K = 16, J = 6;
  double radial_width = 0.05;  // original r-window eps0 / 600 around alpha
  double tol = 1e-8;
  double bandwidth = 2.0;      // smoothing passband factor
  bool intersection = true;
  StepOptions step;
};

// A and its smoothed members A_0, A_1, ... on |Im x| < delta_k, |y| < 1/600.
struct NormalizedFamily {
  double eps0 = 0.0;                 // numerical eps0 = 600 radial_width
  double strip_halfwidth = 1.0 / 600.0;
  NormalizedMap A;                   // interpolated unsmoothed data
  std::vector<NormalizedMap> members;
  double A0_sup = 0.0, A0_bound = 0.0;  // |A_0 - Omega_0| against c0 (|f| + |g|)/eps0
  FamilyCheck check_f, check_g;
};

NormalizedFamily normalize(const QpPlanarMap& m, const RotationNumber& alpha, const KamSchedule& s,
                           const KamOptions& opt);

struct LevelRecord {
  int k = 0;
  double defect = 0.0;        // sup |A o Z(xi, 0) - Z(xi + alpha, 0)| in (theta, r)
  double defect_xy = 0.0;     // the same in normalized (x, y)
  double M_proof = 0.0, M_measured = 0.0;
  double BM = 0.0;            // B_k M_measured
  double w_sup = 0.0;
  TruncationPolynomial Q;
  int iterations = 0;
  double contraction = 0.0;
  double solve_back_diff = 0.0;
  double intersection_N = 0.0, intersection_weight = 0.0;
  bool intersection_pass = true;
  bool proof_regime = false;
  nlohmann::json to_json() const;
};

struct InvariantCurve {
  ShellFunction phi, psi;
  RotationNumber rotation;
  double defect = 0.0;
};

struct KamResult {
  InvariantCurve curve;
  std::vector<LevelRecord> trace;
  ConjugacyMap Z;
  double eps0 = 0.0;
  SmallnessReport smallness;
};

class KamNotConverged : public NotConverged {
 public:
  KamNotConverged(const std::string& what, std::vector<LevelRecord> trace)
      : NotConverged(what), trace(std::move(trace)) {}
  std::vector<LevelRecord> trace;
};

// Iterates until the real-grid defect is below opt.tol or the schedule runs
// out. Throws KamNotConverged.
KamResult run(const QpPlanarMap& m, const RotationNumber& alpha, const KamSchedule& s, const KamOptions& opt = {});

// Real-grid invariance defect of a level-0 conjugacy against the map, in
// (theta, r) and in normalized units.
struct DefectSample {
  double theta_r = 0.0, xy = 0.0;
};
DefectSample invariance_defect(const QpPlanarMap& m, const ConjugacyMap& Z, double alpha, double eps0, int grid = 0);

}  // namespace qpkam
