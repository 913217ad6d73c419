#pragma once

// Quasi-periodic functions f(t) = F(omega t) stored through the Fourier
// coefficients of the shell function F on the n-torus, and strip functions of
// (x, y): Fourier in the shell angles times Chebyshev T_j(y / s) in y.
//
// Lattice cutoffs use the max-norm of k. Analytic weights e^{rho |k|} use the
// l1-norm, which is what bounds the sup of F over the polystrip
// |Im theta_j| <= rho.

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "qpkam/lattice.hpp"

namespace qpkam {

using cd = std::complex<double>;

struct Frequency {
  std::vector<double> omega;
  double c = 0.0;       // Diophantine constant, 0 when uncertified
  double sigma0 = 0.0;  // Diophantine exponent
  int K = 0;            // radius to which (c, sigma0) has been verified

  Frequency() = default;
  explicit Frequency(std::vector<double> w, double c = 0.0, double sigma0 = 0.0, int K = 0);

  int n() const { return static_cast<int>(omega.size()); }
  double max_abs() const;
  double dot(const int* k) const;
};

struct NormInterval {
  double lower = 0.0;
  double upper = 0.0;
};

template <class T>
struct Flagged {
  T value;
  bool extrapolated = false;
};

// Reality defect above this fails fast after grid-based operations.
inline constexpr double kRealityTol = 1e-10;

class ShellFunction {
 public:
  ShellFunction() = default;
  ShellFunction(Frequency freq, int K, double width = 0.0);

  const Frequency& freq() const { return freq_; }
  int n() const { return freq_.n(); }
  int K() const { return lat_->K(); }
  double width() const { return width_; }
  void set_width(double w) { width_ = w; }
  const Lattice& lattice() const { return *lat_; }
  std::shared_ptr<const Lattice> lattice_ptr() const { return lat_; }

  std::vector<cd>& coeffs() { return c_; }
  const std::vector<cd>& coeffs() const { return c_; }
  cd& operator[](std::size_t idx) { return c_[idx]; }
  const cd& operator[](std::size_t idx) const { return c_[idx]; }
  cd& at(const std::vector<int>& k) { return c_[lat_->index(k)]; }
  cd at(const std::vector<int>& k) const { return c_[lat_->index(k)]; }

  // F at a point of the torus (angles in radians), real part only.
  double eval_shell(const double* phi) const;
  cd eval_shell(const cd* phi) const;

  // d/dt of t -> F(omega t).
  ShellFunction derivative() const;
  // Copy with cutoff K2 (zero-padded or truncated).
  ShellFunction resized(int K2) const;

  ShellFunction& operator+=(const ShellFunction& o);
  ShellFunction& operator-=(const ShellFunction& o);
  ShellFunction& operator*=(double a);

  double max_coeff() const;
  // max_k |f_k - conj(f_{-k})| / 2.
  double reality_defect() const;
  // Replace f_k by the conjugate mean; returns the defect removed.
  double symmetrize();

 private:
  Frequency freq_;
  std::shared_ptr<const Lattice> lat_;
  double width_ = 0.0;
  std::vector<cd> c_;
};

ShellFunction operator+(ShellFunction a, const ShellFunction& b);
ShellFunction operator-(ShellFunction a, const ShellFunction& b);
ShellFunction operator*(double s, ShellFunction a);

ShellFunction constant(const Frequency& freq, int K, double value);
// a cos(<k, theta>) + b sin(<k, theta>).
ShellFunction trig_mode(const Frequency& freq, int K, const std::vector<int>& k, double a, double b);

// Sum of f_k e^{i<k,omega> x}; flagged when |Im x| max|omega_j| > width.
Flagged<cd> eval(const ShellFunction& f, cd x);

// [lower, upper] bracket of |f|_rho: lower from a dense grid on the
// distinguished boundary Im theta_j = +-rho, upper = sum |f_k| e^{rho |k|_1}.
NormInterval sup_norm(const ShellFunction& f, double rho, int grid = 0);

// Weighted l2 sum  sum |f_k|^2 e^{2 rho |k|_1}.
double weighted_l2(const ShellFunction& f, double rho);

// Collocation grid with N points per dimension.
int default_grid(int K);
void grid_point(int n, int N, std::size_t flat, double* phi);
std::vector<double> sample(const ShellFunction& f, int N);
ShellFunction from_samples(const Frequency& freq, int K, int N, const std::vector<double>& values,
                           double width = 0.0);
ShellFunction product(const ShellFunction& a, const ShellFunction& b);

// t -> g(t + f(t)). Throws CertifiedStripExceeded when g has a positive
// width and the displacement leaves it.
// K_out = 0 keeps the cutoff of g.
ShellFunction compose_angle(const ShellFunction& g, const ShellFunction& f, int K_out = 0);

struct InvertOptions {
  double tol = 1e-10;  // sup residual accepted on a check grid
  int max_iter = 60;
  int max_K = 0;       // output cutoff cap; 0 means 8 K
};
// h1 with (t + h(t)) o (tau + h1(tau)) = identity.
// Throws NotMonotone or NoConvergence.
ShellFunction invert_angle_map(const ShellFunction& h, const InvertOptions& opt = {});

// ---------------------------------------------------------------------------

struct StripDomain {
  double r = 1.0;  // imaginary half-width in x
  double s = 1.0;  // half-width in y

  StripDomain() = default;
  StripDomain(double r_, double s_);
};

namespace cheb {
// Gauss-Chebyshev nodes t_m = cos(pi (m + 1/2) / (J + 1)) on [-1, 1].
std::vector<double> nodes(int J);
// Coefficients of the degree-J interpolant through values at nodes(J).
std::vector<double> transform(const std::vector<double>& values);
void values(double t, int J, double* T);
void values(cd t, int J, cd* T);
// max_{|z| <= 1} |T_j(z)|, attained at z = i.
double disc_bound(int j);
// Coefficients of d/dt.
std::vector<cd> derivative(const cd* a, int J);
}  // namespace cheb

class StripFunction {
 public:
  StripFunction() = default;
  StripFunction(Frequency freq, StripDomain dom, int K, int J);

  const Frequency& freq() const { return freq_; }
  int n() const { return freq_.n(); }
  int K() const { return lat_->K(); }
  int J() const { return J_; }
  const StripDomain& domain() const { return dom_; }
  void set_domain(StripDomain d) { dom_ = d; }
  const Lattice& lattice() const { return *lat_; }

  std::vector<cd>& coeffs() { return c_; }
  const std::vector<cd>& coeffs() const { return c_; }
  cd& at(std::size_t idx, int j) { return c_[idx * (J_ + 1) + j]; }
  const cd& at(std::size_t idx, int j) const { return c_[idx * (J_ + 1) + j]; }

  cd eval(cd x, cd y) const;
  double eval_shell(const double* phi, double y) const;

  // d/dt along t -> F(omega t, y), and d/dy.
  StripFunction dx() const;
  StripFunction dy() const;
  StripFunction resized(int K2, int J2) const;

  StripFunction& operator+=(const StripFunction& o);
  StripFunction& operator-=(const StripFunction& o);
  StripFunction& operator*=(double a);

  // Fourier slice at fixed real y.
  ShellFunction at_y(double y) const;
  // Slice of Chebyshev coefficients for lattice index idx.
  std::vector<cd> slice(std::size_t idx) const;

  // [lower, upper] bracket of |f|_{rho, s}. Upper uses |T_j| <= disc_bound(j)
  // on the complex disc |y| <= s.
  NormInterval norm(double rho, int grid = 0) const;
  double upper_norm(double rho) const;
  double max_coeff() const;
  double reality_defect() const;
  double symmetrize();

 private:
  Frequency freq_;
  StripDomain dom_;
  std::shared_ptr<const Lattice> lat_;
  int J_ = 0;
  std::vector<cd> c_;
};

StripFunction operator+(StripFunction a, const StripFunction& b);
StripFunction operator-(StripFunction a, const StripFunction& b);
StripFunction operator*(double s, StripFunction a);

// Lift y-independent data into a strip function.
StripFunction lift(const ShellFunction& f, StripDomain dom, int J);

// Mean value [f](y): the k = 0 Chebyshev slice (real parts).
std::vector<double> mean_value(const StripFunction& f);
double eval_mean(const std::vector<double>& mean, double y, double s);

// Values on the product grid N^n x (J + 1) Chebyshev nodes, layout
// values[point * (J + 1) + m].
std::vector<double> sample(const StripFunction& f, int N);
StripFunction from_samples(const Frequency& freq, StripDomain dom, int K, int J, int N,
                           const std::vector<double>& values);
// Build by sampling fn(phi, y) on the product grid.
StripFunction interpolate(const Frequency& freq, StripDomain dom, int K, int J, int N,
                          const std::function<double(const double* phi, double y)>& fn);

// Values at the grid points shifted by the angle vector `shift` (n entries),
// at each y in ys, via FFT. Layout out[point * ys.size() + m].
std::vector<double> sample_shifted(const StripFunction& f, int N, const double* shift, const std::vector<double>& ys);

// Evaluate several real strip functions sharing (n, K, J, s) at points
// (phi, y). phis has npts * n entries; out has npts * fs.size() entries,
// layout out[p * fs.size() + f].
void eval_many(const std::vector<const StripFunction*>& fs, std::size_t npts, const double* phis,
               const double* ys, double* out);

}  // namespace qpkam
