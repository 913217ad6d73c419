#include "qpkam/qpfourier.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <optional>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fft.hpp"
#include "qpkam/errors.hpp"

namespace qpkam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same(const Lattice& a, const Lattice& b, const char* what) {
  if (a.n() != b.n() || a.K() != b.K()) throw std::invalid_argument(std::string(what) + ": lattice mismatch");
}

// Fills E[d * side + K + m] = e^{i m phi_d} for |m| <= K.
void fill_powers(int n, int K, const double* phi, cd* E) {
  const int side = 2 * K + 1;
  for (int d = 0; d < n; ++d) {
    cd* e = E + d * side + K;
    e[0] = 1.0;
    const cd step = std::polar(1.0, phi[d]);
    for (int m = 1; m <= K; ++m) {
      e[m] = e[m - 1] * step;
      e[-m] = std::conj(e[m]);
    }
  }
}

void fill_powers(int n, int K, const cd* phi, cd* E) {
  const int side = 2 * K + 1;
  for (int d = 0; d < n; ++d) {
    cd* e = E + d * side + K;
    e[0] = 1.0;
    const cd up = std::exp(cd(0.0, 1.0) * phi[d]);
    const cd down = std::exp(cd(0.0, -1.0) * phi[d]);
    for (int m = 1; m <= K; ++m) {
      e[m] = e[m - 1] * up;
      e[-m] = e[-m + 1] * down;
    }
  }
}

inline cd basis_at(const Lattice& lat, std::size_t idx, const cd* E) {
  const int side = lat.side(), K = lat.K();
  const int* k = lat.k(idx);
  cd b = E[k[0] + K];
  for (int d = 1; d < lat.n(); ++d) b *= E[d * side + k[d] + K];
  return b;
}

void check_reality(double defect, double scale, const char* where) {
  if (defect > kRealityTol * (1.0 + scale))
    throw RealityDefect(std::string(where) + ": conjugate-symmetry defect " + std::to_string(defect));
}

}  // namespace

// ---------------------------------------------------------------- Frequency

Frequency::Frequency(std::vector<double> w, double c_, double sigma0_, int K_)
    : omega(std::move(w)), c(c_), sigma0(sigma0_), K(K_) {
  if (omega.empty()) throw std::invalid_argument("Frequency: need n >= 1");
  for (double x : omega)
    if (!std::isfinite(x) || x == 0.0) throw std::invalid_argument("Frequency: entries must be finite and nonzero");
}

double Frequency::max_abs() const {
  double m = 0.0;
  for (double x : omega) m = std::max(m, std::abs(x));
  return m;
}

double Frequency::dot(const int* k) const {
  double s = 0.0;
  for (int d = 0; d < n(); ++d) s += k[d] * omega[d];
  return s;
}

// ------------------------------------------------------------ ShellFunction

ShellFunction::ShellFunction(Frequency freq, int K, double width)
    : freq_(std::move(freq)), lat_(Lattice::get(freq_.n(), K)), width_(width), c_(lat_->size(), cd(0.0, 0.0)) {}

double ShellFunction::eval_shell(const double* phi) const {
  const int n = this->n(), K = this->K();
  std::vector<cd> E(static_cast<std::size_t>(n) * lat_->side());
  fill_powers(n, K, phi, E.data());
  double acc = 0.0;
  for (std::size_t idx = 0; idx < lat_->size(); ++idx) {
    if (c_[idx] == cd(0.0, 0.0)) continue;
    acc += (c_[idx] * basis_at(*lat_, idx, E.data())).real();
  }
  return acc;
}

cd ShellFunction::eval_shell(const cd* phi) const {
  const int n = this->n(), K = this->K();
  std::vector<cd> E(static_cast<std::size_t>(n) * lat_->side());
  fill_powers(n, K, phi, E.data());
  cd acc = 0.0;
  for (std::size_t idx = 0; idx < lat_->size(); ++idx) {
    if (c_[idx] == cd(0.0, 0.0)) continue;
    acc += c_[idx] * basis_at(*lat_, idx, E.data());
  }
  return acc;
}

ShellFunction ShellFunction::derivative() const {
  ShellFunction out = *this;
  for (std::size_t idx = 0; idx < lat_->size(); ++idx) out.c_[idx] *= cd(0.0, freq_.dot(lat_->k(idx)));
  return out;
}

ShellFunction ShellFunction::resized(int K2) const {
  ShellFunction out(freq_, K2, width_);
  for (std::size_t idx = 0; idx < out.lat_->size(); ++idx) {
    const int* k = out.lat_->k(idx);
    if (lat_->contains(k)) out.c_[idx] = c_[lat_->index(k)];
  }
  return out;
}

ShellFunction& ShellFunction::operator+=(const ShellFunction& o) {
  require_same(*lat_, *o.lat_, "ShellFunction +=");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  width_ = std::min(width_, o.width_);
  return *this;
}

ShellFunction& ShellFunction::operator-=(const ShellFunction& o) {
  require_same(*lat_, *o.lat_, "ShellFunction -=");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  width_ = std::min(width_, o.width_);
  return *this;
}

ShellFunction& ShellFunction::operator*=(double a) {
  for (auto& x : c_) x *= a;
  return *this;
}

double ShellFunction::max_coeff() const {
  double m = 0.0;
  for (const auto& x : c_) m = std::max(m, std::abs(x));
  return m;
}

double ShellFunction::reality_defect() const {
  double d = 0.0;
  for (std::size_t idx = 0; idx < c_.size(); ++idx)
    d = std::max(d, 0.5 * std::abs(c_[idx] - std::conj(c_[lat_->neg(idx)])));
  return d;
}

double ShellFunction::symmetrize() {
  const double d = reality_defect();
  for (std::size_t idx = 0; idx <= lat_->zero(); ++idx) {
    const std::size_t j = lat_->neg(idx);
    const cd m = 0.5 * (c_[idx] + std::conj(c_[j]));
    c_[idx] = m;
    c_[j] = std::conj(m);
  }
  return d;
}

ShellFunction operator+(ShellFunction a, const ShellFunction& b) { return a += b; }
ShellFunction operator-(ShellFunction a, const ShellFunction& b) { return a -= b; }
ShellFunction operator*(double s, ShellFunction a) { return a *= s; }

ShellFunction constant(const Frequency& freq, int K, double value) {
  ShellFunction f(freq, K, 0.0);
  f[f.lattice().zero()] = value;
  return f;
}

ShellFunction trig_mode(const Frequency& freq, int K, const std::vector<int>& k, double a, double b) {
  ShellFunction f(freq, K, 0.0);
  std::vector<int> mk(k.size());
  for (std::size_t d = 0; d < k.size(); ++d) mk[d] = -k[d];
  // a cos + b sin = (a - i b)/2 e^{i k} + (a + i b)/2 e^{-i k}
  f.at(k) += cd(0.5 * a, -0.5 * b);
  f.at(mk) += cd(0.5 * a, 0.5 * b);
  return f;
}

Flagged<cd> eval(const ShellFunction& f, cd x) {
  const int n = f.n();
  std::vector<cd> phi(n);
  for (int d = 0; d < n; ++d) phi[d] = f.freq().omega[d] * x;
  Flagged<cd> out{f.eval_shell(phi.data()), false};
  out.extrapolated = std::abs(x.imag()) * f.freq().max_abs() > f.width() * (1.0 + 1e-14);
  return out;
}

double weighted_l2(const ShellFunction& f, double rho) {
  double s = 0.0;
  for (std::size_t idx = 0; idx < f.lattice().size(); ++idx)
    s += std::norm(f[idx]) * std::exp(2.0 * rho * f.lattice().l1_norm(idx));
  return s;
}

int default_grid(int K) { return 2 * (2 * K + 1); }

void grid_point(int n, int N, std::size_t flat, double* phi) {
  for (int d = n - 1; d >= 0; --d) {
    phi[d] = kTwoPi * static_cast<double>(flat % N) / N;
    flat /= N;
  }
}

NormInterval sup_norm(const ShellFunction& f, double rho, int grid) {
  const Lattice& lat = f.lattice();
  const int n = f.n();
  const int N = grid > 0 ? grid : std::max(64, 4 * (2 * f.K() + 1));
  NormInterval out;
  for (std::size_t idx = 0; idx < lat.size(); ++idx) out.upper += std::abs(f[idx]) * std::exp(rho * lat.l1_norm(idx));
  const int corners = rho > 0.0 ? (1 << n) : 1;
  std::vector<cd> shifted(lat.size());
  for (int mask = 0; mask < corners; ++mask) {
    for (std::size_t idx = 0; idx < lat.size(); ++idx) {
      double e = 0.0;
      for (int d = 0; d < n; ++d) e += ((mask >> d) & 1 ? rho : -rho) * lat.k(idx)[d];
      shifted[idx] = f[idx] * std::exp(rho > 0.0 ? e : 0.0);
    }
    const auto vals = detail::coeffs_to_grid(lat, N, shifted.data());
    for (const auto& v : vals) out.lower = std::max(out.lower, std::abs(v));
  }
  // Both sides are exact for constants; keep the bracket ordered under rounding.
  out.upper = std::max(out.upper, out.lower);
  return out;
}

std::vector<double> sample(const ShellFunction& f, int N) {
  const auto vals = detail::coeffs_to_grid(f.lattice(), N, f.coeffs().data());
  std::vector<double> out(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = vals[i].real();
  return out;
}

ShellFunction from_samples(const Frequency& freq, int K, int N, const std::vector<double>& values, double width) {
  ShellFunction f(freq, K, width);
  std::vector<cd> v(values.begin(), values.end());
  if (v.size() != detail::grid_size(freq.n(), N)) throw std::invalid_argument("from_samples: wrong grid size");
  for (double x : values)
    if (!std::isfinite(x)) throw std::domain_error("from_samples: non-finite sample");
  detail::grid_to_coeffs(f.lattice(), N, v, f.coeffs().data());
  check_reality(f.symmetrize(), f.max_coeff(), "from_samples");
  return f;
}

ShellFunction product(const ShellFunction& a, const ShellFunction& b) {
  require_same(a.lattice(), b.lattice(), "product");
  const int N = default_grid(a.K());
  auto va = sample(a, N);
  const auto vb = sample(b, N);
  for (std::size_t i = 0; i < va.size(); ++i) va[i] *= vb[i];
  return from_samples(a.freq(), a.K(), N, va, std::min(a.width(), b.width()));
}

namespace {

// Values of g at phi + omega * shift for a batch of torus points.
std::vector<double> eval_shifted(const ShellFunction& g, std::size_t npts, const double* phis, const double* shift) {
  const int n = g.n();
  std::vector<double> moved(npts * n), zeros(npts, 0.0), out(npts);
  for (std::size_t p = 0; p < npts; ++p)
    for (int d = 0; d < n; ++d) moved[p * n + d] = phis[p * n + d] + g.freq().omega[d] * shift[p];
  const StripFunction lifted = lift(g, StripDomain(1.0, 1.0), 0);
  eval_many({&lifted}, npts, moved.data(), zeros.data(), out.data());
  return out;
}

std::vector<double> grid_points(int n, int N, double offset = 0.0) {
  const std::size_t G = detail::grid_size(n, N);
  std::vector<double> phis(G * n);
  for (std::size_t p = 0; p < G; ++p) {
    grid_point(n, N, p, &phis[p * n]);
    for (int d = 0; d < n; ++d) phis[p * n + d] += offset;
  }
  return phis;
}

}  // namespace

ShellFunction compose_angle(const ShellFunction& g, const ShellFunction& f, int K_out) {
  if (g.n() != f.n()) throw std::invalid_argument("compose_angle: dimension mismatch");
  const double wmax = g.freq().max_abs();
  double width = 0.0;
  if (g.width() > 0.0) {
    const double fw = std::isfinite(f.width()) ? f.width() : g.width();
    const double reach = wmax * sup_norm(f, fw).upper;
    width = std::min(fw, g.width() - reach);
    if (width < 0.0)
      throw CertifiedStripExceeded("displacement reach " + std::to_string(reach) + " exceeds strip " +
                                   std::to_string(g.width()));
  }
  const int K = K_out > 0 ? K_out : g.K();
  const int N = default_grid(std::max({K, g.K(), f.K()}));
  const auto phis = grid_points(g.n(), N);
  const auto fv = sample(f, N);
  const auto vals = eval_shifted(g, fv.size(), phis.data(), fv.data());
  return from_samples(g.freq(), K, N, vals, width);
}

ShellFunction invert_angle_map(const ShellFunction& h, const InvertOptions& opt) {
  const int n = h.n(), K = h.K();
  const ShellFunction dh = h.derivative();
  {
    const int Nd = std::max(64, 2 * default_grid(K));
    const auto d = sample(dh, Nd);
    const double mn = *std::min_element(d.begin(), d.end());
    if (1.0 + mn <= 0.0) throw NotMonotone("min of 1 + h' on grid is " + std::to_string(1.0 + mn));
  }
  // The inverse is not band-limited at K; the cutoff doubles until the residual passes.
  const int Kmax = opt.max_K > 0 ? opt.max_K : 8 * K;
  double last = 0.0;
  std::optional<ShellFunction> prev;
  for (int Kout = K;; Kout = std::min(2 * Kout, Kmax)) {
    const int N = default_grid(Kout);
    const auto phis = grid_points(n, N);
    const std::size_t G = phis.size() / n;
    std::vector<double> a(G);
    if (prev) {
      a = sample(*prev, N);
    } else {
      const auto hv = sample(h, N);
      for (std::size_t p = 0; p < G; ++p) a[p] = -hv[p];
    }
    const StripFunction lh = lift(h, StripDomain(1.0, 1.0), 0);
    const StripFunction ldh = lift(dh, StripDomain(1.0, 1.0), 0);
    std::vector<double> moved(G * n), zeros(G, 0.0), out(2 * G);
    const double scale = 1.0 + h.max_coeff();
    bool done = false;
    for (int it = 0; it < opt.max_iter && !done; ++it) {
      for (std::size_t p = 0; p < G; ++p)
        for (int d = 0; d < n; ++d) moved[p * n + d] = phis[p * n + d] + h.freq().omega[d] * a[p];
      eval_many({&lh, &ldh}, G, moved.data(), zeros.data(), out.data());
      double worst = 0.0;
      for (std::size_t p = 0; p < G; ++p) {
        const double r = a[p] + out[2 * p];
        const double dr = 1.0 + out[2 * p + 1];
        if (!(dr > 0.0)) throw NotMonotone("1 + h' <= 0 met during inversion");
        a[p] -= r / dr;
        worst = std::max(worst, std::abs(r));
      }
      done = worst < 1e-15 * scale;
    }
    ShellFunction h1 = from_samples(h.freq(), Kout, N, a, 0.0);
    if (h.width() > 0.0) h1.set_width(std::max(0.0, h.width() - h.freq().max_abs() * sup_norm(h, 0.0).upper));

    // Residual tau + h1(tau) + h(tau + h1(tau)) - tau on a staggered grid.
    const auto check = grid_points(n, N, std::numbers::pi / N);
    const std::vector<double> half(n, std::numbers::pi / N);
    const auto h1v = sample_shifted(lift(h1, StripDomain(1.0, 1.0), 0), N, half.data(), {0.0});
    const auto hv = eval_shifted(h, G, check.data(), h1v.data());
    double resid = 0.0;
    for (std::size_t p = 0; p < G; ++p) resid = std::max(resid, std::abs(h1v[p] + hv[p]));
    last = resid;
    if (resid <= opt.tol) return h1;
    if (Kout >= Kmax) break;
    prev = std::move(h1);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "inverse residual %.3e", last);
  throw NoConvergence(buf);
}

// --------------------------------------------------------------- Chebyshev

StripDomain::StripDomain(double r_, double s_) : r(r_), s(s_) {
  if (!(r > 0.0) || !(s > 0.0)) throw std::invalid_argument("StripDomain: need r > 0 and s > 0");
}

namespace cheb {

std::vector<double> nodes(int J) {
  std::vector<double> t(J + 1);
  for (int m = 0; m <= J; ++m) t[m] = std::cos(std::numbers::pi * (m + 0.5) / (J + 1));
  return t;
}

template <class V>
std::vector<V> transform_t(const std::vector<V>& v) {
  const int J = static_cast<int>(v.size()) - 1;
  std::vector<V> a(J + 1, V(0.0));
  for (int j = 0; j <= J; ++j) {
    V s(0.0);
    for (int m = 0; m <= J; ++m) s += v[m] * std::cos(j * std::numbers::pi * (m + 0.5) / (J + 1));
    a[j] = s * (2.0 / (J + 1));
  }
  a[0] *= 0.5;
  return a;
}

std::vector<double> transform(const std::vector<double>& values) { return transform_t(values); }

void values(double t, int J, double* T) {
  T[0] = 1.0;
  if (J >= 1) T[1] = t;
  for (int j = 2; j <= J; ++j) T[j] = 2.0 * t * T[j - 1] - T[j - 2];
}

void values(cd t, int J, cd* T) {
  T[0] = 1.0;
  if (J >= 1) T[1] = t;
  for (int j = 2; j <= J; ++j) T[j] = 2.0 * t * T[j - 1] - T[j - 2];
}

double disc_bound(int j) {
  const double a = std::log1p(std::sqrt(2.0));
  return (j % 2 == 0) ? std::cosh(j * a) : std::sinh(j * a);
}

std::vector<cd> derivative(const cd* a, int J) {
  std::vector<cd> b(J + 1, cd(0.0, 0.0));
  if (J == 0) return b;
  // b_{j-1} = b_{j+1} + 2 j a_j, then halve b_0.
  std::vector<cd> w(J + 2, cd(0.0, 0.0));
  for (int j = J; j >= 1; --j) w[j - 1] = w[j + 1] + 2.0 * j * a[j];
  for (int j = 0; j < J; ++j) b[j] = w[j];
  b[0] *= 0.5;
  return b;
}

}  // namespace cheb

// ------------------------------------------------------------ StripFunction

StripFunction::StripFunction(Frequency freq, StripDomain dom, int K, int J)
    : freq_(std::move(freq)), dom_(dom), lat_(Lattice::get(freq_.n(), K)), J_(J), c_(lat_->size() * (J + 1), cd(0.0, 0.0)) {
  if (J < 0) throw std::invalid_argument("StripFunction: J >= 0");
}

cd StripFunction::eval(cd x, cd y) const {
  const int n = this->n();
  std::vector<cd> phi(n), E(static_cast<std::size_t>(n) * lat_->side()), T(J_ + 1);
  for (int d = 0; d < n; ++d) phi[d] = freq_.omega[d] * x;
  fill_powers(n, K(), phi.data(), E.data());
  cheb::values(y / dom_.s, J_, T.data());
  cd acc = 0.0;
  for (std::size_t idx = 0; idx < lat_->size(); ++idx) {
    cd s = 0.0;
    for (int j = 0; j <= J_; ++j) s += at(idx, j) * T[j];
    if (s != cd(0.0, 0.0)) acc += s * basis_at(*lat_, idx, E.data());
  }
  return acc;
}

double StripFunction::eval_shell(const double* phi, double y) const {
  double out;
  eval_many({this}, 1, phi, &y, &out);
  return out;
}

StripFunction StripFunction::dx() const {
  StripFunction out = *this;
  for (std::size_t idx = 0; idx < lat_->size(); ++idx) {
    const cd m(0.0, freq_.dot(lat_->k(idx)));
    for (int j = 0; j <= J_; ++j) out.at(idx, j) *= m;
  }
  return out;
}

StripFunction StripFunction::dy() const {
  StripFunction out = *this;
  for (std::size_t idx = 0; idx < lat_->size(); ++idx) {
    const auto b = cheb::derivative(&c_[idx * (J_ + 1)], J_);
    for (int j = 0; j <= J_; ++j) out.at(idx, j) = b[j] / dom_.s;
  }
  return out;
}

StripFunction StripFunction::resized(int K2, int J2) const {
  StripFunction out(freq_, dom_, K2, J2);
  for (std::size_t idx = 0; idx < out.lat_->size(); ++idx) {
    const int* k = out.lat_->k(idx);
    if (!lat_->contains(k)) continue;
    const std::size_t src = lat_->index(k);
    for (int j = 0; j <= std::min(J_, J2); ++j) out.at(idx, j) = at(src, j);
  }
  return out;
}

StripFunction& StripFunction::operator+=(const StripFunction& o) {
  require_same(*lat_, *o.lat_, "StripFunction +=");
  if (J_ != o.J_) throw std::invalid_argument("StripFunction +=: J mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

StripFunction& StripFunction::operator-=(const StripFunction& o) {
  require_same(*lat_, *o.lat_, "StripFunction -=");
  if (J_ != o.J_) throw std::invalid_argument("StripFunction -=: J mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

StripFunction& StripFunction::operator*=(double a) {
  for (auto& x : c_) x *= a;
  return *this;
}

StripFunction operator+(StripFunction a, const StripFunction& b) { return a += b; }
StripFunction operator-(StripFunction a, const StripFunction& b) { return a -= b; }
StripFunction operator*(double s, StripFunction a) { return a *= s; }

ShellFunction StripFunction::at_y(double y) const {
  ShellFunction f(freq_, K(), dom_.r);
  std::vector<double> T(J_ + 1);
  cheb::values(y / dom_.s, J_, T.data());
  for (std::size_t idx = 0; idx < lat_->size(); ++idx) {
    cd s = 0.0;
    for (int j = 0; j <= J_; ++j) s += at(idx, j) * T[j];
    f[idx] = s;
  }
  return f;
}

std::vector<cd> StripFunction::slice(std::size_t idx) const {
  return std::vector<cd>(c_.begin() + idx * (J_ + 1), c_.begin() + (idx + 1) * (J_ + 1));
}

double StripFunction::upper_norm(double rho) const {
  double up = 0.0;
  for (std::size_t idx = 0; idx < lat_->size(); ++idx) {
    double s = 0.0;
    for (int j = 0; j <= J_; ++j) s += std::abs(at(idx, j)) * cheb::disc_bound(j);
    up += s * std::exp(rho * lat_->l1_norm(idx));
  }
  return up;
}

NormInterval StripFunction::norm(double rho, int grid) const {
  NormInterval out;
  out.upper = upper_norm(rho);
  const int M = 2 * J_ + 3;
  for (int m = 0; m < M; ++m) {
    const double y = dom_.s * (-1.0 + 2.0 * m / (M - 1));
    out.lower = std::max(out.lower, sup_norm(at_y(y), rho, grid).lower);
  }
  out.upper = std::max(out.upper, out.lower);
  return out;
}

double StripFunction::max_coeff() const {
  double m = 0.0;
  for (const auto& x : c_) m = std::max(m, std::abs(x));
  return m;
}

double StripFunction::reality_defect() const {
  double d = 0.0;
  for (std::size_t idx = 0; idx < lat_->size(); ++idx)
    for (int j = 0; j <= J_; ++j)
      d = std::max(d, 0.5 * std::abs(at(idx, j) - std::conj(at(lat_->neg(idx), j))));
  return d;
}

double StripFunction::symmetrize() {
  const double d = reality_defect();
  for (std::size_t idx = 0; idx <= lat_->zero(); ++idx) {
    const std::size_t q = lat_->neg(idx);
    for (int j = 0; j <= J_; ++j) {
      const cd m = 0.5 * (at(idx, j) + std::conj(at(q, j)));
      at(idx, j) = m;
      at(q, j) = std::conj(m);
    }
  }
  return d;
}

StripFunction lift(const ShellFunction& f, StripDomain dom, int J) {
  StripFunction out(f.freq(), dom, f.K(), J);
  for (std::size_t idx = 0; idx < f.lattice().size(); ++idx) out.at(idx, 0) = f[idx];
  return out;
}

std::vector<double> mean_value(const StripFunction& f) {
  std::vector<double> m(f.J() + 1);
  const std::size_t z = f.lattice().zero();
  for (int j = 0; j <= f.J(); ++j) m[j] = f.at(z, j).real();
  return m;
}

double eval_mean(const std::vector<double>& mean, double y, double s) {
  const int J = static_cast<int>(mean.size()) - 1;
  std::vector<double> T(J + 1);
  cheb::values(y / s, J, T.data());
  double acc = 0.0;
  for (int j = 0; j <= J; ++j) acc += mean[j] * T[j];
  return acc;
}

std::vector<double> sample(const StripFunction& f, int N) {
  const Lattice& lat = f.lattice();
  const int J = f.J();
  const auto t = cheb::nodes(J);
  const std::size_t G = detail::grid_size(f.n(), N);
  std::vector<double> out(G * (J + 1));
  std::vector<cd> slice(lat.size());
  std::vector<double> T(J + 1);
  for (int m = 0; m <= J; ++m) {
    cheb::values(t[m], J, T.data());
    for (std::size_t idx = 0; idx < lat.size(); ++idx) {
      cd s = 0.0;
      for (int j = 0; j <= J; ++j) s += f.at(idx, j) * T[j];
      slice[idx] = s;
    }
    const auto vals = detail::coeffs_to_grid(lat, N, slice.data());
    for (std::size_t p = 0; p < G; ++p) out[p * (J + 1) + m] = vals[p].real();
  }
  return out;
}

std::vector<double> sample_shifted(const StripFunction& f, int N, const double* shift, const std::vector<double>& ys) {
  const Lattice& lat = f.lattice();
  const int J = f.J();
  const std::size_t G = detail::grid_size(f.n(), N), ny = ys.size();
  std::vector<cd> phase(lat.size());
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    double a = 0.0;
    for (int d = 0; d < f.n(); ++d) a += lat.k(idx)[d] * shift[d];
    phase[idx] = std::polar(1.0, a);
  }
  std::vector<double> out(G * ny);
  std::vector<cd> slice(lat.size());
  std::vector<double> T(J + 1);
  for (std::size_t m = 0; m < ny; ++m) {
    cheb::values(ys[m] / f.domain().s, J, T.data());
    for (std::size_t idx = 0; idx < lat.size(); ++idx) {
      cd s = 0.0;
      for (int j = 0; j <= J; ++j) s += f.at(idx, j) * T[j];
      slice[idx] = s * phase[idx];
    }
    const auto vals = detail::coeffs_to_grid(lat, N, slice.data());
    for (std::size_t p = 0; p < G; ++p) out[p * ny + m] = vals[p].real();
  }
  return out;
}

StripFunction from_samples(const Frequency& freq, StripDomain dom, int K, int J, int N,
                           const std::vector<double>& values) {
  StripFunction f(freq, dom, K, J);
  const Lattice& lat = f.lattice();
  const std::size_t G = detail::grid_size(freq.n(), N);
  if (values.size() != G * (J + 1)) throw std::invalid_argument("from_samples: wrong grid size");
  for (double x : values)
    if (!std::isfinite(x)) throw std::domain_error("from_samples: non-finite sample");
  std::vector<cd> atnodes(lat.size() * (J + 1));
  std::vector<cd> v(G);
  for (int m = 0; m <= J; ++m) {
    for (std::size_t p = 0; p < G; ++p) v[p] = values[p * (J + 1) + m];
    detail::grid_to_coeffs(lat, N, v, atnodes.data() + m, J + 1);
  }
  std::vector<cd> col(J + 1);
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    for (int m = 0; m <= J; ++m) col[m] = atnodes[idx * (J + 1) + m];
    const auto a = cheb::transform_t(col);
    for (int j = 0; j <= J; ++j) f.at(idx, j) = a[j];
  }
  check_reality(f.symmetrize(), f.max_coeff(), "from_samples");
  return f;
}

StripFunction interpolate(const Frequency& freq, StripDomain dom, int K, int J, int N,
                          const std::function<double(const double* phi, double y)>& fn) {
  const int n = freq.n();
  const auto t = cheb::nodes(J);
  const std::size_t G = detail::grid_size(n, N);
  std::vector<double> vals(G * (J + 1));
  std::vector<double> phi(n);
  for (std::size_t p = 0; p < G; ++p) {
    grid_point(n, N, p, phi.data());
    for (int m = 0; m <= J; ++m) vals[p * (J + 1) + m] = fn(phi.data(), dom.s * t[m]);
  }
  return from_samples(freq, dom, K, J, N, vals);
}

void eval_many(const std::vector<const StripFunction*>& fs, std::size_t npts, const double* phis, const double* ys,
               double* out) {
  if (fs.empty()) return;
  const StripFunction& f0 = *fs[0];
  const Lattice& lat = f0.lattice();
  const int n = f0.n(), K = f0.K(), J = f0.J();
  const double s = f0.domain().s;
  for (const auto* f : fs)
    if (f->K() != K || f->J() != J || f->n() != n || f->domain().s != s)
      throw std::invalid_argument("eval_many: functions must share n, K, J and s");
  const std::size_t nf = fs.size();
  const std::size_t z = lat.zero(), L = lat.size();
  std::vector<cd> E(static_cast<std::size_t>(n) * lat.side());
  std::vector<cd> basis(L);
  std::vector<double> T(J + 1);
  std::vector<const double*> raw(nf);
  for (std::size_t q = 0; q < nf; ++q) raw[q] = reinterpret_cast<const double*>(fs[q]->coeffs().data());
  const std::size_t W = static_cast<std::size_t>(J + 1);
  for (std::size_t p = 0; p < npts; ++p) {
    fill_powers(n, K, phis + p * n, E.data());
    for (std::size_t idx = z + 1; idx < L; ++idx) basis[idx] = basis_at(lat, idx, E.data());
    cheb::values(ys[p] / s, J, T.data());
    for (std::size_t q = 0; q < nf; ++q) {
      const double* c = raw[q];
      double acc = 0.0;
      {
        const double* cz = c + 2 * z * W;
        for (std::size_t j = 0; j < W; ++j) acc += cz[2 * j] * T[j];
      }
      double sum = 0.0;
      for (std::size_t idx = z + 1; idx < L; ++idx) {
        const double* ck = c + 2 * idx * W;
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < W; ++j) {
          re += ck[2 * j] * T[j];
          im += ck[2 * j + 1] * T[j];
        }
        sum += re * basis[idx].real() - im * basis[idx].imag();
      }
      out[p * nf + q] = acc + 2.0 * sum;
    }
  }
}

}  // namespace qpkam
