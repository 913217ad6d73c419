#include "qpkam/maps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "fft.hpp"
#include "qpkam/errors.hpp"

namespace qpkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double kdot(const std::vector<int>& k, const double* v) {
  double s = 0.0;
  for (std::size_t d = 0; d < k.size(); ++d) s += k[d] * v[d];
  return s;
}

void check_modes(const Frequency& w, const std::vector<TrigMode>& modes) {
  for (const auto& m : modes)
    if (static_cast<int>(m.k.size()) != w.n()) throw ConfigError("mode dimension does not match omega");
}

// sum c <k,omega>^order * (d/dphi)^order of sin or cos at shell angles phi,
// as a derivative in theta.
double trig_sum(const std::vector<TrigMode>& modes, const Frequency& w, const double* phi, bool cosine, int order) {
  double s = 0.0;
  for (const auto& m : modes) {
    const double a = kdot(m.k, phi);
    const double kw = w.dot(m.k.data());
    // d^order/dtheta^order of cos(a) or sin(a).
    const int ph = order + (cosine ? 1 : 0);
    double v = 0.0;
    switch (ph % 4) {
      case 0: v = std::sin(a); break;
      case 1: v = std::cos(a); break;
      case 2: v = -std::sin(a); break;
      default: v = -std::cos(a); break;
    }
    s += m.c * std::pow(kw, order) * v;
  }
  return s;
}

nlohmann::json modes_json(const std::vector<TrigMode>& modes) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& m : modes) a.push_back({{"k", m.k}, {"c", m.c}});
  return a;
}

QpPlanarMap base(const std::string& model, const Frequency& w, double a, double b) {
  if (!(a < b)) throw ConfigError("strip needs a < b");
  QpPlanarMap m;
  m.model = model;
  m.freq = w;
  m.a = a;
  m.b = b;
  m.p = kInf;
  m.params = {{"model", model}, {"omega", w.omega}, {"strip", {a, b}}};
  return m;
}

ShellFunction shifted(const ShellFunction& f, double x) {
  ShellFunction g = f;
  const Lattice& lat = f.lattice();
  for (std::size_t idx = 0; idx < lat.size(); ++idx) g[idx] *= std::polar(1.0, f.freq().dot(lat.k(idx)) * x);
  return g;
}

// [a b] for real a, b: sum_k a_k conj(b_k).
double mean_of_product(const ShellFunction& a, const ShellFunction& b) {
  const int K = std::max(a.K(), b.K());
  const ShellFunction A = a.resized(K), B = b.resized(K);
  cd s = 0.0;
  for (std::size_t idx = 0; idx < A.lattice().size(); ++idx) s += A[idx] * std::conj(B[idx]);
  return s.real();
}

ShellFunction one_plus_derivative(const ShellFunction& f) {
  ShellFunction d = f.derivative();
  d[d.lattice().zero()] += 1.0;
  return d;
}

}  // namespace

Point apply(const QpPlanarMap& m, Point z) {
  if (!(z.r >= m.a && z.r <= m.b)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "r = %.17g outside [%.17g, %.17g]", z.r, m.a, m.b);
    throw OutOfStrip(buf);
  }
  std::vector<double> phi(m.freq.n());
  for (int d = 0; d < m.freq.n(); ++d) phi[d] = std::fmod(m.freq.omega[d] * z.theta, 2.0 * std::numbers::pi);
  const MapIncrement inc = m.increments(phi.data(), z.r);
  return Point{z.theta + z.r + inc.f, z.r + inc.g};
}

QpPlanarMap pure_twist(const Frequency& w, double a, double b) {
  QpPlanarMap m = base("pure_twist", w, a, b);
  m.intersection = Tristate::True;
  m.exact_symplectic = Tristate::True;
  m.increments = [](const double*, double) { return MapIncrement{}; };
  return m;
}

QpPlanarMap kicked_twist(const Frequency& w, double lambda, const std::vector<TrigMode>& modes, double a, double b) {
  check_modes(w, modes);
  QpPlanarMap m = base("kicked_twist", w, a, b);
  m.intersection = Tristate::True;
  m.exact_symplectic = Tristate::True;
  m.params["lambda"] = lambda;
  m.params["modes"] = modes_json(modes);
  m.increments = [w, lambda, modes](const double* phi, double) {
    const double g = lambda * trig_sum(modes, w, phi, false, 0);
    return MapIncrement{g, g};
  };
  return m;
}

QpPlanarMap flux_twist(const Frequency& w, double lambda, const std::vector<TrigMode>& modes, double flux, double a,
                       double b) {
  check_modes(w, modes);
  QpPlanarMap m = base("flux_twist", w, a, b);
  m.exact_symplectic = Tristate::False;
  m.params["lambda"] = lambda;
  m.params["modes"] = modes_json(modes);
  m.params["flux"] = flux;
  m.increments = [w, lambda, modes, flux](const double* phi, double) {
    const double g = lambda * trig_sum(modes, w, phi, false, 0) - flux;
    return MapIncrement{g, g};
  };
  return m;
}

QpPlanarMap rigid_shift(const Frequency& w, double c, double a, double b) {
  QpPlanarMap m = base("rigid_shift", w, a, b);
  m.intersection = c == 0.0 ? Tristate::True : Tristate::False;
  m.exact_symplectic = c == 0.0 ? Tristate::True : Tristate::False;
  m.params["shift"] = c;
  m.increments = [c](const double*, double) { return MapIncrement{0.0, c}; };
  return m;
}

QpPlanarMap generating_map(const Frequency& w, double lambda, const std::vector<TrigMode>& V, double mu,
                           const std::vector<TrigMode>& V2, double a, double b) {
  check_modes(w, V);
  check_modes(w, V2);
  QpPlanarMap m = base("generating", w, a, b);
  m.intersection = Tristate::True;
  m.exact_symplectic = Tristate::True;
  m.params["lambda"] = lambda;
  m.params["modes"] = modes_json(V);
  m.params["mu"] = mu;
  m.params["modes2"] = modes_json(V2);
  m.increments = [w, lambda, V, mu, V2](const double* phi, double r) {
    const int n = w.n();
    std::vector<double> mid(n);
    auto at_mid = [&](double D) {
      for (int d = 0; d < n; ++d) mid[d] = phi[d] + 0.5 * w.omega[d] * D;
      return mid.data();
    };
    // D - (mu/2) V2'(theta + D/2) = r + lambda V'(theta).
    const double rhs = r + lambda * trig_sum(V, w, phi, true, 1);
    double D = rhs;
    for (int it = 0;; ++it) {
      const double F = D - 0.5 * mu * trig_sum(V2, w, at_mid(D), true, 1) - rhs;
      const double J = 1.0 - 0.25 * mu * trig_sum(V2, w, at_mid(D), true, 2);
      const double step = F / J;
      D -= step;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(D))) break;
      if (it > 60 || !std::isfinite(D)) throw RootFindFailed("generating map: Newton for theta1 did not converge");
    }
    const double r1 = D + 0.5 * mu * trig_sum(V2, w, at_mid(D), true, 1);
    return MapIncrement{D - r, r1 - r};
  };
  return m;
}

QpPlanarMap map_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ConfigError("map config must be an object");
    const std::string model = j.at("model").get<std::string>();
    const Frequency w(j.at("omega").get<std::vector<double>>());
    double a = 0.0, b = 2.0;
    if (j.contains("strip")) {
      const auto s = j.at("strip").get<std::vector<double>>();
      if (s.size() != 2) throw ConfigError("strip must be [a, b]");
      a = s[0];
      b = s[1];
    }
    auto modes = [&](const char* key) {
      std::vector<TrigMode> out;
      if (!j.contains(key)) return out;
      for (const auto& e : j.at(key)) out.push_back(TrigMode{e.at("k").get<std::vector<int>>(), e.at("c").get<double>()});
      return out;
    };
    if (model == "pure_twist") return pure_twist(w, a, b);
    if (model == "kicked_twist") return kicked_twist(w, j.at("lambda").get<double>(), modes("modes"), a, b);
    if (model == "flux_twist")
      return flux_twist(w, j.at("lambda").get<double>(), modes("modes"), j.at("flux").get<double>(), a, b);
    if (model == "rigid_shift") return rigid_shift(w, j.at("shift").get<double>(), a, b);
    if (model == "generating")
      return generating_map(w, j.value("lambda", 0.0), modes("modes"), j.value("mu", 0.0), modes("modes2"), a, b);
    throw ConfigError("unknown model '" + model + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

CurveGraph image_curve(const QpPlanarMap& m, const CurveGraph& c, int grid, int K_out) {
  const int K = K_out > 0 ? K_out : 2 * std::max(c.phi.K(), c.psi.K());
  const int n = m.freq.n();
  const int N = grid > 0 ? grid : 2 * default_grid(K);
  const auto ph = sample(c.phi.resized(K), N);
  const auto ps = sample(c.psi.resized(K), N);
  std::vector<double> H(ph.size()), R(ph.size()), pt(n);
  for (std::size_t p = 0; p < ph.size(); ++p) {
    if (!(ps[p] >= m.a && ps[p] <= m.b)) throw OutOfStrip("curve leaves the action strip");
    grid_point(n, N, p, pt.data());
    for (int d = 0; d < n; ++d) pt[d] += m.freq.omega[d] * ph[p];
    const MapIncrement inc = m.increments(pt.data(), ps[p]);
    H[p] = ph[p] + ps[p] + inc.f;
    R[p] = ps[p] + inc.g;
  }
  const ShellFunction Hs = from_samples(m.freq, K, N, H);
  const ShellFunction Rs = from_samples(m.freq, K, N, R);
  for (double v : sample(one_plus_derivative(Hs), N))
    if (!(v > 0.0)) throw NotAGraph("angle of the image is not monotone: 1 + H' = " + std::to_string(v));
  const double mean = Hs[Hs.lattice().zero()].real();
  CurveGraph out{shifted(Hs, -mean), shifted(Rs, -mean)};
  out.phi[out.phi.lattice().zero()] -= mean;
  return out;
}

ShellFunction graph_over_angle(const CurveGraph& c) {
  const ShellFunction inv = invert_angle_map(c.phi);
  // The composition carries the inverse's spectral content.
  return compose_angle(c.psi, inv, std::max(c.psi.K(), inv.K()));
}

IntersectionReport intersection_witness(const QpPlanarMap& m, const CurveGraph& c, int grid_size) {
  IntersectionReport rep;
  const CurveGraph img = image_curve(m, c);
  const ShellFunction rho = graph_over_angle(c);
  const ShellFunction rho1 = graph_over_angle(img);
  const int K = std::max(rho.K(), rho1.K());
  const ShellFunction d = rho1.resized(K) - rho.resized(K);

  double mn = kInf;
  for (double v : sample(c.psi, default_grid(c.psi.K()))) mn = std::min(mn, v);
  rep.r_star = mn - 0.1;

  if (d.max_coeff() <= 1e-13) {
    rep.identical = rep.sign_change = true;
    return rep;
  }
  const int pts = grid_size * grid_size;
  const double span = 2.0 * std::numbers::pi * grid_size;
  auto dv = [&](double x) { return eval(d, cd(x, 0.0)).value.real(); };
  rep.min_d = kInf;
  rep.max_d = -kInf;
  double prev = dv(0.0);
  for (int i = 0; i <= pts; ++i) {
    const double x = span * i / pts;
    const double v = i == 0 ? prev : dv(x);
    rep.min_d = std::min(rep.min_d, v);
    rep.max_d = std::max(rep.max_d, v);
    if (!rep.sign_change && i > 0 && (v == 0.0 || (v > 0.0) != (prev > 0.0))) {
      double lo = span * (i - 1) / pts, hi = x, flo = prev;
      for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi), fm = dv(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      rep.sign_change = true;
      rep.xi_star = 0.5 * (lo + hi);
    }
    prev = v;
  }

  if (m.exact_symplectic == Tristate::True) {
    // Delta(t, T) = int_t^T (rho1 - rho) = D(T) - D(t) with D' = d.
    ShellFunction D = d;
    const Lattice& lat = d.lattice();
    const double slope = d[lat.zero()].real();
    D[lat.zero()] = 0.0;
    for (std::size_t idx = 0; idx < lat.size(); ++idx)
      if (idx != lat.zero()) D[idx] /= cd(0.0, d.freq().dot(lat.k(idx)));
    const int G = 64;
    std::vector<double> Dv(G);
    const double L = 2.0 * std::numbers::pi * 8.0;
    for (int i = 0; i < G; ++i) {
      const double x = L * i / (G - 1);
      Dv[i] = eval(D, cd(x, 0.0)).value.real() + slope * x;
    }
    for (int i = 0; i < G; ++i)
      for (int j = i + 1; j < G; ++j) {
        const double area = Dv[j] - Dv[i];
        rep.area_positive = rep.area_positive || area > 0.0;
        rep.area_negative = rep.area_negative || area < 0.0;
      }
    rep.area_evaluated = true;
  }
  return rep;
}

double exactness_defect(const QpPlanarMap& m, const CurveGraph& c, int grid) {
  const CurveGraph img = image_curve(m, c, grid);
  return mean_of_product(c.psi, one_plus_derivative(c.phi)) - mean_of_product(img.psi, one_plus_derivative(img.phi));
}

}  // namespace qpkam
