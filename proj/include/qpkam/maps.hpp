#pragma once

// Planar maps quasi-periodic in the angle:
//   theta1 = theta + r + f(theta, r),   r1 = r + g(theta, r),
// with f, g given through shell functions of (omega theta, r).

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpkam/qpfourier.hpp"

namespace qpkam {

enum class Tristate { False, True, Unknown };

struct MapIncrement {
  double f = 0.0;
  double g = 0.0;
};

// (f, g) at shell angles phi = omega theta (mod 2 pi) and action r.
using ShellMap = std::function<MapIncrement(const double* phi, double r)>;

// c sin(<k, omega> theta) or c cos(<k, omega> theta) depending on the model.
struct TrigMode {
  std::vector<int> k;
  double c = 0.0;
};

struct QpPlanarMap {
  std::string model = "custom";
  Frequency freq;
  double a = 0.0, b = 1.0;  // action strip
  double p = 0.0;           // smoothness; infinity for analytic models
  Tristate intersection = Tristate::Unknown;
  Tristate exact_symplectic = Tristate::Unknown;
  ShellMap increments;
  nlohmann::json params;  // catalog parameters, echoed into reports

  MapIncrement at_shell(const double* phi, double r) const { return increments(phi, r); }
};

struct Point {
  double theta = 0.0;
  double r = 0.0;
};

// Throws OutOfStrip unless a <= r <= b.
Point apply(const QpPlanarMap& m, Point z);

// Catalog. Modes: g = lambda sum c_k sin(<k,omega> theta).
QpPlanarMap pure_twist(const Frequency& w, double a, double b);
// Standard-map ordering r1 = r + g(theta), theta1 = theta + r1, so f = g.
QpPlanarMap kicked_twist(const Frequency& w, double lambda, const std::vector<TrigMode>& modes, double a, double b);
// Kicked twist with r1 = r + g(theta) - flux: area preserving, not exact.
QpPlanarMap flux_twist(const Frequency& w, double lambda, const std::vector<TrigMode>& modes, double flux, double a,
                       double b);
// theta1 = theta + r, r1 = r + c: no curve meets its image.
QpPlanarMap rigid_shift(const Frequency& w, double c, double a, double b);
// Generating function S = (theta1 - theta)^2/2 + lambda V(theta) + mu V2((theta + theta1)/2)
// with V = sum c cos(<k,omega> .); r = -dS/dtheta, r1 = dS/dtheta1.
QpPlanarMap generating_map(const Frequency& w, double lambda, const std::vector<TrigMode>& V, double mu,
                           const std::vector<TrigMode>& V2, double a, double b);

// {"model": "kicked_twist", "lambda": .., "omega": [..], "modes": [{"k": [..], "c": ..}], "strip": [a, b]}.
// Throws ConfigError.
QpPlanarMap map_from_json(const nlohmann::json& j);

struct CurveGraph {
  ShellFunction phi;  // theta = xi + phi(xi)
  ShellFunction psi;  // r = psi(xi)
};

// Image of the curve, parameterized by xi' = xi + [H] where
// theta1(xi) = xi + H(xi). Throws NotAGraph when 1 + H' <= 0 on the grid.
// The output cutoff defaults to twice the input one.
CurveGraph image_curve(const QpPlanarMap& m, const CurveGraph& c, int grid = 0, int K_out = 0);

// r = rho(theta) for the curve, via the inverse of xi -> xi + phi(xi).
ShellFunction graph_over_angle(const CurveGraph& c);

struct IntersectionReport {
  bool sign_change = false;
  bool identical = false;  // image coincides with the curve to 1e-13
  double xi_star = 0.0;    // theta where the image crosses the curve
  double min_d = 0.0, max_d = 0.0;
  // Area functional on a (t, T) grid with t < T, symplectic models only.
  bool area_evaluated = false;
  bool area_positive = false, area_negative = false;
  double r_star = 0.0;
};

// d(theta) = rho1(theta) - rho(theta) scanned along [0, 2 pi grid_size] with
// grid_size^2 points; the first sign change is refined by bisection.
IntersectionReport intersection_witness(const QpPlanarMap& m, const CurveGraph& c, int grid_size = 64);

// [r dtheta] - [r1 dtheta1] along the curve and its image, as shell means.
double exactness_defect(const QpPlanarMap& m, const CurveGraph& c, int grid = 0);

}  // namespace qpkam
