#pragma once

#include <cstddef>
#include <vector>

#include "qpkam/qpfourier.hpp"

namespace qpkam::detail {

// F(x + x0 + a, y_m + b) at collocation points x, for many small (a, b).
// Partial derivatives are sampled once on the grid; x-Taylor order is picked
// so the remainder stays below 1e-17 relative for |a| <= a_cap. In y the
// expansion is exact because F is a polynomial of degree J there.
class TaylorTable {
 public:
  TaylorTable(const StripFunction& F, int N, double x0, std::vector<double> ys, double a_cap);

  // d_x^dx d_y^dy F at the displaced point.
  double eval(std::size_t p, std::size_t m, double a, double b, int dx = 0, int dy = 0) const;
  // F(displaced) - F(x + x0, y_m) without forming the cancelling zeroth term.
  double increment(std::size_t p, std::size_t m, double a, double b) const;

  double a_cap() const { return a_cap_; }
  int x_order() const { return Px_; }
  std::size_t points() const { return P_; }
  const std::vector<double>& ys() const { return ys_; }

 private:
  double a_cap_;
  int Px_ = 0, Py_ = 0;
  std::size_t P_ = 0;
  std::vector<double> ys_;
  std::vector<std::vector<double>> d_;  // (i, j) -> values[p * ys + m]
  std::vector<double> inv_fact_;
};

// Largest |<k, omega>| over the lattice of F with a nonzero coefficient.
double max_frequency(const StripFunction& F);

}  // namespace qpkam::detail
