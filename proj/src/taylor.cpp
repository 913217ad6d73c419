#include "taylor.hpp"

#include <cmath>
#include <stdexcept>

#include "fft.hpp"

namespace qpkam::detail {

double max_frequency(const StripFunction& F) {
  const Lattice& lat = F.lattice();
  double out = 0.0;
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    bool nz = false;
    for (int j = 0; j <= F.J() && !nz; ++j) nz = F.at(idx, j) != cd(0.0);
    if (nz) out = std::max(out, std::abs(F.freq().dot(lat.k(idx))));
  }
  return out;
}

TaylorTable::TaylorTable(const StripFunction& F, int N, double x0, std::vector<double> ys, double a_cap)
    : a_cap_(a_cap), Py_(F.J()), ys_(std::move(ys)) {
  const double z = a_cap * max_frequency(F);
  // Smallest P with z^{P+1} / (P+1)! below 1e-17; one more order serves d_x.
  double term = 1.0;
  int P = 0;
  while (true) {
    term *= z / (P + 1);
    if (term < 1e-17 && P + 1 > z) break;
    if (++P > 80) throw std::domain_error("TaylorTable: displacement too large for the x expansion");
  }
  Px_ = P + 1;
  P_ = grid_size(F.n(), N);
  inv_fact_.assign(std::max(Px_, Py_) + 2, 1.0);
  for (std::size_t i = 1; i < inv_fact_.size(); ++i) inv_fact_[i] = inv_fact_[i - 1] / static_cast<double>(i);

  std::vector<double> shift(F.n());
  for (int d = 0; d < F.n(); ++d) shift[d] = F.freq().omega[d] * x0;
  d_.resize(static_cast<std::size_t>(Px_ + 1) * (Py_ + 1));
  StripFunction Fy = F;
  for (int j = 0; j <= Py_; ++j) {
    StripFunction Fxy = Fy;
    for (int i = 0; i <= Px_; ++i) {
      d_[i * (Py_ + 1) + j] = sample_shifted(Fxy, N, shift.data(), ys_);
      if (i < Px_) Fxy = Fxy.dx();
    }
    if (j < Py_) Fy = Fy.dy();
  }
}

double TaylorTable::eval(std::size_t p, std::size_t m, double a, double b, int dx, int dy) const {
  const std::size_t at = p * ys_.size() + m;
  double out = 0.0, ai = 1.0;
  for (int i = 0; i + dx <= Px_; ++i) {
    double row = 0.0, bj = 1.0;
    for (int j = 0; j + dy <= Py_; ++j) {
      row += d_[(i + dx) * (Py_ + 1) + j + dy][at] * bj * inv_fact_[j];
      bj *= b;
    }
    out += row * ai * inv_fact_[i];
    ai *= a;
  }
  return out;
}

double TaylorTable::increment(std::size_t p, std::size_t m, double a, double b) const {
  const std::size_t at = p * ys_.size() + m;
  double out = 0.0, ai = 1.0;
  for (int i = 0; i <= Px_; ++i) {
    double row = 0.0, bj = i == 0 ? b : 1.0;
    for (int j = i == 0 ? 1 : 0; j <= Py_; ++j) {
      row += d_[i * (Py_ + 1) + j][at] * bj * inv_fact_[j];
      bj *= b;
    }
    out += row * ai * inv_fact_[i];
    ai *= a;
  }
  return out;
}

}  // namespace qpkam::detail
