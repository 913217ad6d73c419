#pragma once

#include <cstddef>
#include <numbers>
#include <vector>

#include "fft.hpp"
#include "qpkam/qpfourier.hpp"

namespace qpkam::detail {

// The collocation grid shifted by half a cell, so that interpolation at the
// nodes does not hide an error.
inline std::vector<double> staggered_points(int n, int N) {
  const std::size_t G = grid_size(n, N);
  std::vector<double> pts(G * n);
  for (std::size_t p = 0; p < G; ++p) {
    grid_point(n, N, p, &pts[p * n]);
    for (int d = 0; d < n; ++d) pts[p * n + d] += std::numbers::pi / N;
  }
  return pts;
}

// 2J + 3 equispaced y values on [-s, s], endpoints included.
inline std::vector<double> check_ys(double s, int J) {
  const int m = 2 * J + 3;
  std::vector<double> ys;
  for (int i = 0; i < m; ++i) ys.push_back(-s + 2.0 * s * i / (m - 1));
  return ys;
}

// Tensor product of the staggered grid with check_ys: flattened (phi, y).
inline void tensor_points(int n, int N, double s, int J, std::vector<double>& P, std::vector<double>& Y) {
  const auto pts = staggered_points(n, N);
  const auto ys = check_ys(s, J);
  const std::size_t G = pts.size() / n;
  P.clear();
  Y.clear();
  P.reserve(G * ys.size() * n);
  Y.reserve(G * ys.size());
  for (std::size_t p = 0; p < G; ++p)
    for (double y : ys) {
      P.insert(P.end(), pts.begin() + p * n, pts.begin() + (p + 1) * n);
      Y.push_back(y);
    }
}

}  // namespace qpkam::detail
