#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qpkam/lattice.hpp"

namespace qpkam::detail {

using cd = std::complex<double>;

// Coefficients c_k, |k| <= K, of the trigonometric interpolant through
// values on the N^n grid theta = 2 pi m / N. Requires N >= 2K + 1.
void grid_to_coeffs(const Lattice& lat, int N, const std::vector<cd>& values, cd* out,
                    std::size_t stride = 1);

// Values of sum c_k e^{i<k,theta>} on the N^n grid.
std::vector<cd> coeffs_to_grid(const Lattice& lat, int N, const cd* coeffs, std::size_t stride = 1);

std::size_t grid_size(int n, int N);

}  // namespace qpkam::detail
