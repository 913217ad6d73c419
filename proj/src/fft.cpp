#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace qpkam::detail {

namespace {

std::mutex planner_mu;  // the FFTW planner is not thread-safe

void run(int n, int N, std::vector<cd>& data, int sign) {
  std::vector<int> dims(n, N);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mu);
    plan = fftw_plan_dft(n, dims.data(), buf, buf, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mu);
  fftw_destroy_plan(plan);
}

std::size_t grid_index(const int* k, int n, int N) {
  std::size_t g = 0;
  for (int d = 0; d < n; ++d) g = g * N + static_cast<std::size_t>(((k[d] % N) + N) % N);
  return g;
}

}  // namespace

std::size_t grid_size(int n, int N) {
  std::size_t s = 1;
  for (int d = 0; d < n; ++d) s *= static_cast<std::size_t>(N);
  return s;
}

void grid_to_coeffs(const Lattice& lat, int N, const std::vector<cd>& values, cd* out,
                    std::size_t stride) {
  if (N < 2 * lat.K() + 1) throw std::invalid_argument("grid_to_coeffs: N < 2K + 1");
  const int n = lat.n();
  std::vector<cd> data(values);
  run(n, N, data, FFTW_FORWARD);
  const double scale = 1.0 / static_cast<double>(grid_size(n, N));
  for (std::size_t idx = 0; idx < lat.size(); ++idx)
    out[idx * stride] = data[grid_index(lat.k(idx), n, N)] * scale;
}

std::vector<cd> coeffs_to_grid(const Lattice& lat, int N, const cd* coeffs, std::size_t stride) {
  if (N < 2 * lat.K() + 1) throw std::invalid_argument("coeffs_to_grid: N < 2K + 1");
  const int n = lat.n();
  std::vector<cd> data(grid_size(n, N), cd(0.0, 0.0));
  for (std::size_t idx = 0; idx < lat.size(); ++idx)
    data[grid_index(lat.k(idx), n, N)] += coeffs[idx * stride];
  run(n, N, data, FFTW_BACKWARD);
  return data;
}

}  // namespace qpkam::detail
