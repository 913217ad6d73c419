#include "qpkam/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <mutex>
#include <stdexcept>

namespace qpkam {

Lattice::Lattice(int n, int K) : n_(n), K_(K) {
  if (n < 1 || K < 0) throw std::invalid_argument("Lattice: need n >= 1, K >= 0");
  size_ = 1;
  for (int d = 0; d < n; ++d) size_ *= static_cast<std::size_t>(side());
  k_.resize(size_ * n);
  maxn_.resize(size_);
  l1_.resize(size_);
  for (std::size_t idx = 0; idx < size_; ++idx) {
    std::size_t rem = idx;
    int mx = 0, s1 = 0;
    for (int d = n - 1; d >= 0; --d) {
      int kd = static_cast<int>(rem % side()) - K;
      rem /= side();
      k_[idx * n + d] = kd;
      mx = std::max(mx, std::abs(kd));
      s1 += std::abs(kd);
    }
    maxn_[idx] = mx;
    l1_[idx] = s1;
  }
  shells_.reserve(size_ - 1);
  for (std::size_t idx = 0; idx < size_; ++idx)
    if (idx != zero()) shells_.push_back(idx);
  std::stable_sort(shells_.begin(), shells_.end(),
                   [this](std::size_t a, std::size_t b) { return maxn_[a] < maxn_[b]; });
}

std::shared_ptr<const Lattice> Lattice::get(int n, int K) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const Lattice>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, K}];
  if (!slot) slot = std::make_shared<const Lattice>(n, K);
  return slot;
}

bool Lattice::contains(const int* k) const {
  for (int d = 0; d < n_; ++d)
    if (std::abs(k[d]) > K_) return false;
  return true;
}

std::size_t Lattice::index(const int* k) const {
  if (!contains(k)) throw std::out_of_range("Lattice::index: |k| > K");
  std::size_t idx = 0;
  for (int d = 0; d < n_; ++d) idx = idx * side() + static_cast<std::size_t>(k[d] + K_);
  return idx;
}

}  // namespace qpkam
