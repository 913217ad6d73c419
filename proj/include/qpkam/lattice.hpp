#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace qpkam {

// Integer vectors k in Z^n with max-norm |k| <= K, stored as the dense cube
// [-K, K]^n in row-major order. Index of -k is size() - 1 - index(k).
class Lattice {
 public:
  Lattice(int n, int K);

  // Shared immutable instance per (n, K).
  static std::shared_ptr<const Lattice> get(int n, int K);

  int n() const { return n_; }
  int K() const { return K_; }
  int side() const { return 2 * K_ + 1; }
  std::size_t size() const { return size_; }
  std::size_t zero() const { return size_ / 2; }
  std::size_t neg(std::size_t idx) const { return size_ - 1 - idx; }

  const int* k(std::size_t idx) const { return &k_[idx * n_]; }
  int max_norm(std::size_t idx) const { return maxn_[idx]; }
  int l1_norm(std::size_t idx) const { return l1_[idx]; }

  bool contains(const int* k) const;
  std::size_t index(const int* k) const;
  std::size_t index(const std::vector<int>& k) const { return index(k.data()); }

  // Indices sorted by max-norm shell, zero excluded.
  const std::vector<std::size_t>& by_shell() const { return shells_; }

 private:
  int n_, K_;
  std::size_t size_;
  std::vector<int> k_, maxn_, l1_;
  std::vector<std::size_t> shells_;
};

}  // namespace qpkam
