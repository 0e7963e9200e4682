#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "coexsim/error.hpp"

namespace coexsim {

/// Binary indexed tree over nonnegative integer weights.
class Fenwick {
 public:
  Fenwick() = default;
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0), value_(n, 0) {
    top_ = n == 0 ? 0 : std::bit_floor(n);
  }

  std::size_t size() const noexcept { return value_.size(); }
  std::int64_t total() const noexcept { return total_; }
  std::int64_t value(std::size_t i) const { return value_[i]; }

  void add(std::size_t i, std::int64_t delta) {
    value_[i] += delta;
    total_ += delta;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
  }
  void set(std::size_t i, std::int64_t w) { add(i, w - value_[i]); }

  /// Sum of weights with index < i.
  std::int64_t prefix(std::size_t i) const {
    std::int64_t s = 0;
    for (std::size_t k = i; k > 0; k -= k & (~k + 1)) s += tree_[k];
    return s;
  }

  /// Smallest index i with prefix(i + 1) > target, for 0 <= target < total().
  /// `offset` receives target - prefix(i), which lies in [0, value(i)).
  std::size_t find(std::int64_t target, std::int64_t& offset) const {
    if (target < 0 || target >= total_) throw RangeError("Fenwick::find: target out of range");
    std::size_t pos = 0;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    offset = target;
    return pos;
  }

  /// Sum recomputed from the stored point values.
  std::int64_t recomputed_total() const {
    std::int64_t s = 0;
    for (auto v : value_) s += v;
    return s;
  }

 private:
  std::vector<std::int64_t> tree_;
  std::vector<std::int64_t> value_;
  std::int64_t total_ = 0;
  std::size_t top_ = 0;
};

}  // namespace coexsim
