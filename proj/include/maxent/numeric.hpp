#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

namespace maxent::detail {

// Neumaier compensated accumulator. Long f(x)/Z(x) aggregations stay within
// the toolkit's 1e-12 tolerance budgets with this; a plain sum does not.
class KahanSum {
 public:
  void add(double x) {
    if (!std::isfinite(x)) {
      sum_ += x;
      comp_ = 0.0;
      return;
    }
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct PairHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
    return static_cast<std::size_t>(mix64(mix64(p.first) ^ p.second));
  }
};

}  // namespace maxent::detail
