#pragma once

#include <cmath>
#include <span>

namespace slowrate {

// Neumaier's variant of Kahan summation. Terms must be added in a fixed order
// for results to be reproducible; merging two accumulators is exact only up
// to one extra rounding, so callers combine partial sums in a fixed order too.
class CompensatedSum {
 public:
  constexpr CompensatedSum() = default;
  constexpr explicit CompensatedSum(double initial) : sum_(initial) {}

  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  CompensatedSum& operator+=(const CompensatedSum& other) noexcept {
    add(other.sum_);
    compensation_ += other.compensation_;
    return *this;
  }

  constexpr double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum acc;
  for (double x : xs) {
    acc.add(x);
  }
  return acc.value();
}

}  // namespace slowrate
