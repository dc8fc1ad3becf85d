#pragma once

// The kernels and statistics built on the R^2 sample:
//
//   p*_n      = n^{-1/2} sum y_i1 + (n^{-1/2} sum y_i2)^2
//   n v~_n    = n^{-1} sum_{i,j} kv(y_i, y_j)                  (= p*_n)
//   sqrt(n(n-1)) u~_n = (n(n-1))^{-1/2} sum_{i!=j} ku(y_i, y_j) (= p*_n - R_n)
//   R_n       = n^{-1} sum y_i2^2
//
// Every statistic has an O(n) "Reduced" path through three compensated row
// sums and, for the V and U statistics, an O(n^2) "KernelSum" path that
// evaluates the kernel on every pair. The quadratic path is a test oracle.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "slowrate/construction.hpp"
#include "slowrate/error.hpp"
#include "slowrate/summation.hpp"

namespace slowrate {

inline constexpr std::size_t kDefaultKernelSumCap = 4096;

enum class StatisticKind { PStar, ScaledV, ScaledU, Remainder };
enum class SumPath { KernelSum, Reduced };

inline std::string_view to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::PStar:
      return "pstar";
    case StatisticKind::ScaledV:
      return "v";
    case StatisticKind::ScaledU:
      return "u";
    case StatisticKind::Remainder:
      return "remainder";
  }
  return "?";
}

inline StatisticKind parse_statistic(std::string_view text) {
  if (text == "pstar") return StatisticKind::PStar;
  if (text == "v" || text == "V" || text == "ScaledV") return StatisticKind::ScaledV;
  if (text == "u" || text == "U" || text == "ScaledU") return StatisticKind::ScaledU;
  if (text == "remainder" || text == "R") return StatisticKind::Remainder;
  throw ParameterError("unknown statistic '" + std::string(text) +
                       "' (expected pstar, v, u or remainder)");
}

struct StatisticValue {
  StatisticKind kind;
  double value;
  std::int64_t n;
};

using Point = Row;

inline double kernel_v(Point a, Point b, std::int64_t n) {
  if (n < 1) {
    throw ParameterError("kernel_v: constraint n >= 1 violated");
  }
  const double half_inv_root = 0.5 / std::sqrt(static_cast<double>(n));
  return a.y1 * half_inv_root + b.y1 * half_inv_root + a.y2 * b.y2;
}

inline double kernel_u(Point a, Point b, std::int64_t n) {
  if (n < 2) {
    throw ParameterError("kernel_u: constraint n >= 2 violated");
  }
  const double root_nm1 = std::sqrt(static_cast<double>(n - 1));
  const double half_inv_root = 0.5 / root_nm1;
  const double coupling = root_nm1 / std::sqrt(static_cast<double>(n));
  return a.y1 * half_inv_root + b.y1 * half_inv_root + coupling * a.y2 * b.y2;
}

struct KernelV {
  double operator()(Point a, Point b, std::int64_t n) const { return kernel_v(a, b, n); }
};

struct KernelU {
  double operator()(Point a, Point b, std::int64_t n) const { return kernel_u(a, b, n); }
};

// Compensated sums of y1, y2 and y2^2 in ascending row order.
struct RowSums {
  double sum_y1 = 0.0;
  double sum_y2 = 0.0;
  double sum_y2_sq = 0.0;
  std::int64_t n = 0;

  static RowSums of(std::span<const Row> rows) noexcept {
    CompensatedSum s1;
    CompensatedSum s2;
    CompensatedSum s22;
    for (const auto& row : rows) {
      s1.add(row.y1);
      s2.add(row.y2);
      s22.add(row.y2 * row.y2);
    }
    return {s1.value(), s2.value(), s22.value(), static_cast<std::int64_t>(rows.size())};
  }

  double pstar() const noexcept {
    const double root_n = std::sqrt(static_cast<double>(n));
    const double quad = sum_y2 / root_n;
    return sum_y1 / root_n + quad * quad;
  }
  double remainder() const noexcept { return sum_y2_sq / static_cast<double>(n); }
  double scaled_u() const noexcept { return pstar() - remainder(); }
};

namespace detail {

inline std::int64_t checked_size(std::span<const Row> rows, std::int64_t min_n, const char* what) {
  const auto n = static_cast<std::int64_t>(rows.size());
  if (n < min_n) {
    throw ParameterError(std::string(what) + ": constraint n >= " + std::to_string(min_n) +
                         " violated");
  }
  return n;
}

inline void check_kernel_cap(std::int64_t n, std::size_t cap) {
  if (static_cast<std::size_t>(n) > cap) {
    throw BudgetError("kernel-sum path limited to n <= " + std::to_string(cap) + " (got n = " +
                      std::to_string(n) + ")");
  }
}

}  // namespace detail

inline StatisticValue eval_pstar(std::span<const Row> rows) {
  const auto n = detail::checked_size(rows, 1, "eval_pstar");
  return {StatisticKind::PStar, RowSums::of(rows).pstar(), n};
}

inline StatisticValue eval_remainder(std::span<const Row> rows) {
  const auto n = detail::checked_size(rows, 1, "eval_remainder");
  return {StatisticKind::Remainder, RowSums::of(rows).remainder(), n};
}

// n^{-1} sum over all ordered pairs (i, j), diagonal included.
template <class Kernel = KernelV>
double v_kernel_sum(std::span<const Row> rows, Kernel kernel = {},
                    std::size_t cap = kDefaultKernelSumCap) {
  const auto n = detail::checked_size(rows, 1, "v_kernel_sum");
  detail::check_kernel_cap(n, cap);
  CompensatedSum acc;
  for (const auto& a : rows) {
    for (const auto& b : rows) {
      acc.add(kernel(a, b, n));
    }
  }
  return acc.value() / static_cast<double>(n);
}

// (n(n-1))^{-1/2} sum over ordered pairs i != j.
template <class Kernel = KernelU>
double u_kernel_sum(std::span<const Row> rows, Kernel kernel = {},
                    std::size_t cap = kDefaultKernelSumCap) {
  const auto n = detail::checked_size(rows, 2, "u_kernel_sum");
  detail::check_kernel_cap(n, cap);
  CompensatedSum acc;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (i != j) {
        acc.add(kernel(rows[i], rows[j], n));
      }
    }
  }
  const double dn = static_cast<double>(n);
  return acc.value() / std::sqrt(dn * (dn - 1.0));
}

inline StatisticValue eval_v_scaled(std::span<const Row> rows, SumPath path,
                                    std::size_t cap = kDefaultKernelSumCap) {
  const auto n = detail::checked_size(rows, 1, "eval_v_scaled");
  const double value =
      path == SumPath::KernelSum ? v_kernel_sum(rows, KernelV{}, cap) : RowSums::of(rows).pstar();
  return {StatisticKind::ScaledV, value, n};
}

inline StatisticValue eval_u_scaled(std::span<const Row> rows, SumPath path,
                                    std::size_t cap = kDefaultKernelSumCap) {
  const auto n = detail::checked_size(rows, 2, "eval_u_scaled");
  const double value = path == SumPath::KernelSum ? u_kernel_sum(rows, KernelU{}, cap)
                                                  : RowSums::of(rows).scaled_u();
  return {StatisticKind::ScaledU, value, n};
}

inline StatisticValue eval_pstar(const SampleMatrix& s) { return eval_pstar(s.rows()); }
inline StatisticValue eval_remainder(const SampleMatrix& s) { return eval_remainder(s.rows()); }
inline StatisticValue eval_v_scaled(const SampleMatrix& s, SumPath path) {
  return eval_v_scaled(s.rows(), path);
}
inline StatisticValue eval_u_scaled(const SampleMatrix& s, SumPath path) {
  return eval_u_scaled(s.rows(), path);
}

// Reduced-path value of any statistic kind from precomputed row sums.
inline double statistic_from_sums(const RowSums& sums, StatisticKind kind) {
  switch (kind) {
    case StatisticKind::PStar:
    case StatisticKind::ScaledV:
      return sums.pstar();
    case StatisticKind::ScaledU:
      return sums.scaled_u();
    case StatisticKind::Remainder:
      return sums.remainder();
  }
  return 0.0;
}

}  // namespace slowrate
