#pragma once

// Globally adaptive Gauss-Kronrod integration with an evaluation budget.
//
// The 21-point Kronrod rule and its embedded 10-point Gauss rule come from
// Boost.Math; each panel reports |K21 - G10| as its error. The panel with the
// largest error is bisected until the summed error drops below the absolute
// tolerance. Running out of budget is an AccuracyError carrying the estimate.

#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "slowrate/error.hpp"
#include "slowrate/summation.hpp"

namespace slowrate {

struct Interval {
  double lo;
  double hi;  // may be +infinity
};

struct QuadratureResult {
  double value;
  double error;
  std::size_t evaluations;
};

namespace detail {

inline constexpr std::size_t kKronrodPoints = 21;

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
};

// Heap entry; the panel with the largest error estimate is refined first.
struct QueuedPanel {
  Panel panel;
  std::size_t piece;
  friend bool operator<(const QueuedPanel& a, const QueuedPanel& b) {
    return a.panel.error < b.panel.error;
  }
};

template <class F>
Panel eval_panel(const F& f, double lo, double hi) {
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, kKronrodPoints>::integrate(f, lo, hi, 0, 0.0,
                                                                               &error);
  return {lo, hi, value, error};
}

}  // namespace detail

// Integrates f over the union of the given intervals. An interval whose upper
// end is +infinity is mapped onto [0, 1) by y = lo + s / (1 - s).
template <class F>
QuadratureResult integrate_adaptive(const F& f, std::span<const Interval> pieces, double abs_tol,
                                    std::size_t max_evaluations) {
  struct Mapped {
    double lo;
    bool infinite;
  };
  std::vector<Mapped> mapped;
  mapped.reserve(pieces.size());

  using Item = detail::QueuedPanel;
  std::priority_queue<Item> heap;

  auto integrand = [&](std::size_t piece) {
    const Mapped m = mapped[piece];
    return [&f, m](double x) {
      if (!m.infinite) {
        return f(x);
      }
      const double one_minus = 1.0 - x;
      return f(m.lo + x / one_minus) / (one_minus * one_minus);
    };
  };

  auto panel_on = [&](std::size_t piece, double lo, double hi) {
    return detail::eval_panel(integrand(piece), lo, hi);
  };

  std::size_t evaluations = 0;
  double total_error = 0.0;
  for (const auto& piece : pieces) {
    if (!(piece.hi > piece.lo)) {
      continue;
    }
    const bool infinite = std::isinf(piece.hi);
    mapped.push_back({piece.lo, infinite});
    const std::size_t k = mapped.size() - 1;
    const auto panel = infinite ? panel_on(k, 0.0, 1.0) : panel_on(k, piece.lo, piece.hi);
    evaluations += detail::kKronrodPoints;
    total_error += panel.error;
    heap.push({panel, k});
  }

  while (!heap.empty() && total_error > abs_tol) {
    if (evaluations + 2 * detail::kKronrodPoints > max_evaluations) {
      CompensatedSum partial;
      auto copy = heap;
      while (!copy.empty()) {
        partial.add(copy.top().panel.value);
        copy.pop();
      }
      std::ostringstream msg;
      msg << "quadrature budget of " << max_evaluations
          << " evaluations exhausted before reaching abs_tol = " << abs_tol
          << " (estimate " << partial.value() << ", error bound " << total_error << ")";
      throw AccuracyError(msg.str(), partial.value(), total_error);
    }
    const Item worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.panel.lo + worst.panel.hi);
    const auto left = panel_on(worst.piece, worst.panel.lo, mid);
    const auto right = panel_on(worst.piece, mid, worst.panel.hi);
    evaluations += 2 * detail::kKronrodPoints;
    total_error += left.error + right.error - worst.panel.error;
    heap.push({left, worst.piece});
    heap.push({right, worst.piece});
  }

  CompensatedSum value;
  CompensatedSum error;
  while (!heap.empty()) {
    value.add(heap.top().panel.value);
    error.add(heap.top().panel.error);
    heap.pop();
  }
  return {value.value(), error.value(), evaluations};
}

template <class F>
QuadratureResult integrate_adaptive(const F& f, Interval piece, double abs_tol,
                                    std::size_t max_evaluations) {
  return integrate_adaptive(f, std::span<const Interval>(&piece, 1), abs_tol, max_evaluations);
}

}  // namespace slowrate
