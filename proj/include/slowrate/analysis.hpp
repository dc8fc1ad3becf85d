#pragma once

// Inequality toolkit and the rate experiment.
//
// The bound calculators evaluate the right-hand sides of the variance
// domination inequality, the Carbery-Wright anti-concentration inequality and
// their corollary. None of the absolute constants in these inequalities is
// known, so each calculator takes the constant as an argument (default 1,
// which is not a normative value).

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slowrate/construction.hpp"
#include "slowrate/error.hpp"
#include "slowrate/montecarlo.hpp"
#include "slowrate/refdist.hpp"
#include "slowrate/statistics.hpp"

namespace slowrate {

// ---------------------------------------------------------------------------
// Variance domination

struct VarianceDominationInput {
  double var_X;
  double var_Y;
  double epsilon;
  double interval_prob_left;   // P(X' in (t - eps, t])
  double interval_prob_right;  // P(X' in (t, t + eps])
};

// max{P(X' in (t-eps, t]), P(X' in (t, t+eps])} + Var[Y'] / eps^2
inline double vd_bound(const VarianceDominationInput& in) {
  if (!(in.epsilon > 0.0)) {
    throw ParameterError("vd_bound: constraint epsilon > 0 violated");
  }
  if (in.var_Y < 0.0) {
    throw ParameterError("vd_bound: constraint var_Y >= 0 violated");
  }
  for (double p : {in.interval_prob_left, in.interval_prob_right}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ParameterError("vd_bound: interval probabilities must lie in [0, 1]");
    }
  }
  return std::max(in.interval_prob_left, in.interval_prob_right) +
         in.var_Y / (in.epsilon * in.epsilon);
}

// Geometric grid 2^-20, 2^-19, ..., 2^4.
inline std::vector<double> default_epsilon_grid() {
  std::vector<double> grid;
  for (int k = -20; k <= 4; ++k) {
    grid.push_back(std::ldexp(1.0, k));
  }
  return grid;
}

struct VdInfimum {
  double bound;
  double epsilon;
};

// Minimises vd_bound over an epsilon grid; interval_probs(eps) returns the
// (left, right) interval probabilities of X' around the fixed t.
inline VdInfimum vd_bound_infimum(double var_X, double var_Y,
                                  const std::function<std::pair<double, double>(double)>& interval_probs,
                                  std::span<const double> epsilon_grid) {
  if (epsilon_grid.empty()) {
    throw ParameterError("vd_bound_infimum: empty epsilon grid");
  }
  VdInfimum best{std::numeric_limits<double>::infinity(), 0.0};
  for (double eps : epsilon_grid) {
    const auto [left, right] = interval_probs(eps);
    const double b = vd_bound({var_X, var_Y, eps, left, right});
    if (b < best.bound) {
      best = {b, eps};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Anti-concentration

// C m eps^{1/m} (E|q_m|^2)^{-1/(2m)}
inline double carbery_wright_bound(int m, double epsilon, double second_moment,
                                   double constant_C = 1.0) {
  if (m < 1 || !(epsilon > 0.0) || !(second_moment > 0.0) || !(constant_C > 0.0)) {
    throw ParameterError("carbery_wright_bound: all inputs must be positive");
  }
  const double dm = static_cast<double>(m);
  return constant_C * dm * std::pow(epsilon, 1.0 / dm) * std::pow(second_moment, -1.0 / (2.0 * dm));
}

// C m (Var[Y'] / Var[X'])^{1/(2m+1)} + 2 * gap
inline double cor4_bound(int m, double var_ratio, double universality_gap,
                         double constant_C = 1.0) {
  if (m < 1 || !(var_ratio > 0.0) || !(constant_C > 0.0)) {
    throw ParameterError("cor4_bound: m, var_ratio and C must be positive");
  }
  if (universality_gap < 0.0) {
    throw ParameterError("cor4_bound: constraint universality_gap >= 0 violated");
  }
  const double dm = static_cast<double>(m);
  return constant_C * dm * std::pow(var_ratio, 1.0 / (2.0 * dm + 1.0)) + 2.0 * universality_gap;
}

// ---------------------------------------------------------------------------
// Sandwich inequality
//
//   P(a <= X'+Y' <= b) <= P(a - eps <= X' <= b + eps) + P(|Y'| >= eps)
//   P(a <= X'+Y' <= b) >= P(a + eps <= X' <= b - eps) - P(|Y'| >= eps)
//
// checked on empirical CDFs. Each interval probability is a difference of two
// CDF values, so it is off by at most twice the DKW radius of its sample.

struct SandwichResult {
  bool upper_holds;
  bool lower_holds;
  double prob_sum;     // empirical P(a <= X'+Y' <= b)
  double prob_upper;   // empirical P(a - eps <= X' <= b + eps)
  double prob_lower;   // empirical P(a + eps <= X' <= b - eps)
  double slack;
};

inline SandwichResult sandwich_check(const EmpiricalCdf& ecdf_XY, const EmpiricalCdf& ecdf_X,
                                     double a, double b, double epsilon, double tail_prob_Y,
                                     double delta = kDefaultConfidenceDelta) {
  if (a > b) {
    throw ParameterError("sandwich_check: constraint a <= b violated");
  }
  if (!(epsilon > 0.0)) {
    throw ParameterError("sandwich_check: constraint epsilon > 0 violated");
  }
  if (!(tail_prob_Y >= 0.0)) {
    throw ParameterError("sandwich_check: tail probability must be nonnegative");
  }
  SandwichResult out{};
  out.prob_sum = ecdf_XY.probability_between(a, b);
  out.prob_upper = ecdf_X.probability_between(a - epsilon, b + epsilon);
  out.prob_lower = ecdf_X.probability_between(a + epsilon, b - epsilon);
  out.slack = 2.0 * (dkw_radius(ecdf_XY.size(), delta) + dkw_radius(ecdf_X.size(), delta));
  out.upper_holds = out.prob_sum <= out.prob_upper + tail_prob_Y + out.slack;
  out.lower_holds = out.prob_sum >= out.prob_lower - tail_prob_Y - out.slack;
  return out;
}

// ---------------------------------------------------------------------------
// Rate fitting

struct RatePoint {
  std::int64_t n;
  double d_hat;
  double dkw_radius;
};

enum class FitWeighting { Unweighted, InverseDkwSquared };

struct RateFit {
  std::vector<RatePoint> points;
  double exponent;
  double intercept;
  double r_squared;
};

// Least squares of ln d_hat on ln n.
inline RateFit fit_rate(std::span<const RatePoint> points,
                        FitWeighting weighting = FitWeighting::Unweighted) {
  if (points.size() < 2) {
    throw ParameterError("fit_rate: need at least two points");
  }
  bool distinct = false;
  for (const auto& p : points) {
    if (!(p.d_hat > 0.0)) {
      throw ParameterError("fit_rate: d_hat must be positive (MC noise floor reached?)");
    }
    if (p.n < 1) {
      throw ParameterError("fit_rate: n must be positive");
    }
    distinct = distinct || p.n != points.front().n;
  }
  if (!distinct) {
    throw ParameterError("fit_rate: need at least two distinct n");
  }

  CompensatedSum sw, sx, sy;
  std::vector<double> w(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (weighting == FitWeighting::InverseDkwSquared) {
      if (!(p.dkw_radius > 0.0)) {
        throw ParameterError("fit_rate: weighted fit needs positive dkw radii");
      }
      w[i] = 1.0 / (p.dkw_radius * p.dkw_radius);
    } else {
      w[i] = 1.0;
    }
    sw.add(w[i]);
    sx.add(w[i] * std::log(static_cast<double>(p.n)));
    sy.add(w[i] * std::log(p.d_hat));
  }
  const double x_bar = sx.value() / sw.value();
  const double y_bar = sy.value() / sw.value();
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double dx = std::log(static_cast<double>(points[i].n)) - x_bar;
    const double dy = std::log(points[i].d_hat) - y_bar;
    sxx.add(w[i] * dx * dx);
    sxy.add(w[i] * dx * dy);
    syy.add(w[i] * dy * dy);
  }
  RateFit fit;
  fit.points.assign(points.begin(), points.end());
  fit.exponent = sxy.value() / sxx.value();
  fit.intercept = y_bar - fit.exponent * x_bar;
  const double ss_tot = syy.value();
  const double ss_res = ss_tot - fit.exponent * sxy.value();
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

inline double theoretical_exponent(double nu) { return -(nu - 2.0) / (4.0 * nu); }

// ---------------------------------------------------------------------------
// Rate experiment

enum class PointStatus { Ok, ParameterInvalid, BudgetExceeded, AccuracyFailure };

inline std::string_view to_string(PointStatus s) {
  switch (s) {
    case PointStatus::Ok:
      return "ok";
    case PointStatus::ParameterInvalid:
      return "parameter_error";
    case PointStatus::BudgetExceeded:
      return "budget_error";
    case PointStatus::AccuracyFailure:
      return "accuracy_error";
  }
  return "?";
}

struct PipelineOptions {
  LawTag v_law = LawTag::HeavyTailedY;
  LawTag u_law = LawTag::HeavyTailedY;
  double confidence_delta = kDefaultConfidenceDelta;
  double quad_tol = ReferenceCdf::kDefaultAbsTol;
  std::size_t quad_nodes = ReferenceCdf::kDefaultQuadNodes;
  MonteCarloOptions monte_carlo{};
  FitWeighting weighting = FitWeighting::Unweighted;
  bool exclude_noise_floor = true;
  // When set, simulation is skipped and d_hat = n^{exponent} exactly.
  std::optional<double> synthetic_exponent;
};

struct ReportRow {
  StatisticKind kind;  // ScaledV or ScaledU
  LawTag law;
  std::int64_t n;
  double sigma_n;
  double d_hat;
  double dkw_radius;
  std::int64_t R;
  std::uint64_t seed;
  bool noise_floor;  // d_hat < 2 * dkw_radius
  PointStatus status;
  std::string message;
};

struct ExperimentReport {
  double nu;
  double sigma0;
  std::int64_t R;
  std::uint64_t master_seed;
  double confidence_delta;
  double theoretical_exponent;
  std::vector<ReportRow> rows;  // grid order, V row then U row per n
  std::optional<RateFit> v_fit;
  std::optional<RateFit> u_fit;
  std::string v_fit_note;
  std::string u_fit_note;

  bool all_ok() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const ReportRow& r) { return r.status == PointStatus::Ok; });
  }
};

// Seed of grid point n; depends only on (master_seed, n).
inline std::uint64_t grid_point_seed(std::uint64_t master_seed, std::int64_t n) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(n));
}

namespace detail {

inline PointStatus classify(const std::exception& e) {
  if (dynamic_cast<const BudgetError*>(&e)) return PointStatus::BudgetExceeded;
  if (dynamic_cast<const AccuracyError*>(&e)) return PointStatus::AccuracyFailure;
  return PointStatus::ParameterInvalid;
}

inline void fit_rows(const std::vector<ReportRow>& rows, StatisticKind kind,
                     const PipelineOptions& options, std::optional<RateFit>& fit,
                     std::string& note) {
  std::vector<RatePoint> points;
  for (const auto& row : rows) {
    if (row.kind != kind || row.status != PointStatus::Ok) continue;
    if (options.exclude_noise_floor && row.noise_floor) continue;
    points.push_back({row.n, row.d_hat, row.dkw_radius});
  }
  try {
    fit = fit_rate(points, options.weighting);
  } catch (const ParameterError& e) {
    note = e.what();
  }
}

}  // namespace detail

inline ExperimentReport theorem1_pipeline(const ConstructionParams& params_base,
                                          std::span<const std::int64_t> n_grid, std::int64_t R,
                                          std::uint64_t master_seed,
                                          const PipelineOptions& options = {}) {
  if (n_grid.empty()) {
    throw ParameterError("theorem1_pipeline: n grid is empty");
  }
  if (R < 2) {
    throw ParameterError("theorem1_pipeline: constraint R >= 2 violated");
  }
  if (!(options.confidence_delta > 0.0 && options.confidence_delta < 1.0)) {
    throw ParameterError("theorem1_pipeline: constraint 0 < confidence_delta < 1 violated");
  }
  ExperimentReport report{};
  report.nu = params_base.nu();
  report.sigma0 = params_base.sigma0();
  report.R = R;
  report.master_seed = master_seed;
  report.confidence_delta = options.confidence_delta;
  report.theoretical_exponent = theoretical_exponent(params_base.nu());

  const double radius = dkw_radius(R, options.confidence_delta);
  for (const std::int64_t n : n_grid) {
    const auto params = params_base.with_n(n);
    const double sigma_n = sigma_schedule(params);
    const std::uint64_t seed = grid_point_seed(master_seed, n);

    ReportRow v_row{StatisticKind::ScaledV, options.v_law, n, sigma_n, 0.0, radius, R, seed, false,
                    PointStatus::Ok, {}};
    ReportRow u_row{StatisticKind::ScaledU, options.u_law, n, sigma_n, 0.0, radius, R, seed, false,
                    PointStatus::Ok, {}};

    auto measure = [&](ReportRow& row, const std::vector<ReplicateValues>& values) {
      const ReferenceCdf ref{sigma_n, row.kind == StatisticKind::ScaledU, options.quad_nodes,
                             options.quad_tol};
      const auto ecdf = to_ecdf(values, row.kind, {n, row.kind, row.law, seed});
      row.d_hat = kolmogorov_distance(ecdf, ref, options.confidence_delta,
                                      options.monte_carlo.threads)
                      .d_hat;
    };

    auto fail = [](ReportRow& row, const Error& e) {
      row.status = detail::classify(e);
      row.message = e.what();
      row.d_hat = std::numeric_limits<double>::quiet_NaN();
    };

    if (options.synthetic_exponent) {
      const double d = std::pow(static_cast<double>(n), *options.synthetic_exponent);
      v_row.d_hat = d;
      u_row.d_hat = d;
    } else {
      // Rows under the same law share one simulation, so their values are paired.
      std::optional<std::vector<ReplicateValues>> shared;
      for (ReportRow* row : {&v_row, &u_row}) {
        try {
          if (!shared || row->law != options.v_law) {
            shared = simulate(params, row->law, R, seed, options.monte_carlo);
          }
          measure(*row, *shared);
        } catch (const Error& e) {
          fail(*row, e);
        }
      }
    }
    for (ReportRow* row : {&v_row, &u_row}) {
      row->noise_floor = row->status == PointStatus::Ok && row->d_hat < 2.0 * row->dkw_radius;
    }
    report.rows.push_back(std::move(v_row));
    report.rows.push_back(std::move(u_row));
  }

  detail::fit_rows(report.rows, StatisticKind::ScaledV, options, report.v_fit, report.v_fit_note);
  detail::fit_rows(report.rows, StatisticKind::ScaledU, options, report.u_fit, report.u_fit_note);
  return report;
}

}  // namespace slowrate
