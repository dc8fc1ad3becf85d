#pragma once

// Experiment configuration and the command implementations behind the
// `slowrate` executable. Commands write to caller-provided streams so they can
// be exercised without a process boundary.
//
// Config files are key=value lines; '#' starts a comment and lists are
// comma separated:
//
//   nu = 3
//   sigma0 = 1
//   n_grid = 256, 1024, 4096
//   replicates = 200000
//   master_seed = 12345

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "slowrate/analysis.hpp"
#include "slowrate/construction.hpp"
#include "slowrate/error.hpp"
#include "slowrate/montecarlo.hpp"
#include "slowrate/refdist.hpp"
#include "slowrate/statistics.hpp"

namespace slowrate::cli {

enum ExitCode : int {
  kSuccess = 0,
  kCheckFailed = 1,
  kValidation = 2,
  kBudget = 3,
  kAccuracy = 4,
  kIo = 5,
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BudgetError*>(&e)) return kBudget;
  if (dynamic_cast<const AccuracyError*>(&e)) return kAccuracy;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  return kValidation;
}

inline int exit_code_for(PointStatus status) {
  switch (status) {
    case PointStatus::Ok:
      return kSuccess;
    case PointStatus::BudgetExceeded:
      return kBudget;
    case PointStatus::AccuracyFailure:
      return kAccuracy;
    case PointStatus::ParameterInvalid:
      return kValidation;
  }
  return kValidation;
}

struct ExperimentConfig {
  double nu = 3.0;
  double sigma0 = 1.0;
  std::vector<std::int64_t> n_grid{256, 1024, 4096};
  std::int64_t replicates = 10000;
  std::uint64_t master_seed = 20240611;
  double confidence_delta = kDefaultConfidenceDelta;
  double quad_tol = ReferenceCdf::kDefaultAbsTol;
  std::size_t quad_nodes = ReferenceCdf::kDefaultQuadNodes;
  std::int64_t max_replicates = MonteCarloOptions{}.max_replicates;
  double max_work = MonteCarloOptions{}.max_work;
  std::string output_path;

  ConstructionParams params(std::int64_t n) const { return {nu, sigma0, n}; }
  ConstructionParams base_params() const { return params(n_grid.at(0)); }
};

// Shortest decimal that reads back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, result.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
    throw ParameterError("config: cannot parse '" + std::string(text) + "' for key '" +
                         std::string(key) + "'");
  }
  return value;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ParameterError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = detail::trim(view.substr(0, eq));
    const auto value = detail::trim(view.substr(eq + 1));
    if (key == "nu") {
      config.nu = detail::parse_number<double>(key, value);
    } else if (key == "sigma0") {
      config.sigma0 = detail::parse_number<double>(key, value);
    } else if (key == "n_grid") {
      config.n_grid.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = detail::trim(rest.substr(0, comma));
        if (!item.empty()) {
          config.n_grid.push_back(detail::parse_number<std::int64_t>(key, item));
        }
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
    } else if (key == "replicates") {
      config.replicates = detail::parse_number<std::int64_t>(key, value);
    } else if (key == "master_seed") {
      config.master_seed = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "confidence_delta") {
      config.confidence_delta = detail::parse_number<double>(key, value);
    } else if (key == "quad_tol") {
      config.quad_tol = detail::parse_number<double>(key, value);
    } else if (key == "quad_nodes") {
      config.quad_nodes = detail::parse_number<std::size_t>(key, value);
    } else if (key == "max_replicates") {
      config.max_replicates = detail::parse_number<std::int64_t>(key, value);
    } else if (key == "max_work") {
      config.max_work = detail::parse_number<double>(key, value);
    } else if (key == "output_path") {
      config.output_path = std::string(value);
    } else {
      throw ParameterError("config line " + std::to_string(line_no) + ": unknown key '" +
                           std::string(key) + "'");
    }
  }
  return config;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file '" + path + "'");
  }
  return parse_config(in);
}

// Throws ParameterError naming the first violated constraint.
inline void validate(const ExperimentConfig& config) {
  if (config.n_grid.empty()) {
    throw ParameterError("config: n_grid is empty");
  }
  for (const auto n : config.n_grid) {
    (void)config.params(n);
  }
  if (config.replicates < 2) {
    throw ParameterError("config: constraint replicates >= 2 violated (got " +
                         std::to_string(config.replicates) + ")");
  }
  if (!(config.confidence_delta > 0.0 && config.confidence_delta < 1.0)) {
    throw ParameterError("config: constraint 0 < confidence_delta < 1 violated");
  }
  if (!(config.quad_tol > 0.0)) {
    throw ParameterError("config: constraint quad_tol > 0 violated");
  }
  if (config.quad_nodes == 0) {
    throw ParameterError("config: constraint quad_nodes > 0 violated");
  }
}

inline MonteCarloOptions monte_carlo_options(const ExperimentConfig& config, unsigned threads) {
  MonteCarloOptions options;
  options.threads = threads;
  options.max_replicates = config.max_replicates;
  options.max_work = config.max_work;
  return options;
}

// ---------------------------------------------------------------------------
// sample

// CSV with header y1,y2 and 17 significant digits per value.
inline void cmd_sample(const ExperimentConfig& config, std::int64_t n, std::int64_t count,
                       LawTag law, std::ostream& out) {
  const auto s = sample(config.params(n), count, law, config.master_seed);
  out << "y1,y2\n";
  char buf[64];
  for (const auto& row : s.rows()) {
    std::snprintf(buf, sizeof(buf), "%.17g,", row.y1);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%.17g\n", row.y2);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// distance

struct DistanceRow {
  std::int64_t n;
  double sigma_n;
  DistanceEstimate estimate;
  PointStatus status;
  std::string message;
};

// One Kolmogorov distance per grid point: the chosen statistic under the
// chosen law against sigma_n xi + chi^2_1, centred for the U statistic.
inline std::vector<DistanceRow> run_distance(const ExperimentConfig& config, StatisticKind kind,
                                             LawTag law, unsigned threads) {
  validate(config);
  if (kind == StatisticKind::Remainder) {
    throw ParameterError("distance: the remainder has no reference law");
  }
  std::vector<DistanceRow> rows;
  for (const auto n : config.n_grid) {
    const auto params = config.params(n);
    const double sigma_n = sigma_schedule(params);
    const auto seed = grid_point_seed(config.master_seed, n);
    DistanceRow row{n, sigma_n, {}, PointStatus::Ok, {}};
    row.estimate = {std::numeric_limits<double>::quiet_NaN(),
                    dkw_radius(config.replicates, config.confidence_delta),
                    config.replicates,
                    n,
                    kind,
                    law,
                    seed};
    try {
      const auto ecdf =
          replicate(params, kind, law, config.replicates, seed, monte_carlo_options(config, threads));
      const ReferenceCdf ref{sigma_n, kind == StatisticKind::ScaledU, config.quad_nodes,
                             config.quad_tol};
      row.estimate = kolmogorov_distance(ecdf, ref, config.confidence_delta, threads);
    } catch (const Error& e) {
      row.status = slowrate::detail::classify(e);
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_distance_csv(const std::vector<DistanceRow>& rows, std::ostream& out) {
  out << "n,sigma_n,d_hat,dkw_radius,R,seed\n";
  for (const auto& row : rows) {
    out << row.n << ',' << format_double(row.sigma_n) << ',' << format_double(row.estimate.d_hat)
        << ',' << format_double(row.estimate.dkw_radius) << ',' << row.estimate.R << ','
        << row.estimate.seed << '\n';
  }
}

// Returns the exit code: the category of the first failed row, else success.
inline int cmd_distance(const ExperimentConfig& config, StatisticKind kind, LawTag law,
                        unsigned threads, std::ostream& out, std::ostream& diag) {
  const auto rows = run_distance(config, kind, law, threads);
  write_distance_csv(rows, out);
  int code = kSuccess;
  for (const auto& row : rows) {
    if (row.status != PointStatus::Ok) {
      diag << "n=" << row.n << ": " << to_string(row.status) << ": " << row.message << '\n';
      if (code == kSuccess) code = exit_code_for(row.status);
    }
  }
  return code;
}

// ---------------------------------------------------------------------------
// rate

inline ExperimentReport run_rate(const ExperimentConfig& config, unsigned threads,
                                 bool synthetic = false) {
  validate(config);
  PipelineOptions options;
  options.confidence_delta = config.confidence_delta;
  options.quad_tol = config.quad_tol;
  options.quad_nodes = config.quad_nodes;
  options.monte_carlo = monte_carlo_options(config, threads);
  if (synthetic) {
    options.synthetic_exponent = theoretical_exponent(config.nu);
  }
  return theorem1_pipeline(config.base_params(), config.n_grid, config.replicates,
                           config.master_seed, options);
}

inline void write_rate_csv(const ExperimentReport& report, std::ostream& out) {
  out << "statistic,law,n,sigma_n,d_hat,dkw_radius,R,seed,noise_floor,status\n";
  for (const auto& row : report.rows) {
    out << to_string(row.kind) << ',' << to_string(row.law) << ',' << row.n << ','
        << format_double(row.sigma_n) << ',' << format_double(row.d_hat) << ','
        << format_double(row.dkw_radius) << ',' << row.R << ',' << row.seed << ','
        << (row.noise_floor ? 1 : 0) << ',' << to_string(row.status) << '\n';
  }
}

inline nlohmann::ordered_json fit_json(const std::optional<RateFit>& fit, const std::string& note) {
  nlohmann::ordered_json j;
  if (!fit) {
    j["status"] = "unavailable";
    j["reason"] = note;
    return j;
  }
  j["status"] = "ok";
  j["exponent"] = fit->exponent;
  j["intercept"] = fit->intercept;
  j["r_squared"] = fit->r_squared;
  auto ns = nlohmann::ordered_json::array();
  for (const auto& p : fit->points) ns.push_back(p.n);
  j["n_used"] = ns;
  return j;
}

inline nlohmann::ordered_json summary_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["nu"] = report.nu;
  j["sigma0"] = report.sigma0;
  j["R"] = report.R;
  j["master_seed"] = report.master_seed;
  j["confidence_delta"] = report.confidence_delta;
  j["theoretical_exponent"] = report.theoretical_exponent;
  j["v_fit"] = fit_json(report.v_fit, report.v_fit_note);
  j["u_fit"] = fit_json(report.u_fit, report.u_fit_note);
  auto flagged = nlohmann::ordered_json::array();
  auto failed = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json entry;
    entry["statistic"] = std::string(to_string(row.kind));
    entry["n"] = row.n;
    if (row.noise_floor) {
      flagged.push_back(entry);
    }
    if (row.status != PointStatus::Ok) {
      entry["status"] = std::string(to_string(row.status));
      entry["message"] = row.message;
      failed.push_back(entry);
    }
  }
  j["noise_floor_points"] = flagged;
  j["failed_points"] = failed;
  return j;
}

inline int cmd_rate(const ExperimentConfig& config, unsigned threads, bool synthetic,
                    std::ostream& csv, std::ostream& summary) {
  const auto report = run_rate(config, threads, synthetic);
  write_rate_csv(report, csv);
  summary << summary_json(report).dump(2) << '\n';
  for (const auto& row : report.rows) {
    if (row.status != PointStatus::Ok) return exit_code_for(row.status);
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------
// verify

enum class Fault { None, KernelSign };

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

struct VerifyOutcome {
  std::vector<CheckResult> checks;
  int exit_code = kSuccess;
};

namespace detail {

// kv with the sign of the quadratic coupling flipped; used to show that the
// identity checks catch a broken kernel.
struct FlippedKernelV {
  double operator()(Point a, Point b, std::int64_t n) const {
    return kernel_v(a, b, n) - 2.0 * a.y2 * b.y2;
  }
};
struct FlippedKernelU {
  double operator()(Point a, Point b, std::int64_t n) const {
    const double coupling =
        std::sqrt(static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
    return kernel_u(a, b, n) - 2.0 * coupling * a.y2 * b.y2;
  }
};

template <class KV, class KU>
std::pair<double, double> identity_gaps(const ExperimentConfig& config) {
  double v_gap = 0.0;
  double u_gap = 0.0;
  const std::int64_t sizes[] = {2, 3, 17, 256};
  std::uint64_t k = 0;
  for (const auto n : sizes) {
    for (const auto law : {LawTag::HeavyTailedY, LawTag::GaussianZ}) {
      // sigma_n of the first grid point keeps the three-point law valid.
      const auto s = sample(config.base_params(), n, law, derive_seed(config.master_seed, ++k));
      const double p = eval_pstar(s).value;
      const double scale = 1.0 + std::abs(p);
      v_gap = std::max(v_gap, std::abs(p - v_kernel_sum(s.rows(), KV{})) / scale);
      const double u = u_kernel_sum(s.rows(), KU{});
      u_gap = std::max(u_gap, std::abs(p - (u + eval_remainder(s).value)) / scale);
    }
  }
  return {v_gap, u_gap};
}

}  // namespace detail

inline VerifyOutcome run_verify(const ExperimentConfig& config, Fault fault, unsigned threads) {
  validate(config);
  VerifyOutcome outcome;
  auto record = [&](std::string name, bool passed, std::string text) {
    outcome.checks.push_back({std::move(name), passed, std::move(text)});
  };

  // Algebraic identities.
  const auto [v_gap, u_gap] =
      fault == Fault::KernelSign
          ? detail::identity_gaps<detail::FlippedKernelV, detail::FlippedKernelU>(config)
          : detail::identity_gaps<KernelV, KernelU>(config);
  record("identity.v_rewrite", v_gap <= 1e-9, "max_rel_gap=" + format_double(v_gap));
  record("identity.u_decomposition", u_gap <= 1e-9, "max_rel_gap=" + format_double(u_gap));

  // Three-point law moments at every grid point.
  {
    double worst = 0.0;
    for (const auto n : config.n_grid) {
      const auto law = three_point_law(config.nu, sigma_schedule(config.params(n)));
      const double target = std::pow(6.0, -config.nu / 2.0) * (2.0 + std::pow(2.0, config.nu));
      worst = std::max({worst, std::abs(law.mean()) / law.sigma,
                        std::abs(law.variance() / (law.sigma * law.sigma) - 1.0),
                        std::abs(law.abs_moment(config.nu) / target - 1.0)});
    }
    record("law.moments", worst <= 1e-12, "max_rel_gap=" + format_double(worst));
  }

  // Integral bounds over tau in [-100, 100].
  {
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(-100.0 + 0.5 * i);
    const ProofIntegralOptions options{config.quad_tol, config.quad_nodes * 10};
    const auto maxima = verify_I1_I2(grid, options);
    const double i2_zero = integral_I2(0.0, options);
    record("integrals.I1_bound", maxima.max_I1 <= kI1Bound,
           "max_I1=" + format_double(maxima.max_I1) + " bound=" + format_double(kI1Bound));
    record("integrals.I2_bound", maxima.max_I2 <= kI2Bound,
           "max_I2=" + format_double(maxima.max_I2) + " bound=" + format_double(kI2Bound));
    record("integrals.I2_at_zero", std::abs(i2_zero - 2.0 / 7.0) <= 1e-6,
           "I2(0)=" + format_double(i2_zero) + " expected=" + format_double(2.0 / 7.0));
  }

  // Reference CDF: shift identity, monotonicity and the sigma -> 0 limit.
  {
    const double sigma_n = sigma_schedule(config.base_params());
    const ReferenceCdf plain{sigma_n, false, config.quad_nodes, config.quad_tol};
    const ReferenceCdf centred{sigma_n, true, config.quad_nodes, config.quad_tol};
    // 10^4 equally spaced points over [-10, 30]
    std::vector<double> grid(10000);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid[i] = -10.0 + 40.0 * static_cast<double>(i) / 9999.0;
    }
    double shift_gap = 0.0;
    bool monotone = true;
    double previous = 0.0;
    for (const double t : grid) {
      const double f = plain(t);
      shift_gap = std::max(shift_gap, std::abs(centred(t) - plain(t + 1.0)));
      monotone = monotone && f >= previous - config.quad_tol;
      previous = std::max(previous, f);
    }
    record("refdist.shift_identity", shift_gap <= 1e-12,
           "max_gap=" + format_double(shift_gap));
    record("refdist.monotone", monotone, "grid=10000 points on [-10,30]");

    const ReferenceCdf near_zero{1e-3, false, config.quad_nodes, config.quad_tol};
    double limit_gap = 0.0;
    for (const double t : grid) {
      limit_gap = std::max(limit_gap, std::abs(near_zero(t) - chisq1_cdf(t)));
    }
    record("refdist.chisq_limit", limit_gap < 0.01, "sup_gap=" + format_double(limit_gap));
  }

  // n v~_n(Z) has exactly the reference law.
  {
    const auto params = config.base_params();
    const auto seed = grid_point_seed(config.master_seed, params.n());
    const auto ecdf = replicate(params, StatisticKind::ScaledV, LawTag::GaussianZ,
                                config.replicates, seed, monte_carlo_options(config, threads));
    const ReferenceCdf ref{sigma_schedule(params), false, config.quad_nodes, config.quad_tol};
    const auto d = kolmogorov_distance(ecdf, ref, config.confidence_delta, threads);
    record("zlaw.v_identity", d.d_hat <= d.dkw_radius,
           "d_hat=" + format_double(d.d_hat) + " dkw_radius=" + format_double(d.dkw_radius) +
               " n=" + std::to_string(params.n()) + " R=" + std::to_string(d.R));
  }

  for (const auto& check : outcome.checks) {
    if (!check.passed) {
      outcome.exit_code = kCheckFailed;
      break;
    }
  }
  return outcome;
}

inline void write_verify_report(const VerifyOutcome& outcome, std::ostream& out) {
  for (const auto& check : outcome.checks) {
    out << (check.passed ? "PASS " : "FAIL ") << check.name << ' ' << check.detail << '\n';
  }
  out << (outcome.exit_code == kSuccess ? "all checks passed" : "some checks FAILED") << '\n';
}

}  // namespace slowrate::cli
