// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance            run everything
//   acceptance 3 5        run only criteria 3 and 5

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "slowrate/analysis.hpp"
#include "slowrate/cli.hpp"

using namespace slowrate;

namespace {

constexpr std::uint64_t kMasterSeed = 20240611;

struct Outcome {
  std::string id;
  bool passed;
  std::string detail;
};

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

// 1. Kernel-sum paths against the reduced identities.
std::vector<Outcome> identities() {
  const std::int64_t sizes[] = {2, 3, 17, 256, 512};
  const double nus[] = {2.25, 2.5, 3.0};
  double worst_v = 0.0;
  double worst_u = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 200; ++i) {
    const std::int64_t n = sizes[i % 5];
    const ConstructionParams params(nus[i % 3], 0.5, n);
    const LawTag law = (i / 5) % 2 == 0 ? LawTag::HeavyTailedY : LawTag::GaussianZ;
    const auto s = sample(params, n, law, derive_seed(kMasterSeed, static_cast<std::uint64_t>(i)));
    const double p = eval_pstar(s).value;
    const double scale = 1.0 + std::abs(p);
    worst_v = std::max(worst_v, std::abs(p - eval_v_scaled(s, SumPath::KernelSum).value) / scale);
    worst_u = std::max(worst_u, std::abs(p - (eval_u_scaled(s, SumPath::KernelSum).value +
                                              eval_remainder(s).value)) /
                                    scale);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = worst_v <= 1e-9 && worst_u <= 1e-9 && seconds < 30.0;
  return {{"1", ok,
           "200 samples, max |p* - n v|/(1+|p*|) = " + fixed(worst_v) +
               ", max |p* - (U + R)|/(1+|p*|) = " + fixed(worst_u) + ", " + fixed(seconds, 3) +
               " s"}};
}

// 2. Three-point law moments.
std::vector<Outcome> law_moments() {
  double worst = 0.0;
  for (const double nu : {2.25, 2.5, 3.0}) {
    const double target = std::pow(6.0, -nu / 2.0) * (2.0 + std::pow(2.0, nu));
    for (const double sigma : {0.05, 0.1, 0.25}) {
      const auto law = three_point_law(nu, sigma);
      worst = std::max({worst, std::abs(law.mean()) / sigma,
                        std::abs(law.variance() / (sigma * sigma) - 1.0),
                        std::abs(law.abs_moment(nu) / target - 1.0),
                        std::abs(law.p_neg + law.p_zero + law.p_pos - 1.0)});
    }
  }
  return {{"2", worst <= 1e-12, "max relative moment error " + fixed(worst) + " over 9 (nu, sigma)"}};
}

// 3. Reference CDF against an independent brute-force Monte Carlo.
std::vector<Outcome> reference_cdf_oracle() {
  constexpr std::int64_t kDraws = 10'000'000;
  const double sigma = 0.25;
  std::mt19937_64 engine(kMasterSeed);
  std::normal_distribution<double> normal;
  std::vector<double> draws(kDraws);
  for (auto& d : draws) {
    const double xi = normal(engine);
    const double chi = normal(engine);
    d = sigma * xi + chi * chi;
  }
  std::sort(draws.begin(), draws.end());
  const double radius = dkw_radius(kDraws, 1e-3);
  const ReferenceCdf ref{sigma, false};
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double t = -1.0 + 9.0 * k / 49.0;
    const double ecdf =
        static_cast<double>(std::upper_bound(draws.begin(), draws.end(), t) - draws.begin()) /
        static_cast<double>(kDraws);
    worst = std::max(worst, std::abs(ecdf - ref(t)));
  }
  return {{"3", worst <= radius,
           "max |F_MC - F| over 50 points in [-1, 8] = " + fixed(worst) +
               ", 99.9% DKW radius = " + fixed(radius)}};
}

// 4. Auxiliary integral bounds.
std::vector<Outcome> integral_bounds() {
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(-100.0 + 0.5 * i);
  const auto maxima = verify_I1_I2(grid);
  const double i2_zero = integral_I2(0.0);
  const bool ok =
      maxima.max_I1 <= kI1Bound && maxima.max_I2 <= kI2Bound && std::abs(i2_zero - 2.0 / 7.0) <= 1e-6;
  return {{"4", ok,
           "max I1 = " + fixed(maxima.max_I1) + " (bound " + fixed(kI1Bound) + "), max I2 = " +
               fixed(maxima.max_I2) + " (bound " + fixed(kI2Bound) + "), I2(0) - 2/7 = " +
               fixed(i2_zero - 2.0 / 7.0)}};
}

DistanceEstimate gaussian_distance(std::int64_t n, StatisticKind kind, std::int64_t R) {
  const ConstructionParams params(3.0, 1.0, n);
  MonteCarloOptions options;
  options.threads = worker_threads();
  const auto ecdf =
      replicate(params, kind, LawTag::GaussianZ, R, grid_point_seed(kMasterSeed, n), options);
  const ReferenceCdf ref{sigma_schedule(params), kind == StatisticKind::ScaledU};
  return kolmogorov_distance(ecdf, ref, 0.01, options.threads);
}

// 5. n v_n(Z) has exactly the reference law.
std::vector<Outcome> gaussian_v_identity() {
  bool ok = true;
  std::string detail;
  for (const std::int64_t n : {256, 4096}) {
    const auto d = gaussian_distance(n, StatisticKind::ScaledV, 1'000'000);
    ok = ok && d.d_hat <= d.dkw_radius;
    detail += "n=" + std::to_string(n) + ": d_hat=" + fixed(d.d_hat) + " dkw=" + fixed(d.dkw_radius) + "; ";
  }
  return {{"5", ok, detail}};
}

// 6. Gaussian U statistic distances decay.
std::vector<Outcome> gaussian_u_decay() {
  bool ok = true;
  std::string detail;
  double previous = std::numeric_limits<double>::infinity();
  for (const std::int64_t n : {256, 1024, 4096, 16384}) {
    const auto d = gaussian_distance(n, StatisticKind::ScaledU, 200'000);
    ok = ok && d.d_hat <= previous + 2.0 * d.dkw_radius;
    previous = d.d_hat;
    detail += "n=" + std::to_string(n) + ": " + fixed(d.d_hat) + "; ";
  }
  detail += "slack 2*dkw = " + fixed(2.0 * dkw_radius(200'000));
  return {{"6", ok, detail}};
}

// 7. The two-row rate experiment at nu = 3, sigma0 = 1.
std::vector<Outcome> rate_experiment() {
  const std::vector<std::int64_t> grid{256, 512, 1024, 2048, 4096, 8192, 16384};
  PipelineOptions options;
  options.monte_carlo.threads = worker_threads();
  const auto report = theorem1_pipeline({3.0, 1.0, grid.front()}, grid, 200'000, kMasterSeed, options);

  std::ostringstream table;
  bool gap = report.all_ok();
  for (const auto& row : report.rows) {
    gap = gap && row.d_hat > 2.0 * row.dkw_radius;
    table << to_string(row.kind) << "(" << row.n << ")=" << fixed(row.d_hat, 4) << " ";
  }
  const double threshold = 2.0 * dkw_radius(200'000);

  auto fit_ok = [](const std::optional<RateFit>& fit) {
    return fit && fit->exponent >= -0.35 && fit->exponent <= -0.005 && fit->r_squared >= 0.5;
  };
  auto describe = [](const std::optional<RateFit>& fit, const std::string& note) {
    if (!fit) return "unavailable (" + note + ")";
    return "exponent " + fixed(fit->exponent, 4) + " R^2 " + fixed(fit->r_squared, 3) + " on " +
           std::to_string(fit->points.size()) + " points";
  };

  // For information only: the fit over every point, flagged or not.
  std::string unflagged_note;
  for (const auto kind : {StatisticKind::ScaledV, StatisticKind::ScaledU}) {
    std::vector<RatePoint> points;
    for (const auto& row : report.rows) {
      if (row.kind == kind && row.status == PointStatus::Ok) points.push_back({row.n, row.d_hat, row.dkw_radius});
    }
    const auto fit = fit_rate(points);
    unflagged_note += std::string(" ") + std::string(to_string(kind)) + " " + fixed(fit.exponent, 4) +
                      " (R^2 " + fixed(fit.r_squared, 3) + ")";
  }

  bool agree = true;
  double worst_gap = 0.0;
  for (std::size_t i = 0; i + 1 < report.rows.size(); i += 2) {
    const auto& v = report.rows[i];
    const auto& u = report.rows[i + 1];
    const double slack = 3.0 * (v.dkw_radius + u.dkw_radius);
    agree = agree && std::abs(v.d_hat - u.d_hat) <= slack;
    worst_gap = std::max(worst_gap, std::abs(v.d_hat - u.d_hat));
  }

  return {
      {"7a", gap, "every d_hat > 2*dkw = " + fixed(threshold) + ": " + table.str()},
      {"7b", fit_ok(report.v_fit) && fit_ok(report.u_fit),
       "V fit " + describe(report.v_fit, report.v_fit_note) + "; U fit " +
           describe(report.u_fit, report.u_fit_note) + "; info, fit over all points:" +
           unflagged_note},
      {"7c", agree,
       "max |d_V - d_U| = " + fixed(worst_gap) + " vs 3*(dkw_V + dkw_U) = " + fixed(3.0 * threshold)},
  };
}

// 8. Variances of the remainder and of p* under Z.
std::vector<Outcome> gaussian_variances() {
  const std::int64_t n = 1024;
  const ConstructionParams params(3.0, 1.0, n);
  MonteCarloOptions options;
  options.threads = worker_threads();
  const auto values =
      simulate(params, LawTag::GaussianZ, 1'000'000, grid_point_seed(kMasterSeed + 8, n), options);
  CompensatedSum r1, r2, p1, p2;
  for (const auto& v : values) {
    r1.add(v.remainder);
    r2.add(v.remainder * v.remainder);
    p1.add(v.pstar);
    p2.add(v.pstar * v.pstar);
  }
  const double count = static_cast<double>(values.size());
  const double var_r = r2.value() / count - std::pow(r1.value() / count, 2);
  const double var_p = p2.value() / count - std::pow(p1.value() / count, 2);
  const double sigma = sigma_schedule(params);
  const double rel_r = std::abs(var_r / (2.0 / n) - 1.0);
  const double rel_p = std::abs(var_p / (sigma * sigma + 2.0) - 1.0);
  return {{"8", rel_r <= 0.05 && rel_p <= 0.05,
           "Var[R_n] = " + fixed(var_r) + " vs 2/n = " + fixed(2.0 / n) + " (rel " + fixed(rel_r, 3) +
               "); Var[p*] = " + fixed(var_p) + " vs sigma^2+2 = " + fixed(sigma * sigma + 2.0) +
               " (rel " + fixed(rel_p, 3) + ")"}};
}

// 9. Rate output is independent of the thread count.
std::vector<Outcome> thread_determinism() {
  const auto config = cli::load_config(std::string(SLOWRATE_TEST_DATA_DIR) + "/golden.cfg");
  auto render = [&](unsigned threads) {
    std::ostringstream csv, summary;
    const int code = cli::cmd_rate(config, threads, false, csv, summary);
    return std::to_string(code) + "\n" + csv.str() + summary.str();
  };
  const auto one = render(1);
  const auto eight = render(8);
  return {{"9", one == eight,
           "golden config, --threads 1 vs 8: " + std::string(one == eight ? "identical" : "DIFFERENT") +
               " (" + std::to_string(one.size()) + " bytes)"}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<std::vector<Outcome>()>>> criteria{
      {1, identities},          {2, law_moments},        {3, reference_cdf_oracle},
      {4, integral_bounds},     {5, gaussian_v_identity}, {6, gaussian_u_decay},
      {7, rate_experiment},     {8, gaussian_variances},  {9, thread_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& [number, run] : criteria) {
    if (!selected.empty() && !selected.count(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    std::vector<Outcome> outcomes;
    try {
      outcomes = run();
    } catch (const std::exception& e) {
      outcomes = {{std::to_string(number), false, std::string("exception: ") + e.what()}};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& o : outcomes) {
      failures += !o.passed;
      std::printf("%s criterion %s: %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", o.id.c_str(),
                  o.detail.c_str(), seconds);
    }
    std::fflush(stdout);
  }
  std::printf("%s\n", failures == 0 ? "all acceptance criteria passed"
                                    : (std::to_string(failures) + " acceptance criteria failed").c_str());
  return failures == 0 ? 0 : 1;
}
