#pragma once

// Replication of the statistics and Kolmogorov-distance estimation.
//
// Replicate r of a run with master seed s draws its rows from Philox stream
// (s, r), so the replicate values do not depend on the number of threads or
// on which thread computed them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <span>
#include <sstream>
#include <vector>

#include "slowrate/construction.hpp"
#include "slowrate/error.hpp"
#include "slowrate/parallel.hpp"
#include "slowrate/refdist.hpp"
#include "slowrate/statistics.hpp"

namespace slowrate {

struct MonteCarloOptions {
  unsigned threads = 1;  // 0 picks the hardware concurrency
  std::int64_t max_replicates = 10'000'000;
  double max_work = 2e11;  // cap on R * n rows drawn per call
};

// Provenance of a set of replicate values.
struct ReplicateSource {
  std::int64_t n = 0;
  StatisticKind kind = StatisticKind::ScaledV;
  LawTag law = LawTag::GaussianZ;
  std::uint64_t seed = 0;
};

class EmpiricalCdf {
 public:
  EmpiricalCdf(std::vector<double> values, ReplicateSource source = {})
      : sorted_(std::move(values)), source_(source) {
    if (sorted_.empty()) {
      throw ParameterError("empirical CDF needs at least one value");
    }
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::span<const double> sorted_values() const noexcept { return sorted_; }
  std::int64_t size() const noexcept { return static_cast<std::int64_t>(sorted_.size()); }
  const ReplicateSource& source() const noexcept { return source_; }

  // Fraction of values <= t.
  double operator()(double t) const {
    return static_cast<double>(count_at_most(t)) / static_cast<double>(sorted_.size());
  }

  // Fraction of values in [lo, hi]; zero when lo > hi.
  double probability_between(double lo, double hi) const {
    if (lo > hi) {
      return 0.0;
    }
    const auto below = std::lower_bound(sorted_.begin(), sorted_.end(), lo) - sorted_.begin();
    return static_cast<double>(static_cast<std::int64_t>(count_at_most(hi)) - below) /
           static_cast<double>(sorted_.size());
  }

  double mean() const noexcept { return compensated_sum(sorted_) / static_cast<double>(size()); }

 private:
  std::size_t count_at_most(double t) const {
    return static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), t) -
                                    sorted_.begin());
  }

  std::vector<double> sorted_;
  ReplicateSource source_;
};

// Reduced-path ingredients of one replicate; every statistic kind is a
// function of these two numbers.
struct ReplicateValues {
  double pstar;
  double remainder;

  double of(StatisticKind kind) const noexcept {
    switch (kind) {
      case StatisticKind::PStar:
      case StatisticKind::ScaledV:
        return pstar;
      case StatisticKind::ScaledU:
        return pstar - remainder;
      case StatisticKind::Remainder:
        return remainder;
    }
    return pstar;
  }
};

inline void check_budget(const ConstructionParams& params, std::int64_t R,
                         const MonteCarloOptions& options) {
  if (R < 2) {
    throw ParameterError("replicate: constraint R >= 2 violated (got R = " + std::to_string(R) +
                         ")");
  }
  if (R > options.max_replicates) {
    throw BudgetError("replicate: R = " + std::to_string(R) + " exceeds max_replicates = " +
                      std::to_string(options.max_replicates));
  }
  const double work = static_cast<double>(R) * static_cast<double>(params.n());
  if (work > options.max_work) {
    std::ostringstream msg;
    msg << "replicate: R * n = " << work << " exceeds max_work = " << options.max_work;
    throw BudgetError(msg.str());
  }
}

// Simulates R samples of size params.n() and keeps the row sums needed for
// every statistic. Replicate r uses stream (master_seed, r).
inline std::vector<ReplicateValues> simulate(const ConstructionParams& params, LawTag law,
                                             std::int64_t R, std::uint64_t master_seed,
                                             const MonteCarloOptions& options = {}) {
  check_budget(params, R, options);
  const RowSampler sampler(params, law);
  std::vector<ReplicateValues> out(static_cast<std::size_t>(R));
  parallel_chunks(out.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<Row> rows(static_cast<std::size_t>(params.n()));
    for (std::size_t r = begin; r < end; ++r) {
      Philox4x32 engine(master_seed, r);
      sampler.fill(engine, rows);
      const auto sums = RowSums::of(rows);
      out[r] = {sums.pstar(), sums.remainder()};
    }
  });
  return out;
}

inline EmpiricalCdf to_ecdf(std::span<const ReplicateValues> values, StatisticKind kind,
                            ReplicateSource source) {
  std::vector<double> picked;
  picked.reserve(values.size());
  for (const auto& v : values) {
    picked.push_back(v.of(kind));
  }
  source.kind = kind;
  return {std::move(picked), source};
}

inline EmpiricalCdf replicate(const ConstructionParams& params, StatisticKind kind, LawTag law,
                              std::int64_t R, std::uint64_t master_seed,
                              const MonteCarloOptions& options = {}) {
  const auto values = simulate(params, law, R, master_seed, options);
  return to_ecdf(values, kind, {params.n(), kind, law, master_seed});
}

inline constexpr double kDefaultConfidenceDelta = 0.01;

// Radius of the DKW band holding with probability >= 1 - delta.
inline double dkw_radius(std::int64_t R, double delta = kDefaultConfidenceDelta) {
  if (R < 1) {
    throw ParameterError("dkw_radius: constraint R >= 1 violated");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("dkw_radius: constraint 0 < delta < 1 violated");
  }
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(R)));
}

struct DistanceEstimate {
  double d_hat;
  double dkw_radius;
  std::int64_t R;
  std::int64_t n;
  StatisticKind statistic_kind;
  LawTag law_tag;
  std::uint64_t seed;
};

// sup_t |F_R(t) - F(t)| against a continuous F, attained at the sample points:
// max over k of max{ k/R - F(v_k), F(v_k) - (k-1)/R }.
template <class Cdf>
double sup_distance(std::span<const double> sorted, const Cdf& cdf, unsigned threads = 1) {
  const double R = static_cast<double>(sorted.size());
  const std::size_t chunks = std::max(1u, resolve_threads(threads));
  std::vector<double> local(chunks, 0.0);
  parallel_chunks(chunks, threads, [&](std::size_t chunk_begin, std::size_t chunk_end) {
    for (std::size_t c = chunk_begin; c < chunk_end; ++c) {
      const std::size_t begin = sorted.size() * c / chunks;
      const std::size_t end = sorted.size() * (c + 1) / chunks;
      double best = 0.0;
      double last_value = std::numeric_limits<double>::quiet_NaN();
      double last_cdf = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        if (!(sorted[k] == last_value)) {
          last_value = sorted[k];
          last_cdf = cdf(last_value);
        }
        const double above = static_cast<double>(k + 1) / R - last_cdf;
        const double below = last_cdf - static_cast<double>(k) / R;
        best = std::max({best, above, below});
      }
      local[c] = best;
    }
  });
  return std::clamp(*std::max_element(local.begin(), local.end()), 0.0, 1.0);
}

inline DistanceEstimate kolmogorov_distance(const EmpiricalCdf& ecdf, const ReferenceCdf& ref,
                                            double delta = kDefaultConfidenceDelta,
                                            unsigned threads = 1) {
  const double d_hat = sup_distance(ecdf.sorted_values(), ref, threads);
  const auto& src = ecdf.source();
  return {d_hat, dkw_radius(ecdf.size(), delta), ecdf.size(), src.n, src.kind, src.law, src.seed};
}

}  // namespace slowrate
