#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "slowrate/montecarlo.hpp"

using namespace slowrate;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("dkw radius") {
  CHECK_THAT(dkw_radius(1'000'000, 0.01), WithinRel(1.6276e-3, 1e-4));
  CHECK_THAT(dkw_radius(1000, 0.01), WithinRel(0.051468, 1e-4));
  CHECK_THAT(dkw_radius(10'000'000, 0.001), WithinRel(6.16478e-4, 1e-5));
  CHECK_THROWS_AS(dkw_radius(0), ParameterError);
  CHECK_THROWS_AS(dkw_radius(10, 1.0), ParameterError);
}

TEST_CASE("empirical cdf basics") {
  const EmpiricalCdf ecdf({3.0, 1.0, 2.0, 2.0});
  CHECK(ecdf(0.5) == 0.0);
  CHECK(ecdf(1.0) == 0.25);
  CHECK(ecdf(2.0) == 0.75);
  CHECK(ecdf(10.0) == 1.0);
  CHECK(ecdf.probability_between(1.5, 2.5) == 0.5);
  CHECK(ecdf.probability_between(1.0, 1.0) == 0.25);
  CHECK(ecdf.probability_between(3.0, 1.0) == 0.0);
  CHECK(ecdf.mean() == 2.0);
  CHECK(ecdf.sorted_values().front() == 1.0);
  CHECK_THROWS_AS(EmpiricalCdf(std::vector<double>{}), ParameterError);
}

TEST_CASE("sup distance of a single point against a continuous cdf") {
  const std::vector<double> one{0.0};
  CHECK(sup_distance(one, [](double t) { return normal_cdf(t); }) == 0.5);

  // Uniform points k/(R+1) against the uniform cdf: distance is 1/(R+1)... plus ties
  std::vector<double> grid;
  const int R = 99;
  for (int k = 1; k <= R; ++k) grid.push_back(static_cast<double>(k) / (R + 1));
  const double d = sup_distance(grid, [](double t) { return std::clamp(t, 0.0, 1.0); });
  CHECK_THAT(d, WithinAbs(1.0 / (R + 1), 1e-12));
}

TEST_CASE("sup distance does not depend on thread count") {
  const ConstructionParams params(3.0, 1.0, 64);
  const auto ecdf = replicate(params, StatisticKind::ScaledV, LawTag::GaussianZ, 5000, 9);
  const ReferenceCdf ref{sigma_schedule(params), false};
  const double one = sup_distance(ecdf.sorted_values(), ref, 1);
  CHECK(sup_distance(ecdf.sorted_values(), ref, 3) == one);
  CHECK(sup_distance(ecdf.sorted_values(), ref, 8) == one);
}

TEST_CASE("replication is deterministic and thread independent") {
  const ConstructionParams params(2.5, 1.0, 32);
  MonteCarloOptions serial;
  MonteCarloOptions threaded;
  threaded.threads = 4;
  const auto a = simulate(params, LawTag::HeavyTailedY, 1000, 77, serial);
  const auto b = simulate(params, LawTag::HeavyTailedY, 1000, 77, threaded);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].pstar == b[i].pstar);
    REQUIRE(a[i].remainder == b[i].remainder);
  }
  // replicate r is sample(params, n, law, seed, r)
  const auto s = sample(params, 32, LawTag::HeavyTailedY, 77, 5);
  CHECK(RowSums::of(s.rows()).pstar() == a[5].pstar);
}

TEST_CASE("replicate budgets") {
  const ConstructionParams params(3.0, 1.0, 100);
  CHECK_THROWS_AS(replicate(params, StatisticKind::ScaledV, LawTag::GaussianZ, 1, 1),
                  ParameterError);
  MonteCarloOptions tight;
  tight.max_replicates = 10;
  CHECK_THROWS_AS(replicate(params, StatisticKind::ScaledV, LawTag::GaussianZ, 11, 1, tight),
                  BudgetError);
  tight.max_replicates = 1000;
  tight.max_work = 5000;
  CHECK_THROWS_AS(replicate(params, StatisticKind::ScaledV, LawTag::GaussianZ, 51, 1, tight),
                  BudgetError);
  CHECK_NOTHROW(replicate(params, StatisticKind::ScaledV, LawTag::GaussianZ, 50, 1, tight));
}

TEST_CASE("Gaussian V statistic matches its reference law exactly") {
  // Under Z, n v_n = sigma xi + chi^2_1 in distribution for every n.
  const ConstructionParams params(3.0, 1.0, 128);
  const auto ecdf = replicate(params, StatisticKind::ScaledV, LawTag::GaussianZ, 40000, 3);
  const ReferenceCdf ref{sigma_schedule(params), false};
  const auto est = kolmogorov_distance(ecdf, ref);
  CHECK(est.d_hat <= est.dkw_radius);
  CHECK(est.R == 40000);
  CHECK(est.n == 128);
  CHECK(est.statistic_kind == StatisticKind::ScaledV);
  CHECK(est.law_tag == LawTag::GaussianZ);
  CHECK(est.seed == 3);
}

TEST_CASE("remainder variance under Z is 2/n") {
  const ConstructionParams params(3.0, 1.0, 256);
  const auto values = simulate(params, LawTag::GaussianZ, 100000, 4);
  CompensatedSum s, ss;
  for (const auto& v : values) {
    s.add(v.remainder);
    ss.add(v.remainder * v.remainder);
  }
  const double mean = s.value() / values.size();
  const double var = ss.value() / values.size() - mean * mean;
  CHECK_THAT(mean, WithinAbs(1.0, 1e-3));
  CHECK_THAT(var, WithinRel(2.0 / 256.0, 0.03));
}
