#pragma once

// The data-generating process: the sigma_n schedule, the heavy-tailed
// three-point law U_sigma, the R^2 vectors
//
//   Y_i = ( U_i / sqrt(2) + sigma_n xi_i1 / sqrt(2) , xi_i2 )
//
// and their moment-matched Gaussian surrogates Z_i ~ N(0, diag(sigma_n^2, 1)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "slowrate/error.hpp"
#include "slowrate/rng.hpp"

namespace slowrate {

class ConstructionParams {
 public:
  ConstructionParams(double nu, double sigma0, std::int64_t n) : nu_(nu), sigma0_(sigma0), n_(n) {
    if (!(nu > 2.0 && nu <= 3.0)) {
      std::ostringstream msg;
      msg << "invalid nu = " << nu << ": constraint 2 < nu <= 3 violated";
      throw ParameterError(msg.str());
    }
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
      std::ostringstream msg;
      msg << "invalid sigma0 = " << sigma0 << ": constraint sigma0 > 0 violated";
      throw ParameterError(msg.str());
    }
    if (n < 2) {
      std::ostringstream msg;
      msg << "invalid n = " << n << ": constraint n >= 2 violated";
      throw ParameterError(msg.str());
    }
  }

  double nu() const noexcept { return nu_; }
  double sigma0() const noexcept { return sigma0_; }
  std::int64_t n() const noexcept { return n_; }

  ConstructionParams with_n(std::int64_t n) const { return {nu_, sigma0_, n}; }

  friend bool operator==(const ConstructionParams&, const ConstructionParams&) = default;

 private:
  double nu_;
  double sigma0_;
  std::int64_t n_;
};

// sigma_n = min{ sigma0 * n^{-(nu-2)/(2 nu)}, 1 }.
inline double sigma_schedule(const ConstructionParams& params) {
  const double exponent = -(params.nu() - 2.0) / (2.0 * params.nu());
  return std::min(params.sigma0() * std::pow(static_cast<double>(params.n()), exponent), 1.0);
}

// Atoms at -a, 0 and +2a with P(-a) = 2 P(+2a). Mean zero, variance sigma^2,
// and E|U|^nu = 6^{-nu/2} (2 + 2^nu) whatever sigma is.
struct ThreePointLaw {
  double nu;
  double sigma;
  double a;
  double p_neg;
  double p_zero;
  double p_pos;

  double mean() const noexcept { return -a * p_neg + 2.0 * a * p_pos; }
  double variance() const noexcept { return a * a * p_neg + 4.0 * a * a * p_pos; }
  double abs_moment(double order) const noexcept {
    return std::pow(a, order) * p_neg + std::pow(2.0 * a, order) * p_pos;
  }

  // Inverse CDF on one uniform, branches in the fixed order (-a, 0, +2a).
  double quantile(double u) const noexcept {
    if (u < p_neg) {
      return -a;
    }
    if (u < p_neg + p_zero) {
      return 0.0;
    }
    return 2.0 * a;
  }
};

inline ThreePointLaw three_point_law(double nu, double sigma) {
  if (!(nu > 2.0 && nu <= 3.0)) {
    throw ParameterError("three_point_law: constraint 2 < nu <= 3 violated");
  }
  if (!(sigma > 0.0 && sigma <= 1.0)) {
    throw ParameterError("three_point_law: constraint 0 < sigma <= 1 violated");
  }
  const double tail = std::pow(sigma, 2.0 * nu / (nu - 2.0));
  if (3.0 * tail > 1.0) {
    std::ostringstream msg;
    msg << "three_point_law: sigma = " << sigma << " gives 3 sigma^(2nu/(nu-2)) = " << 3.0 * tail
        << " > 1, probabilities invalid";
    throw ParameterError(msg.str());
  }
  ThreePointLaw law{};
  law.nu = nu;
  law.sigma = sigma;
  law.a = std::pow(sigma, -2.0 / (nu - 2.0)) / std::sqrt(6.0);
  law.p_neg = 2.0 * tail;
  law.p_pos = tail;
  law.p_zero = 1.0 - law.p_neg - law.p_pos;
  return law;
}

enum class LawTag { HeavyTailedY, GaussianZ };

inline std::string_view to_string(LawTag law) {
  return law == LawTag::HeavyTailedY ? "Y" : "Z";
}

inline LawTag parse_law(std::string_view text) {
  if (text == "Y" || text == "y" || text == "HeavyTailedY") {
    return LawTag::HeavyTailedY;
  }
  if (text == "Z" || text == "z" || text == "GaussianZ") {
    return LawTag::GaussianZ;
  }
  throw ParameterError("unknown law '" + std::string(text) + "' (expected Y or Z)");
}

struct Row {
  double y1;
  double y2;

  friend bool operator==(const Row&, const Row&) = default;
};

// Draws single rows of Y or Z. Holds only the law constants, so one sampler
// may be shared by threads that each own their engine.
class RowSampler {
 public:
  RowSampler(const ConstructionParams& params, LawTag law)
      : law_(law), sigma_(sigma_schedule(params)) {
    if (law_ == LawTag::HeavyTailedY) {
      three_point_ = three_point_law(params.nu(), sigma_);
    }
  }

  LawTag law() const noexcept { return law_; }
  double sigma() const noexcept { return sigma_; }

  Row operator()(Philox4x32& engine) const {
    boost::random::normal_distribution<double> normal;
    if (law_ == LawTag::HeavyTailedY) {
      const double u = three_point_.quantile(engine.uniform01());
      const double xi1 = normal(engine);
      const double xi2 = normal(engine);
      return {(u + sigma_ * xi1) * kInvSqrt2, xi2};
    }
    const double xi1 = normal(engine);
    const double xi2 = normal(engine);
    // + 0.0 maps -0.0 to +0.0 when sigma underflows to zero.
    return {sigma_ * xi1 + 0.0, xi2};
  }

  void fill(Philox4x32& engine, std::span<Row> rows) const {
    for (auto& row : rows) {
      row = (*this)(engine);
    }
  }

 private:
  static constexpr double kInvSqrt2 = 0.70710678118654752440;

  LawTag law_;
  double sigma_;
  ThreePointLaw three_point_{};
};

class SampleMatrix {
 public:
  SampleMatrix(std::vector<Row> rows, LawTag law, std::uint64_t seed)
      : rows_(std::move(rows)), law_(law), seed_(seed) {}

  std::span<const Row> rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  LawTag law() const noexcept { return law_; }
  std::uint64_t seed() const noexcept { return seed_; }

  friend bool operator==(const SampleMatrix&, const SampleMatrix&) = default;

 private:
  std::vector<Row> rows_;
  LawTag law_;
  std::uint64_t seed_;
};

// Stream (seed, stream) of the given law. Replicate r of a Monte Carlo run
// with master seed s is exactly sample(params, n, law, s, r).
inline SampleMatrix sample(const ConstructionParams& params, std::int64_t count, LawTag law,
                           std::uint64_t seed, std::uint64_t stream = 0) {
  if (count < 1) {
    throw ParameterError("sample count must be positive");
  }
  const RowSampler sampler(params, law);
  Philox4x32 engine(seed, stream);
  std::vector<Row> rows(static_cast<std::size_t>(count));
  sampler.fill(engine, rows);
  return {std::move(rows), law, seed};
}

inline SampleMatrix sample_Y(const ConstructionParams& params, std::int64_t count,
                             std::uint64_t seed) {
  return sample(params, count, LawTag::HeavyTailedY, seed);
}

inline SampleMatrix sample_Z(const ConstructionParams& params, std::int64_t count,
                             std::uint64_t seed) {
  return sample(params, count, LawTag::GaussianZ, seed);
}

}  // namespace slowrate
