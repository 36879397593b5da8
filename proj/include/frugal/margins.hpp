#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "frugal/rng.hpp"

namespace frugal {

enum class MarginFamily { normal, gamma, bernoulli, empirical };

const char* margin_family_name(MarginFamily f);

// Univariate distribution with the four operations the copula machinery
// needs: CDF, left CDF limit, generalized-inverse quantile, and sampling.
// Immutable after construction, safe to share across threads.
//
// Conventions: the empirical CDF uses the pseudo-observation scale
// rank/(n+1), so ranks never reach 0 or 1; the empirical quantile is the
// left-continuous generalized inverse and always returns a stored value.
class Margin {
 public:
  static Margin normal(double mean, double sd);
  static Margin gamma(double shape, double rate);  // mean = shape/rate
  static Margin bernoulli(double p);
  static Margin empirical(std::vector<double> values);  // sorted internally

  MarginFamily family() const { return family_; }
  bool has_atoms() const {
    return family_ == MarginFamily::bernoulli || family_ == MarginFamily::empirical;
  }

  double cdf(double x) const;
  double cdf_left(double x) const;  // F(x-)
  double quantile(double u) const;
  double density(double x) const;
  double mean() const;
  double sd() const;
  double sample(CounterRng& rng) const { return quantile(rng.uniform01()); }

  // Generalized distributional transform U = F(x-) + v (F(x) - F(x-));
  // collapses to F(x) for continuous families.
  double distributional_transform(double x, double v) const;

  double normal_mean() const;
  double normal_sd() const;
  double gamma_shape() const;
  double gamma_rate() const;
  double bernoulli_p() const;
  const std::vector<double>& values() const;  // empirical only
  std::size_t sample_size() const;            // empirical only

 private:
  Margin() = default;
  MarginFamily family_ = MarginFamily::normal;
  double a_ = 0.0;  // mean / shape / p
  double b_ = 1.0;  // sd / rate
  std::vector<double> values_;
};

Margin fit_margin(MarginFamily family, std::span<const double> samples);
// Weighted variant for normal/gamma (inverse-propensity use); weights must be
// nonnegative with a positive sum.
Margin fit_margin_weighted(MarginFamily family, std::span<const double> samples,
                           std::span<const double> weights);

}  // namespace frugal
