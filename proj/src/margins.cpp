#include "frugal/margins.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "frugal/error.hpp"
#include "frugal/kernels.hpp"

#include "kernels_core.hpp"
#include "frugal/special.hpp"

namespace frugal {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

std::string fmt(double v) { return std::to_string(v); }

}  // namespace

const char* margin_family_name(MarginFamily f) {
  switch (f) {
    case MarginFamily::normal: return "normal";
    case MarginFamily::gamma: return "gamma";
    case MarginFamily::bernoulli: return "bernoulli";
    case MarginFamily::empirical: return "empirical";
  }
  return "?";
}

Margin Margin::normal(double mean, double sd) {
  if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) {
    throw ParamError("normal margin requires finite mean and sd > 0, got sd=" + fmt(sd));
  }
  Margin m;
  m.family_ = MarginFamily::normal;
  m.a_ = mean;
  m.b_ = sd;
  return m;
}

Margin Margin::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw ParamError("gamma margin requires shape > 0 and rate > 0, got shape=" + fmt(shape) +
                     " rate=" + fmt(rate));
  }
  Margin m;
  m.family_ = MarginFamily::gamma;
  m.a_ = shape;
  m.b_ = rate;
  return m;
}

Margin Margin::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParamError("bernoulli margin requires p in [0,1], got " + fmt(p));
  }
  Margin m;
  m.family_ = MarginFamily::bernoulli;
  m.a_ = p;
  return m;
}

Margin Margin::empirical(std::vector<double> values) {
  if (values.empty()) throw ParamError("empirical margin requires at least one value");
  for (double v : values) {
    if (!std::isfinite(v)) throw ParamError("empirical margin values must be finite");
  }
  std::sort(values.begin(), values.end());
  Margin m;
  m.family_ = MarginFamily::empirical;
  m.values_ = std::move(values);
  return m;
}

double Margin::cdf(double x) const {
  switch (family_) {
    case MarginFamily::normal:
      return kernels::phi((x - a_) / b_);
    case MarginFamily::gamma:
      return x <= 0.0 ? 0.0 : special::reg_inc_gamma(a_, b_ * x);
    case MarginFamily::bernoulli:
      if (x < 0.0) return 0.0;
      if (x < 1.0) return 1.0 - a_;
      return 1.0;
    case MarginFamily::empirical: {
      const auto it = std::upper_bound(values_.begin(), values_.end(), x);
      const auto rank = static_cast<double>(it - values_.begin());
      return rank / (static_cast<double>(values_.size()) + 1.0);
    }
  }
  return 0.0;
}

double Margin::cdf_left(double x) const {
  switch (family_) {
    case MarginFamily::normal:
    case MarginFamily::gamma:
      return cdf(x);
    case MarginFamily::bernoulli:
      if (x <= 0.0) return 0.0;
      if (x <= 1.0) return 1.0 - a_;
      return 1.0;
    case MarginFamily::empirical: {
      const auto it = std::lower_bound(values_.begin(), values_.end(), x);
      const auto rank = static_cast<double>(it - values_.begin());
      return rank / (static_cast<double>(values_.size()) + 1.0);
    }
  }
  return 0.0;
}

double Margin::quantile(double u) const {
  switch (family_) {
    case MarginFamily::normal:
      if (!(u > 0.0 && u < 1.0)) {
        throw RangeError("normal quantile requires u in (0,1), got " + fmt(u));
      }
      return a_ + b_ * kernels::phi_inv(u);
    case MarginFamily::gamma:
      if (!(u >= 0.0 && u < 1.0)) {
        throw RangeError("gamma quantile requires u in [0,1), got " + fmt(u));
      }
      return special::inv_reg_inc_gamma(a_, u) / b_;
    case MarginFamily::bernoulli:
      if (!(u >= 0.0 && u <= 1.0)) {
        throw RangeError("bernoulli quantile requires u in [0,1], got " + fmt(u));
      }
      return u <= 1.0 - a_ ? 0.0 : 1.0;
    case MarginFamily::empirical: {
      if (!(u >= 0.0 && u <= 1.0)) {
        throw RangeError("empirical quantile requires u in [0,1], got " + fmt(u));
      }
      // generalized inverse on the rank/(n+1) ladder; the adjustment loops
      // remove the off-by-one that ceil(u*(n+1)) picks up from float
      // rounding, keeping quantile(cdf(x)) exact
      const auto n = static_cast<std::ptrdiff_t>(values_.size());
      const double n1 = static_cast<double>(values_.size()) + 1.0;
      auto i = static_cast<std::ptrdiff_t>(std::ceil(u * n1));
      i = std::max<std::ptrdiff_t>(1, std::min<std::ptrdiff_t>(i, n));
      while (i > 1 && static_cast<double>(i - 1) / n1 >= u) --i;
      while (i < n && static_cast<double>(i) / n1 < u) ++i;
      return values_[static_cast<std::size_t>(i - 1)];
    }
  }
  return 0.0;
}

double Margin::density(double x) const {
  switch (family_) {
    case MarginFamily::normal: {
      const double z = (x - a_) / b_;
      return kInvSqrt2Pi / b_ * std::exp(-0.5 * z * z);
    }
    case MarginFamily::gamma: {
      if (x < 0.0) return 0.0;
      if (x == 0.0) {
        if (a_ > 1.0) return 0.0;
        if (a_ == 1.0) return b_;
        return HUGE_VAL;
      }
      return std::exp(a_ * std::log(b_) + (a_ - 1.0) * std::log(x) - b_ * x -
                      special::lgamma_pos(a_));
    }
    case MarginFamily::bernoulli:
      if (x == 0.0) return 1.0 - a_;
      if (x == 1.0) return a_;
      return 0.0;
    case MarginFamily::empirical:
      throw ParamError("empirical margin has no density");
  }
  return 0.0;
}

double Margin::mean() const {
  switch (family_) {
    case MarginFamily::normal: return a_;
    case MarginFamily::gamma: return a_ / b_;
    case MarginFamily::bernoulli: return a_;
    case MarginFamily::empirical: {
      double s = 0.0;
      for (double v : values_) s += v;
      return s / static_cast<double>(values_.size());
    }
  }
  return 0.0;
}

double Margin::sd() const {
  switch (family_) {
    case MarginFamily::normal: return b_;
    case MarginFamily::gamma: return std::sqrt(a_) / b_;
    case MarginFamily::bernoulli: return std::sqrt(a_ * (1.0 - a_));
    case MarginFamily::empirical: {
      const std::size_t n = values_.size();
      if (n < 2) return 0.0;
      const double m = mean();
      double s = 0.0;
      for (double v : values_) s += (v - m) * (v - m);
      return std::sqrt(s / static_cast<double>(n - 1));
    }
  }
  return 0.0;
}

double Margin::distributional_transform(double x, double v) const {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw RangeError("distributional_transform requires v in [0,1], got " + fmt(v));
  }
  const double hi = cdf(x);
  if (!has_atoms()) return hi;
  const double lo = cdf_left(x);
  return lo + v * (hi - lo);
}

double Margin::normal_mean() const {
  if (family_ != MarginFamily::normal) throw ParamError("margin is not normal");
  return a_;
}
double Margin::normal_sd() const {
  if (family_ != MarginFamily::normal) throw ParamError("margin is not normal");
  return b_;
}
double Margin::gamma_shape() const {
  if (family_ != MarginFamily::gamma) throw ParamError("margin is not gamma");
  return a_;
}
double Margin::gamma_rate() const {
  if (family_ != MarginFamily::gamma) throw ParamError("margin is not gamma");
  return b_;
}
double Margin::bernoulli_p() const {
  if (family_ != MarginFamily::bernoulli) throw ParamError("margin is not bernoulli");
  return a_;
}
const std::vector<double>& Margin::values() const {
  if (family_ != MarginFamily::empirical) throw ParamError("margin is not empirical");
  return values_;
}
std::size_t Margin::sample_size() const { return values().size(); }

namespace {

struct WeightedMoments {
  double mean;
  double var;  // weighted, with the unbiased-style correction
  double sum_w;
};

WeightedMoments weighted_moments(std::span<const double> xs, std::span<const double> ws) {
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ws[i] < 0.0) throw FitError("negative weight in weighted fit");
    sw += ws[i];
    swx += ws[i] * xs[i];
  }
  if (!(sw > 0.0)) throw FitError("weights sum to zero");
  const double m = swx / sw;
  double sv = 0.0, sw2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sv += ws[i] * (xs[i] - m) * (xs[i] - m);
    sw2 += ws[i] * ws[i];
  }
  const double denom = sw - sw2 / sw;
  return {m, denom > 0.0 ? sv / denom : 0.0, sw};
}

Margin fit_gamma_mle(std::span<const double> xs, std::span<const double> ws) {
  double sw = 0.0, swx = 0.0, swlx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0)) {
      throw FitError("gamma fit requires positive data; offending value " + fmt(xs[i]) +
                     " at index " + std::to_string(i));
    }
    sw += ws[i];
    swx += ws[i] * xs[i];
    swlx += ws[i] * kernels::core::log_core(xs[i]);
  }
  const double m = swx / sw;
  const double s = kernels::core::log_core(m) - swlx / sw;  // >= 0 by Jensen; 0 iff degenerate
  if (!(s > 1e-12)) throw FitError("gamma fit degenerate: data has (near) zero spread");

  // Method-of-moments start, Newton on log k - digamma(k) = s.
  double sv = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) sv += ws[i] * (xs[i] - m) * (xs[i] - m);
  const double var = sv / sw;
  double k = var > 0.0 ? m * m / var : 1.0;
  k = std::max(k, 1e-6);
  for (int it = 0; it < 60; ++it) {
    const double f = kernels::core::log_core(k) - special::digamma(k) - s;
    const double df = 1.0 / k - special::trigamma(k);
    double kn = k - f / df;
    if (!(kn > 0.0)) kn = k * 0.5;
    if (std::fabs(kn - k) < 1e-12 * k) {
      k = kn;
      break;
    }
    k = kn;
  }
  return Margin::gamma(k, k / m);
}

}  // namespace

Margin fit_margin_weighted(MarginFamily family, std::span<const double> samples,
                           std::span<const double> weights) {
  if (samples.empty()) throw FitError("fit_margin: empty sample");
  if (samples.size() != weights.size()) throw ShapeError("fit_margin: weight size mismatch");
  switch (family) {
    case MarginFamily::normal: {
      const auto wm = weighted_moments(samples, weights);
      if (!(wm.var > 0.0)) throw FitError("normal fit degenerate: zero variance");
      return Margin::normal(wm.mean, std::sqrt(wm.var));
    }
    case MarginFamily::gamma:
      return fit_gamma_mle(samples, weights);
    case MarginFamily::bernoulli: {
      double sw = 0.0, swx = 0.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i] != 0.0 && samples[i] != 1.0) {
          throw FitError("bernoulli fit requires 0/1 data, got " + fmt(samples[i]));
        }
        sw += weights[i];
        swx += weights[i] * samples[i];
      }
      if (!(sw > 0.0)) throw FitError("weights sum to zero");
      return Margin::bernoulli(swx / sw);
    }
    case MarginFamily::empirical:
      // Weights make no sense for a raw sorted copy.
      return Margin::empirical(std::vector<double>(samples.begin(), samples.end()));
  }
  throw ParamError("unknown margin family");
}

Margin fit_margin(MarginFamily family, std::span<const double> samples) {
  const std::vector<double> w(samples.size(), 1.0);
  return fit_margin_weighted(family, samples, w);
}

}  // namespace frugal
