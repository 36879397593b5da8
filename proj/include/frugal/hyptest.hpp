#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "frugal/generator.hpp"
#include "frugal/models.hpp"

namespace frugal {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool degenerate = false;
};

// Two-sided one-sample t test of mean(samples) against `target`.
// Near-zero spread yields the documented degenerate result instead of NaN.
TTestResult t_test_one_sample(std::span<const double> samples, double target);

struct GofResult {
  double statistic = 0.0;
  double p = 1.0;
};

using CdfFn = std::function<double(double)>;

GofResult ks_test_one_sample(std::vector<double> samples, const CdfFn& cdf);
GofResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);
GofResult cvm_test_one_sample(std::vector<double> samples, const CdfFn& cdf);

// KS of a p-value collection against U(0,1).
GofResult pvalue_uniformity_check(std::span<const double> ps);

enum class TestTarget { mu_at_x0, ate };
enum class DistTestKind { ks, cvm };

struct TestConfig {
  std::size_t n_bootstrap = 200;
  std::size_t n_train = 200;
  std::size_t n_test = 50;
  std::size_t n_y = 50;  // distributional tests only
  TestTarget target = TestTarget::ate;
  int x0 = 1;
  DistTestKind dist_test = DistTestKind::ks;
  std::size_t pooled_cap = 10'000'000;
  int workers = 1;

  void validate() const;
};

struct TestReport {
  double p_value = 1.0;
  double statistic = 0.0;
  std::vector<double> bootstrap_estimates;  // mean test: one per bootstrap
  std::size_t pooled_count = 0;             // distributional test summary
  double pooled_mean = 0.0;
  double pooled_sd = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> bootstrap_streams;  // replay handles, one per bootstrap
  bool degenerate = false;
  bool subsampled = false;
  std::size_t out_of_support = 0;
  std::string notes;
};

// Bootstrap evaluation of a mean regression model: refit on fresh training
// draws, average predictions over fresh test draws, t-test the estimates
// against the known causal target.
TestReport mean_regression_test(const FrugalSpec& spec, const DomainSpec& train_domain,
                                const ModelSpec& model, const TestConfig& cfg,
                                std::uint64_t master_seed);

// Bootstrap evaluation of a distributional regression model: pool predictive
// outcome draws at x0 across bootstraps/rows and test against the known
// causal margin.
TestReport dist_regression_test(const FrugalSpec& spec, const DomainSpec& train_domain,
                                const ModelSpec& model, const TestConfig& cfg,
                                std::uint64_t master_seed);

}  // namespace frugal
