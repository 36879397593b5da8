#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "frugal/copula.hpp"
#include "frugal/data_table.hpp"
#include "frugal/margins.hpp"
#include "frugal/rng.hpp"

namespace frugal {

// Treatment assignment model. Emitted probabilities are clipped to
// [0.01, 0.99] so positivity always holds.
struct PropensityModel {
  enum class Kind { constant, logistic };

  Kind kind = Kind::constant;
  double p = 0.5;            // constant
  double intercept = 0.0;    // logistic
  std::vector<double> weights;

  static PropensityModel constant(double p);
  static PropensityModel logistic(double intercept, std::vector<double> weights);

  double prob(std::span<const double> z) const;
};

// Covariate margins + covariate copula + propensity: the "past" of one domain.
struct DomainSpec {
  std::vector<Margin> covariate_margins;
  CorrelationMatrix covariate_copula;
  PropensityModel propensity;

  std::size_t dim() const { return covariate_margins.size(); }
  void validate() const;
};

// Frugal parameterization of both domains: the test-domain past, the per-arm
// marginal causal distribution, and the joint (Z, Y(x)) copula whose
// covariate block must equal the test-domain covariate copula (that equality
// is what makes the test-domain causal margin exact).
struct FrugalSpec {
  DomainSpec test_domain;
  std::map<int, Margin> causal_margins;           // treatment level -> margin
  std::map<int, CorrelationMatrix> joint_copulas; // treatment level -> (D+1) matrix
  std::vector<bool> discrete_covariates;          // routing through the distributional transform

  std::size_t dim() const { return test_domain.dim(); }
  void validate() const;
  const CorrelationMatrix& arm_copula(int x) const;
  const Margin& causal_margin(int x) const;

  // Assembles the joint copulas as [R_zz, rho; rho', 1] from per-arm outcome
  // columns (Pearson scale). Throws ParamError if the block is not PSD.
  static FrugalSpec build(DomainSpec test_domain, std::map<int, Margin> causal_margins,
                          std::map<int, std::vector<double>> outcome_pearson,
                          std::vector<bool> discrete_covariates = {});
};

struct Dataset {
  enum class Tag { train, test };

  Matrix z;  // n x D
  std::vector<int> x;
  std::vector<double> y;
  Tag tag = Tag::test;
  std::uint64_t seed = 0;
  std::size_t out_of_support = 0;  // ranks clamped while mapping into test margins

  std::size_t n() const { return x.size(); }
  std::size_t dim() const { return z.cols(); }
};

// Test-domain sampler: joint copula draw, quantile transforms through the
// test margins, propensity, outcome through the causal margin. The marginal
// law of Y | do(X=x) equals causal_margins[x] exactly.
Dataset sample_test_domain(const FrugalSpec& spec, std::size_t n, CounterRng& rng);

// Training-domain sampler: covariates and treatment from the training past,
// outcome rank drawn conditionally on the *test-margin* ranks of the
// training covariates, so both domains share one conditional outcome
// distribution.
Dataset sample_training_domain(const FrugalSpec& spec, const DomainSpec& train_domain,
                               std::size_t n, CounterRng& rng);

// Conditional outcome draws at a fixed covariate vector, bypassing covariate
// sampling; the two entry points mirror the rank derivations of the two
// samplers (identical for continuous covariates by construction).
std::vector<double> conditional_outcome_draws_test(const FrugalSpec& spec,
                                                   std::span<const double> z, int x,
                                                   std::size_t n, CounterRng& rng);
std::vector<double> conditional_outcome_draws_train(const FrugalSpec& spec,
                                                    std::span<const double> z, int x,
                                                    std::size_t n, CounterRng& rng);

double true_marginal_mean(const FrugalSpec& spec, int x);
double true_ate(const FrugalSpec& spec);

struct FrugalFitOptions {
  MarginFamily causal_family = MarginFamily::gamma;
  bool constant_propensity = false;
  // Weight the causal-margin fit by inverse propensity (exact under an RCT
  // either way; exposed for observational tables).
  bool propensity_weighted_margins = false;
  std::uint64_t seed = 0;  // drives the distributional-transform randomization
};

// Algorithm-style estimation on a test-domain table: empirical covariate
// margins, per-arm causal margin of the configured family, per-arm joint
// copula on pseudo-observations, propensity model.
FrugalSpec fit_frugal_from_data(const DataTable& table, const FrugalFitOptions& opts);

struct ShiftAction {
  enum class Kind { scale_covariate, replace_margin, replace_propensity };
  Kind kind = Kind::scale_covariate;
  std::size_t covariate = 0;
  double factor = 1.0;
  Margin margin = Margin::normal(0.0, 1.0);
  PropensityModel propensity;
};

struct ShiftConfig {
  std::vector<ShiftAction> actions;
};

// Derives a shifted past; the copula is never touched.
DomainSpec apply_shift(const DomainSpec& domain, const ShiftConfig& shift);

}  // namespace frugal
