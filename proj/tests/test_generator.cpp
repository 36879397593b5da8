#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "frugal/error.hpp"
#include "frugal/generator.hpp"
#include "frugal/hyptest.hpp"
#include "frugal/kernels.hpp"
#include "frugal/rng.hpp"

using namespace frugal;

namespace {

// The synthetic-experiment parameterization: two covariates with identity
// copula, outcome Spearman correlations (0.1, 0.9), causal margins
// N(1,1)/N(3,1), RCT propensity. Training covariates Gamma(1,1); the test
// covariate shape parameter toggles the shift severity.
FrugalSpec make_setting(double test_shape) {
  DomainSpec test;
  test.covariate_margins = {Margin::gamma(test_shape, 1.0), Margin::gamma(test_shape, 1.0)};
  test.covariate_copula = CorrelationMatrix::identity(2);
  test.propensity = PropensityModel::constant(0.5);
  std::map<int, Margin> causal;
  causal.emplace(0, Margin::normal(1.0, 1.0));
  causal.emplace(1, Margin::normal(3.0, 1.0));
  const std::vector<double> rho = {spearman_to_pearson(0.1), spearman_to_pearson(0.9)};
  return FrugalSpec::build(std::move(test), std::move(causal), {{0, rho}, {1, rho}});
}

DomainSpec gamma_train_domain() {
  DomainSpec train;
  train.covariate_margins = {Margin::gamma(1.0, 1.0), Margin::gamma(1.0, 1.0)};
  train.covariate_copula = CorrelationMatrix::identity(2);
  train.propensity = PropensityModel::constant(0.5);
  return train;
}

CdfFn margin_cdf(const Margin& m) {
  return [m](double x) { return m.cdf(x); };
}

std::vector<double> arm_outcomes(const Dataset& ds, int x) {
  std::vector<double> ys;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.x[i] == x) ys.push_back(ds.y[i]);
  }
  return ys;
}

double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("test-domain sampler hits the declared causal margins exactly") {
  const FrugalSpec spec = make_setting(2.0);
  CounterRng rng(31, 0);
  const Dataset ds = sample_test_domain(spec, 100000, rng);
  CHECK(ds.n() == 100000);
  const auto y1 = arm_outcomes(ds, 1);
  const auto y0 = arm_outcomes(ds, 0);
  CHECK(ks_test_one_sample(y1, margin_cdf(Margin::normal(3.0, 1.0))).p > 0.01);
  CHECK(ks_test_one_sample(y0, margin_cdf(Margin::normal(1.0, 1.0))).p > 0.01);
}

TEST_CASE("identity joint copula decouples outcome from covariates") {
  DomainSpec test;
  test.covariate_margins = {Margin::gamma(2.0, 1.0), Margin::gamma(2.0, 1.0)};
  test.covariate_copula = CorrelationMatrix::identity(2);
  test.propensity = PropensityModel::constant(0.5);
  std::map<int, Margin> causal;
  causal.emplace(0, Margin::normal(1.0, 1.0));
  causal.emplace(1, Margin::normal(3.0, 1.0));
  const std::vector<double> rho = {0.0, 0.0};
  const FrugalSpec spec =
      FrugalSpec::build(std::move(test), std::move(causal), {{0, rho}, {1, rho}});

  CounterRng rng(32, 0);
  const Dataset ds = sample_test_domain(spec, 100000, rng);
  for (int col = 0; col < 2; ++col) {
    std::vector<double> zc(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) zc[i] = ds.z(i, col);
    CHECK(std::fabs(corr(zc, ds.y)) < 0.02);
  }

  // independence also makes the training margin exact under any shift
  CounterRng rng2(32, 1);
  const Dataset tr = sample_training_domain(spec, gamma_train_domain(), 100000, rng2);
  CHECK(ks_test_one_sample(arm_outcomes(tr, 1), margin_cdf(Margin::normal(3.0, 1.0))).p > 0.01);
}

TEST_CASE("single-row draw is well formed") {
  const FrugalSpec spec = make_setting(2.0);
  CounterRng rng(33, 0);
  const Dataset ds = sample_test_domain(spec, 1, rng);
  CHECK(ds.n() == 1);
  CHECK(std::isfinite(ds.y[0]));
  CHECK((ds.x[0] == 0 || ds.x[0] == 1));
}

TEST_CASE("no-shift training sampler reproduces the causal margin") {
  const FrugalSpec spec = make_setting(2.0);
  DomainSpec train;
  train.covariate_margins = spec.test_domain.covariate_margins;
  train.covariate_copula = spec.test_domain.covariate_copula;
  train.propensity = spec.test_domain.propensity;
  CounterRng rng(34, 0);
  const Dataset ds = sample_training_domain(spec, train, 100000, rng);
  CHECK(ks_test_one_sample(arm_outcomes(ds, 1), margin_cdf(Margin::normal(3.0, 1.0))).p > 0.01);
  CHECK(ks_test_one_sample(arm_outcomes(ds, 0), margin_cdf(Margin::normal(1.0, 1.0))).p > 0.01);
}

TEST_CASE("shifted training covariates break the marginal (rank non-uniformity)") {
  // Setting 2: train Gamma(1,1) vs test Gamma(4,1); with rho_z2y = 0.9 the
  // training-domain outcome margin must NOT match the causal margin.
  const FrugalSpec spec = make_setting(4.0);
  CounterRng rng(35, 0);
  const Dataset ds = sample_training_domain(spec, gamma_train_domain(), 100000, rng);
  const auto r = ks_test_one_sample(arm_outcomes(ds, 1), margin_cdf(Margin::normal(3.0, 1.0)));
  CHECK(r.p < 1e-6);
}

TEST_CASE("true means and ate") {
  const FrugalSpec spec = make_setting(2.0);
  CHECK(true_marginal_mean(spec, 0) == doctest::Approx(1.0));
  CHECK(true_marginal_mean(spec, 1) == doctest::Approx(3.0));
  CHECK(true_ate(spec) == doctest::Approx(2.0));
  CHECK(Margin::gamma(2.0, 4.0).mean() == doctest::Approx(0.5));

  FrugalSpec same = spec;
  same.causal_margins.at(1) = Margin::normal(1.0, 1.0);
  CHECK(true_ate(same) == doctest::Approx(0.0));
}

TEST_CASE("conditional outcome draws are domain-invariant") {
  for (double shape : {2.0, 4.0}) {
    const FrugalSpec spec = make_setting(shape);
    const std::vector<double> zstar = {1.3, 0.7};
    for (int arm : {0, 1}) {
      CounterRng ra(36, static_cast<std::uint64_t>(arm));
      CounterRng rb(37, static_cast<std::uint64_t>(arm));
      const auto test_draws = conditional_outcome_draws_test(spec, zstar, arm, 10000, ra);
      const auto train_draws = conditional_outcome_draws_train(spec, zstar, arm, 10000, rb);
      CHECK(ks_test_two_sample(test_draws, train_draws).p > 0.01);
    }
  }
}

TEST_CASE("gaussian closed-form conditional mean cross-check") {
  // normal covariate margins + normal causal margins: E[Y | z, x] is linear
  // in the covariate z-scores with slope sigma_y * beta.
  DomainSpec test;
  test.covariate_margins = {Margin::normal(1.0, 2.0), Margin::normal(-0.5, 1.5)};
  test.covariate_copula = CorrelationMatrix::identity(2);
  test.propensity = PropensityModel::constant(0.5);
  std::map<int, Margin> causal;
  causal.emplace(0, Margin::normal(1.0, 1.0));
  causal.emplace(1, Margin::normal(3.0, 1.0));
  const std::vector<double> rho = {0.3, 0.6};
  const FrugalSpec spec =
      FrugalSpec::build(std::move(test), std::move(causal), {{0, rho}, {1, rho}});

  const std::vector<double> zstar = {2.0, 0.25};
  const double s0 = (zstar[0] - 1.0) / 2.0;
  const double s1 = (zstar[1] + 0.5) / 1.5;
  for (int arm : {0, 1}) {
    const double mu_y = arm == 0 ? 1.0 : 3.0;
    const double expect = mu_y + 1.0 * (rho[0] * s0 + rho[1] * s1);
    CounterRng rng(38, static_cast<std::uint64_t>(arm));
    const auto draws = conditional_outcome_draws_test(spec, zstar, arm, 100000, rng);
    double mean = 0.0;
    for (double v : draws) mean += v;
    mean /= static_cast<double>(draws.size());
    CHECK(std::fabs(mean - expect) < 0.02);
  }
}

TEST_CASE("samplers are bit-deterministic in (spec, n, seed)") {
  const FrugalSpec spec = make_setting(2.0);
  CounterRng r1(39, 5), r2(39, 5);
  const Dataset a = sample_test_domain(spec, 500, r1);
  const Dataset b = sample_test_domain(spec, 500, r2);
  CHECK(a.y == b.y);
  CHECK(a.x == b.x);
  CHECK(a.z.data() == b.z.data());

  CounterRng r3(39, 6), r4(39, 6);
  const Dataset c = sample_training_domain(spec, gamma_train_domain(), 500, r3);
  const Dataset d = sample_training_domain(spec, gamma_train_domain(), 500, r4);
  CHECK(c.y == d.y);
  CHECK(c.x == d.x);
  CHECK(c.z.data() == d.z.data());
}

TEST_CASE("out-of-support training covariates are clamped and tallied") {
  // empirical test margin on [0, 1]-ish values; training scale 3x pushes
  // beyond the stored support
  std::vector<double> vals;
  for (int i = 1; i <= 50; ++i) vals.push_back(static_cast<double>(i) / 50.0);
  DomainSpec test;
  test.covariate_margins = {Margin::empirical(vals)};
  test.covariate_copula = CorrelationMatrix::identity(1);
  test.propensity = PropensityModel::constant(0.5);
  std::map<int, Margin> causal;
  causal.emplace(0, Margin::normal(0.0, 1.0));
  causal.emplace(1, Margin::normal(1.0, 1.0));
  const std::vector<double> rho = {0.5};
  const FrugalSpec spec =
      FrugalSpec::build(std::move(test), std::move(causal), {{0, rho}, {1, rho}});

  DomainSpec train = spec.test_domain;
  std::vector<double> scaled = vals;
  for (double& v : scaled) v *= 3.0;
  train.covariate_margins = {Margin::empirical(scaled)};

  CounterRng rng(40, 0);
  const Dataset ds = sample_training_domain(spec, train, 2000, rng);
  CHECK(ds.out_of_support > 0);
  for (double y : ds.y) CHECK(std::isfinite(y));
}

TEST_CASE("fit_frugal_from_data round trip") {
  // ground truth with gamma causal margins so the family matches the fitter
  DomainSpec test;
  test.covariate_margins = {Margin::gamma(2.0, 1.0), Margin::gamma(2.0, 1.0)};
  test.covariate_copula = CorrelationMatrix::identity(2);
  test.propensity = PropensityModel::constant(0.5);
  std::map<int, Margin> causal;
  causal.emplace(0, Margin::gamma(2.0, 1.0));
  causal.emplace(1, Margin::gamma(6.0, 1.5));
  const std::vector<double> rho = {spearman_to_pearson(0.1), spearman_to_pearson(0.9)};
  const FrugalSpec truth =
      FrugalSpec::build(std::move(test), std::move(causal), {{0, rho}, {1, rho}});

  CounterRng rng(41, 0);
  const Dataset ds = sample_test_domain(truth, 10000, rng);
  DataTable table;
  table.covariate_names = {"z1", "z2"};
  table.z = ds.z;
  table.x = ds.x;
  table.y = ds.y;
  table.discrete = {false, false};

  FrugalFitOptions opts;
  opts.causal_family = MarginFamily::gamma;
  opts.constant_propensity = false;
  const FrugalSpec fitted = fit_frugal_from_data(table, opts);

  for (int arm : {0, 1}) {
    const auto& jc = fitted.arm_copula(arm);
    const auto& tc = truth.arm_copula(arm);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::fabs(jc(i, j) - tc(i, j)) < 0.05);
    const Margin& m = fitted.causal_margin(arm);
    const Margin& mt = truth.causal_margin(arm);
    CHECK(std::fabs(m.gamma_shape() - mt.gamma_shape()) < 0.1 * mt.gamma_shape() + 0.35);
    CHECK(std::fabs(m.gamma_rate() - mt.gamma_rate()) < 0.1 * mt.gamma_rate() + 0.12);
  }

  // RCT data: fitted logistic weights near zero, intercept near logit(1/2)
  double frac = 0.0;
  for (int x : table.x) frac += x;
  frac /= static_cast<double>(table.n());
  const auto& prop = fitted.test_domain.propensity;
  CHECK(prop.kind == PropensityModel::Kind::logistic);
  CHECK(std::fabs(prop.intercept - std::log(frac / (1.0 - frac))) < 0.1);
  for (double w : prop.weights) CHECK(std::fabs(w) < 0.1);
}

TEST_CASE("fit_frugal_from_data error paths") {
  DataTable empty_arm;
  empty_arm.covariate_names = {"z1"};
  empty_arm.z = Matrix(20, 1);
  empty_arm.x.assign(20, 0);  // no treated rows
  empty_arm.y.assign(20, 1.0);
  empty_arm.discrete = {false};
  CHECK_THROWS_AS((void)fit_frugal_from_data(empty_arm, {}), FitError);

  DataTable negative;
  negative.covariate_names = {"z1"};
  negative.z = Matrix(40, 1);
  negative.x.assign(40, 0);
  for (int i = 0; i < 20; ++i) negative.x[static_cast<std::size_t>(i)] = 1;
  negative.y.assign(40, 1.0);
  negative.y[5] = -2.0;  // gamma family cannot fit this
  negative.discrete = {false};
  CounterRng rng(42, 0);
  for (std::size_t i = 0; i < 40; ++i) {
    negative.z(i, 0) = rng.uniform01();
    if (negative.y[i] > 0) negative.y[i] = 0.5 + rng.uniform01();
  }
  FrugalFitOptions gopts;
  gopts.causal_family = MarginFamily::gamma;
  CHECK_THROWS_WITH_AS((void)fit_frugal_from_data(negative, gopts),
                       doctest::Contains("index"), FitError);
}

TEST_CASE("apply_shift covers the documented cases") {
  DomainSpec dom = gamma_train_domain();

  ShiftConfig identity_shift;
  identity_shift.actions.push_back(
      {ShiftAction::Kind::scale_covariate, 0, 1.0, Margin::normal(0, 1), {}});
  const DomainSpec same = apply_shift(dom, identity_shift);
  CHECK(same.covariate_margins[0].gamma_shape() == doctest::Approx(1.0));
  CHECK(same.covariate_margins[0].gamma_rate() == doctest::Approx(1.0));

  ShiftConfig scale;
  scale.actions.push_back(
      {ShiftAction::Kind::scale_covariate, 0, 1.5, Margin::normal(0, 1), {}});
  const DomainSpec scaled = apply_shift(dom, scale);
  CHECK(scaled.covariate_margins[0].gamma_shape() == doctest::Approx(1.0));
  CHECK(scaled.covariate_margins[0].gamma_rate() == doctest::Approx(2.0 / 3.0));

  ShiftConfig replace;
  replace.actions.push_back(
      {ShiftAction::Kind::replace_margin, 0, 1.0, Margin::gamma(4.0, 1.0), {}});
  const DomainSpec replaced = apply_shift(dom, replace);
  CHECK(replaced.covariate_margins[0].gamma_shape() == doctest::Approx(4.0));

  // normal scaling law and bernoulli rejection
  DomainSpec mixed = dom;
  mixed.covariate_margins[1] = Margin::normal(2.0, 3.0);
  const DomainSpec mixed_scaled = apply_shift(mixed, ShiftConfig{{{ShiftAction::Kind::scale_covariate,
                                                                   1, 2.0, Margin::normal(0, 1), {}}}});
  CHECK(mixed_scaled.covariate_margins[1].normal_mean() == doctest::Approx(4.0));
  CHECK(mixed_scaled.covariate_margins[1].normal_sd() == doctest::Approx(6.0));

  DomainSpec bern = dom;
  bern.covariate_margins[0] = Margin::bernoulli(0.4);
  CHECK_THROWS_AS((void)apply_shift(bern, scale), ParamError);

  // propensity replacement leaves margins untouched
  ShiftConfig prop;
  ShiftAction act;
  act.kind = ShiftAction::Kind::replace_propensity;
  act.propensity = PropensityModel::logistic(0.5, {1.0, -1.0});
  prop.actions.push_back(act);
  const DomainSpec with_prop = apply_shift(dom, prop);
  CHECK(with_prop.propensity.kind == PropensityModel::Kind::logistic);
}

TEST_CASE("propensity probabilities are clipped to the positivity band") {
  const auto logistic = PropensityModel::logistic(50.0, {0.0});
  const std::vector<double> z = {0.0};
  CHECK(logistic.prob(z) == 0.99);
  const auto tiny = PropensityModel::logistic(-50.0, {0.0});
  CHECK(tiny.prob(z) == 0.01);
}
