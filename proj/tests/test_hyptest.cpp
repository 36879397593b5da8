#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "frugal/error.hpp"
#include "frugal/generator.hpp"
#include "frugal/hyptest.hpp"
#include "frugal/margins.hpp"
#include "frugal/rng.hpp"
#include "frugal/special.hpp"

using namespace frugal;

namespace {

CdfFn uniform_cdf() {
  return [](double x) { return std::clamp(x, 0.0, 1.0); };
}

// Independent oracle for the two-sided t-test p-value: adaptive Simpson over
// the t density.
double t_pvalue_oracle(double t, double nu) {
  const double c = std::exp(special::lgamma_pos((nu + 1.0) / 2.0) -
                            special::lgamma_pos(nu / 2.0)) /
                   std::sqrt(nu * 3.14159265358979323846);
  auto pdf = [&](double u) { return c * std::pow(1.0 + u * u / nu, -(nu + 1.0) / 2.0); };
  // integrate the upper tail from |t| to a far cutoff
  const double hi = std::fabs(t) + 400.0;
  const int n = 400001;
  const double h = (hi - std::fabs(t)) / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = std::fabs(t) + i * h;
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * pdf(u);
  }
  return 2.0 * acc * h / 3.0;
}

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

}  // namespace

TEST_CASE("t test examples") {
  const std::vector<double> sym = {1.9, 2.0, 2.1};
  auto r = t_test_one_sample(sym, 2.0);
  CHECK(r.t == doctest::Approx(0.0));
  CHECK(r.p == doctest::Approx(1.0));

  const std::vector<double> off = {2.1, 2.2, 2.3};
  r = t_test_one_sample(off, 2.0);
  CHECK(r.t == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
  const double oracle = t_pvalue_oracle(r.t, 2.0);
  CHECK(r.p == doctest::Approx(oracle).epsilon(5e-4));
  CHECK(std::fabs(r.p - 0.0742) < 5e-4);

  const std::vector<double> flat = {5.0, 5.0, 5.0};
  r = t_test_one_sample(flat, 5.0);
  CHECK(r.degenerate);
  CHECK(r.p == 1.0);
  r = t_test_one_sample(flat, 4.0);
  CHECK(r.degenerate);
  CHECK(r.p == 0.0);

  CHECK_THROWS_AS((void)t_test_one_sample(std::vector<double>{1.0}, 0.0), TestError);
}

TEST_CASE("ks one-sample examples") {
  // hand evaluation of the order-statistic formula
  const std::vector<double> xs = {0.1, 0.5, 0.9};
  const auto r = ks_test_one_sample(xs, uniform_cdf());
  double d_brute = 0.0;
  for (int i = 0; i < 3; ++i) {
    d_brute = std::max(d_brute, std::max((i + 1) / 3.0 - xs[static_cast<std::size_t>(i)],
                                         xs[static_cast<std::size_t>(i)] - i / 3.0));
  }
  CHECK(r.statistic == doctest::Approx(d_brute).epsilon(1e-15));
  CHECK(r.statistic == doctest::Approx(7.0 / 30.0).epsilon(1e-12));

  // perfectly calibrated grid
  const std::size_t n = 10000;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }
  const auto g = ks_test_one_sample(grid, uniform_cdf());
  CHECK(g.statistic <= 0.5 / static_cast<double>(n) + 1e-12);
  CHECK(g.p > 0.999);

  // gross mismatch
  CounterRng rng(71, 0);
  std::vector<double> bad(100000);
  for (auto& v : bad) v = rng.normal();
  const Margin wrong = Margin::normal(5.0, 1.0);
  const auto b = ks_test_one_sample(bad, [&](double v) { return wrong.cdf(v); });
  CHECK(b.p < 1e-10);

  std::vector<double> with_nan = {0.2, std::nan(""), 0.6};
  CHECK_THROWS_AS((void)ks_test_one_sample(with_nan, uniform_cdf()), ParamError);
}

TEST_CASE("cvm one-sample examples") {
  const std::vector<double> xs = {0.1, 0.5, 0.9};
  const auto r = cvm_test_one_sample(xs, uniform_cdf());
  const double brute = 1.0 / 36.0 + std::pow(0.1 - 1.0 / 6.0, 2) + std::pow(0.5 - 0.5, 2) +
                       std::pow(0.9 - 5.0 / 6.0, 2);
  CHECK(r.statistic == doctest::Approx(brute).epsilon(1e-12));
  CHECK(std::fabs(r.statistic - 0.03667) < 1e-5);

  const std::size_t n = 10000;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }
  const auto g = cvm_test_one_sample(grid, uniform_cdf());
  CHECK(g.statistic == doctest::Approx(1.0 / (12.0 * n)).epsilon(1e-6));
  CHECK(g.p > 0.999);

  CounterRng rng(72, 0);
  std::vector<double> bad(100000);
  for (auto& v : bad) v = rng.normal();
  const Margin wrong = Margin::normal(5.0, 1.0);
  const auto b = cvm_test_one_sample(bad, [&](double v) { return wrong.cdf(v); });
  CHECK(b.p < 1e-10);
}

TEST_CASE("two-sample ks null and alternative") {
  CounterRng rng(73, 0);
  std::vector<double> a(20000), b(20000), c(20000);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  for (auto& v : c) v = rng.normal() + 0.1;
  CHECK(ks_test_two_sample(a, b).p > 0.01);
  CHECK(ks_test_two_sample(a, c).p < 1e-6);
}

TEST_CASE("p-value uniformity checker") {
  std::vector<double> grid(50);
  for (int i = 0; i < 50; ++i) grid[static_cast<std::size_t>(i)] = (i + 0.5) / 50.0;
  CHECK(pvalue_uniformity_check(grid).p > 0.999);

  const std::vector<double> tiny(50, 0.001);
  CHECK(pvalue_uniformity_check(tiny).p < 1e-10);

  // under the null, the check itself rarely rejects at 0.01
  CounterRng rng(74, 0);
  int pass = 0;
  const int reps = 300;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> ps(50);
    for (auto& p : ps) p = rng.uniform01();
    if (pvalue_uniformity_check(ps).p > 0.01) ++pass;
  }
  CHECK(static_cast<double>(pass) / reps >= 0.97);

  const std::vector<double> bad = {0.5, 1.2};
  CHECK_THROWS_AS((void)pvalue_uniformity_check(bad), RangeError);
}

TEST_CASE("ks rejection rate is calibrated at level 0.05") {
  CounterRng rng(75, 0);
  const Margin ref = Margin::normal(0.0, 1.0);
  int reject = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> xs(1000);
    for (auto& v : xs) v = ref.sample(rng);
    const auto res = ks_test_one_sample(xs, [&](double v) { return ref.cdf(v); });
    if (res.p < 0.05) ++reject;
  }
  const double rate = static_cast<double>(reject) / reps;
  CHECK(rate >= 0.03);
  CHECK(rate <= 0.07);
}

TEST_CASE("oracle model is calibrated under shift (mean test)") {
  const FrugalSpec spec = make_setting(2.0);
  const DomainSpec train = gamma_train_domain();
  ModelSpec oracle;
  oracle.kind = ModelKind::oracle;
  TestConfig cfg;
  cfg.n_bootstrap = 200;
  cfg.n_train = 200;
  cfg.n_test = 50;
  cfg.target = TestTarget::mu_at_x0;
  cfg.x0 = 1;
  cfg.workers = 2;

  std::vector<double> ps;
  for (int run = 0; run < 30; ++run) {
    const auto rep = mean_regression_test(spec, train, oracle, cfg,
                                          derive_key(7100, static_cast<std::uint64_t>(run)));
    CHECK(rep.bootstrap_estimates.size() == cfg.n_bootstrap);
    ps.push_back(rep.p_value);
  }
  // p-values should look uniform; a crude gate suffices at 30 runs
  CHECK(pvalue_uniformity_check(ps).p > 0.001);
  int small = 0;
  for (double p : ps) small += p < 0.05 ? 1 : 0;
  CHECK(small <= 6);
}

TEST_CASE("biased oracle is rejected (mean test power)") {
  const FrugalSpec spec = make_setting(2.0);
  const DomainSpec train = gamma_train_domain();
  ModelSpec biased;
  biased.kind = ModelKind::oracle;
  biased.oracle_bias = 0.5;
  TestConfig cfg;
  cfg.n_bootstrap = 200;
  cfg.n_train = 100;
  cfg.n_test = 50;
  cfg.target = TestTarget::mu_at_x0;
  cfg.x0 = 1;
  cfg.workers = 2;
  for (int run = 0; run < 5; ++run) {
    const auto rep = mean_regression_test(spec, train, biased, cfg,
                                          derive_key(7200, static_cast<std::uint64_t>(run)));
    CHECK(rep.p_value < 0.05);
  }
}

TEST_CASE("ate target cancels constant bias by construction") {
  // the plug-in ATE averages f(1,z) - f(0,z); a constant bias drops out
  const FrugalSpec spec = make_setting(2.0);
  const DomainSpec train = gamma_train_domain();
  ModelSpec biased;
  biased.kind = ModelKind::oracle;
  biased.oracle_bias = 0.5;
  TestConfig cfg;
  cfg.n_bootstrap = 100;
  cfg.target = TestTarget::ate;
  cfg.workers = 1;
  const auto rep = mean_regression_test(spec, train, biased, cfg, 7300);
  CHECK(rep.p_value > 1e-4);  // bias invisible to the ATE target
}

TEST_CASE("degenerate predictor produces the documented report") {
  // independence copula + oracle: predictions are constant mu(x), so all
  // bootstrap estimates coincide with the target
  DomainSpec test;
  test.covariate_margins = {Margin::gamma(2.0, 1.0)};
  test.covariate_copula = CorrelationMatrix::identity(1);
  test.propensity = PropensityModel::constant(0.5);
  std::map<int, Margin> causal;
  causal.emplace(0, Margin::normal(1.0, 1.0));
  causal.emplace(1, Margin::normal(3.0, 1.0));
  const std::vector<double> rho = {0.0};
  const FrugalSpec spec =
      FrugalSpec::build(std::move(test), std::move(causal), {{0, rho}, {1, rho}});
  ModelSpec oracle;
  oracle.kind = ModelKind::oracle;
  TestConfig cfg;
  cfg.n_bootstrap = 20;
  cfg.target = TestTarget::mu_at_x0;
  cfg.x0 = 1;
  const auto rep = mean_regression_test(spec, spec.test_domain, oracle, cfg, 7400);
  CHECK(rep.degenerate);
  CHECK(rep.p_value == 1.0);
}

TEST_CASE("mean test reports are reproducible across worker counts") {
  const FrugalSpec spec = make_setting(2.0);
  const DomainSpec train = gamma_train_domain();
  ModelSpec model;
  model.kind = ModelKind::s_linear;
  TestConfig cfg;
  cfg.n_bootstrap = 40;
  cfg.n_train = 80;
  cfg.n_test = 30;
  cfg.target = TestTarget::ate;

  cfg.workers = 1;
  const auto a = mean_regression_test(spec, train, model, cfg, 7500);
  cfg.workers = 4;
  const auto b = mean_regression_test(spec, train, model, cfg, 7500);
  CHECK(a.p_value == b.p_value);
  CHECK(a.bootstrap_estimates == b.bootstrap_estimates);
  CHECK(a.bootstrap_streams == b.bootstrap_streams);
}

TEST_CASE("dist test: calibrated model yields moderate p, biased model fails hard") {
  const FrugalSpec spec = make_setting(2.0);
  ModelSpec oracle;
  oracle.kind = ModelKind::oracle;
  TestConfig cfg;
  cfg.n_bootstrap = 50;
  cfg.n_train = 100;
  cfg.n_test = 50;
  cfg.n_y = 20;
  cfg.x0 = 1;
  cfg.workers = 2;

  // no shift: train domain = test domain; the oracle emits exact conditional
  // draws, so the pooled sample matches the causal margin in distribution
  const auto ok = dist_regression_test(spec, spec.test_domain, oracle, cfg, 7600);
  CHECK(ok.p_value > 0.01);
  CHECK(ok.pooled_count > 0);
  CHECK_FALSE(ok.notes.empty());

  ModelSpec biased;
  biased.kind = ModelKind::oracle;
  biased.oracle_bias = 2.0;
  const auto badrep = dist_regression_test(spec, spec.test_domain, biased, cfg, 7601);
  CHECK(badrep.p_value < 1e-10);
}

TEST_CASE("dist test pooled cap triggers reservoir subsampling deterministically") {
  const FrugalSpec spec = make_setting(2.0);
  ModelSpec oracle;
  oracle.kind = ModelKind::oracle;
  TestConfig cfg;
  cfg.n_bootstrap = 10;
  cfg.n_train = 50;
  cfg.n_test = 20;
  cfg.n_y = 10;
  cfg.x0 = 1;
  cfg.pooled_cap = 300;
  const auto a = dist_regression_test(spec, spec.test_domain, oracle, cfg, 7700);
  CHECK(a.subsampled);
  CHECK(a.pooled_count == 300);
  cfg.workers = 3;
  const auto b = dist_regression_test(spec, spec.test_domain, oracle, cfg, 7700);
  CHECK(a.p_value == b.p_value);
  CHECK(a.statistic == b.statistic);
}

TEST_CASE("capability mismatches are rejected") {
  const FrugalSpec spec = make_setting(2.0);
  ModelSpec knn;
  knn.kind = ModelKind::s_knn;
  TestConfig cfg;
  CHECK_THROWS_AS(
      (void)dist_regression_test(spec, spec.test_domain, knn, cfg, 1),
      CapabilityError);
}

TEST_CASE("cvm variant of the dist test runs end to end") {
  const FrugalSpec spec = make_setting(2.0);
  ModelSpec oracle;
  oracle.kind = ModelKind::oracle;
  TestConfig cfg;
  cfg.n_bootstrap = 20;
  cfg.n_train = 50;
  cfg.n_test = 20;
  cfg.n_y = 10;
  cfg.x0 = 1;
  cfg.dist_test = DistTestKind::cvm;
  const auto rep = dist_regression_test(spec, spec.test_domain, oracle, cfg, 7800);
  CHECK(rep.p_value > 1e-4);
}

TEST_CASE("redraw exhaustion surfaces as a test error") {
  // a one-row test draw with propensity at the clip floor essentially never
  // produces a treated row within ten attempts
  DomainSpec test;
  test.covariate_margins = {Margin::gamma(2.0, 1.0)};
  test.covariate_copula = CorrelationMatrix::identity(1);
  test.propensity = PropensityModel::constant(0.011);
  std::map<int, Margin> causal;
  causal.emplace(0, Margin::normal(1, 1));
  causal.emplace(1, Margin::normal(3, 1));
  const std::vector<double> rho = {0.3};
  const FrugalSpec spec =
      FrugalSpec::build(std::move(test), std::move(causal), {{0, rho}, {1, rho}});
  ModelSpec oracle;
  oracle.kind = ModelKind::oracle;
  TestConfig cfg;
  cfg.n_bootstrap = 4;
  cfg.n_train = 20;
  cfg.n_test = 1;
  cfg.target = TestTarget::mu_at_x0;
  cfg.x0 = 1;
  CHECK_THROWS_WITH_AS((void)mean_regression_test(spec, spec.test_domain, oracle, cfg, 9000),
                       doctest::Contains("redraws"), TestError);
}

TEST_CASE("rejection rate grows monotonically with oracle bias") {
  const FrugalSpec spec = make_setting(2.0);
  const DomainSpec train = gamma_train_domain();
  TestConfig cfg;
  cfg.n_bootstrap = 100;
  cfg.n_train = 100;
  cfg.n_test = 50;
  cfg.target = TestTarget::mu_at_x0;
  cfg.x0 = 1;
  cfg.workers = 2;
  std::vector<int> rejections;
  for (double bias : {0.0, 0.25, 0.5}) {
    ModelSpec model;
    model.kind = ModelKind::oracle;
    model.oracle_bias = bias;
    int reject = 0;
    for (int run = 0; run < 20; ++run) {
      const auto rep = mean_regression_test(spec, train, model, cfg,
                                            derive_key(8000, static_cast<std::uint64_t>(run)));
      reject += rep.p_value < 0.05 ? 1 : 0;
    }
    rejections.push_back(reject);
  }
  CHECK(rejections[0] <= rejections[1]);
  CHECK(rejections[1] <= rejections[2]);
  CHECK(rejections[2] == 20);  // bias 0.5 is decisively detected
}

TEST_CASE("redraws happen and are recorded in the stream handles") {
  // thin treated arm: redraws are likely, success within ten attempts
  FrugalSpec spec = make_setting(2.0);
  spec.test_domain.propensity = PropensityModel::constant(0.2);
  spec.validate();
  ModelSpec oracle;
  oracle.kind = ModelKind::oracle;
  TestConfig cfg;
  cfg.n_bootstrap = 30;
  cfg.n_train = 30;
  cfg.n_test = 2;
  cfg.target = TestTarget::mu_at_x0;
  cfg.x0 = 1;
  const auto rep = mean_regression_test(spec, spec.test_domain, oracle, cfg, 7900);
  bool any_redraw = false;
  for (std::uint64_t s : rep.bootstrap_streams) {
    if ((s >> 48) != 0) any_redraw = true;
  }
  CHECK(any_redraw);
}
