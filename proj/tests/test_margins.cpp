#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "frugal/error.hpp"
#include "frugal/hyptest.hpp"
#include "frugal/margins.hpp"
#include "frugal/rng.hpp"

using namespace frugal;

TEST_CASE("margin cdf examples") {
  CHECK(Margin::normal(0, 1).cdf(0.0) == 0.5);
  // exponential closed form: gamma(1,1) at 1 -> 1 - e^{-1}
  CHECK(Margin::gamma(1, 1).cdf(1.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(Margin::empirical({1, 2, 3}).cdf(2.0) == doctest::Approx(0.5));
  CHECK(Margin::empirical({1, 2, 3}).cdf(0.5) == doctest::Approx(0.0));
  CHECK(Margin::empirical({1, 2, 3}).cdf(9.0) == doctest::Approx(0.75));
  CHECK_THROWS_AS((void)Margin::normal(0, -1), ParamError);
  CHECK_THROWS_AS((void)Margin::gamma(-2, 1), ParamError);
}

TEST_CASE("margin quantile examples") {
  CHECK(Margin::normal(0, 1).quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(Margin::gamma(1, 1).quantile(1.0 - std::exp(-1.0)) ==
        doctest::Approx(1.0).epsilon(1e-10));
  // generalized inverse on the empirical ladder: F(1)=0.25 < 0.5 <= F(2)
  CHECK(Margin::empirical({1, 2, 3}).quantile(0.5) == 2.0);
  CHECK(Margin::empirical({1, 2, 3}).quantile(0.25) == 1.0);
  CHECK(Margin::empirical({1, 2, 3}).quantile(0.999) == 3.0);
  CHECK_THROWS_AS((void)Margin::normal(0, 1).quantile(0.0), RangeError);
  CHECK_THROWS_AS((void)Margin::normal(0, 1).quantile(1.0), RangeError);
  CHECK_THROWS_AS((void)Margin::gamma(1, 1).quantile(1.0), RangeError);
}

TEST_CASE("quantile/cdf round trip on a fine grid") {
  const std::vector<Margin> ms = {Margin::normal(-1.5, 2.0), Margin::gamma(0.7, 1.3),
                                  Margin::gamma(4.0, 0.5)};
  for (const auto& m : ms) {
    for (double u = 0.001; u <= 0.9991; u += 0.001) {
      const double x = m.quantile(u);
      CHECK(std::fabs(m.cdf(x) - u) <= 1e-9);
    }
    // dual direction: quantile(cdf(x)) recovers interior points
    for (double u = 0.01; u <= 0.991; u += 0.01) {
      const double x = m.quantile(u);
      const double back = m.quantile(m.cdf(x));
      CHECK(std::fabs(back - x) <= 1e-9 * (std::fabs(x) + 1.0));
    }
  }
}

TEST_CASE("gamma density integrates to one") {
  const Margin g = Margin::gamma(2.3, 1.7);
  // Simpson over a wide bracket
  const double hi = g.quantile(1.0 - 1e-12);
  const int n = 20001;
  const double h = hi / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = i * h;
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * g.density(x);
  }
  acc *= h / 3.0;
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bernoulli cdf, quantile, transform") {
  const Margin b = Margin::bernoulli(0.5);
  CHECK(b.cdf(-0.5) == 0.0);
  CHECK(b.cdf(0.0) == 0.5);
  CHECK(b.cdf(1.0) == 1.0);
  CHECK(b.cdf_left(0.0) == 0.0);
  CHECK(b.cdf_left(1.0) == 0.5);
  CHECK(b.quantile(0.3) == 0.0);
  CHECK(b.quantile(0.51) == 1.0);
  // distributional transform examples
  CHECK(b.distributional_transform(0.0, 0.5) == doctest::Approx(0.25));
  CHECK(b.distributional_transform(1.0, 1.0) == doctest::Approx(1.0));
  CHECK(Margin::normal(0, 1).distributional_transform(0.0, 0.123) == 0.5);
  CHECK_THROWS_AS((void)b.distributional_transform(0.0, 1.5), RangeError);
}

TEST_CASE("fit_margin covers the named cases") {
  const std::vector<double> bern = {0, 1, 1, 1};
  CHECK(fit_margin(MarginFamily::bernoulli, bern).bernoulli_p() == doctest::Approx(0.75));

  const std::vector<double> flat = {1, 1, 1, 1};
  CHECK_THROWS_AS((void)fit_margin(MarginFamily::normal, flat), FitError);
  CHECK_THROWS_AS((void)fit_margin(MarginFamily::normal, std::vector<double>{}), FitError);
  CHECK_THROWS_AS((void)fit_margin(MarginFamily::gamma, std::vector<double>{1.0, -2.0, 3.0}),
                  FitError);

  const std::vector<double> emp = {3.0, 1.0, 2.0};
  const Margin e = fit_margin(MarginFamily::empirical, emp);
  CHECK(e.values() == std::vector<double>{1.0, 2.0, 3.0});

  const std::vector<double> norm = {1.0, 2.0, 3.0, 4.0};
  const Margin nm = fit_margin(MarginFamily::normal, norm);
  CHECK(nm.normal_mean() == doctest::Approx(2.5));
  CHECK(nm.normal_sd() == doctest::Approx(std::sqrt(5.0 / 3.0)));
}

TEST_CASE("gamma MLE recovers parameters from large samples") {
  CounterRng rng(11, 0);
  const Margin truth = Margin::gamma(2.0, 1.0);
  std::vector<double> xs(100000);
  for (auto& v : xs) v = truth.sample(rng);
  const Margin fit = fit_margin(MarginFamily::gamma, xs);
  CHECK(std::fabs(fit.gamma_shape() - 2.0) < 0.1);
  CHECK(std::fabs(fit.gamma_rate() - 1.0) < 0.1);
}

TEST_CASE("probability integral transform is uniform") {
  CounterRng rng(12, 0);
  const std::vector<Margin> ms = {Margin::normal(2, 3), Margin::gamma(1.5, 2.0)};
  for (const auto& m : ms) {
    std::vector<double> us(100000);
    for (auto& u : us) u = m.cdf(m.sample(rng));
    const auto r = ks_test_one_sample(us, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(r.p > 0.01);
  }
}

TEST_CASE("distributional transform of bernoulli draws is uniform") {
  CounterRng rng(13, 0);
  const Margin b = Margin::bernoulli(0.3);
  std::vector<double> us(100000);
  for (auto& u : us) {
    const double x = b.sample(rng);
    u = b.distributional_transform(x, rng.uniform01());
  }
  const auto r = ks_test_one_sample(us, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(r.p > 0.01);
}

TEST_CASE("empirical quantile always returns a stored value") {
  CounterRng rng(14, 0);
  std::vector<double> vals(37);
  for (auto& v : vals) v = rng.normal();
  const Margin e = fit_margin(MarginFamily::empirical, vals);
  for (double u = 0.0; u <= 1.0; u += 0.01) {
    const double q = e.quantile(u);
    CHECK(std::find(e.values().begin(), e.values().end(), q) != e.values().end());
  }
}

TEST_CASE("empirical quantile/cdf ladder is exact for every rank and size") {
  CounterRng rng(15, 0);
  for (std::size_t n : {1u, 2u, 3u, 7u, 49u, 100u, 157u}) {
    std::vector<double> vals(n);
    for (auto& v : vals) v = rng.normal();
    const Margin e = fit_margin(MarginFamily::empirical, vals);
    const double n1 = static_cast<double>(n) + 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
      const double u = static_cast<double>(r) / n1;
      CHECK(e.quantile(u) == e.values()[r - 1]);
      // exact ladder round trip
      CHECK(e.quantile(e.cdf(e.values()[r - 1])) == e.values()[r - 1]);
      // just above a ladder step selects the next value
      if (r < n) {
        CHECK(e.quantile(std::nextafter(u, 1.0)) == e.values()[r]);
      }
    }
  }
}

TEST_CASE("weighted fits") {
  // doubling a point's weight equals duplicating it
  const std::vector<double> xs = {1.0, 2.0, 5.0};
  const std::vector<double> ws = {2.0, 1.0, 1.0};
  const std::vector<double> dup = {1.0, 1.0, 2.0, 5.0};
  const Margin a = fit_margin_weighted(MarginFamily::gamma, xs, ws);
  const Margin b = fit_margin(MarginFamily::gamma, dup);
  CHECK(a.gamma_shape() == doctest::Approx(b.gamma_shape()).epsilon(1e-9));
  CHECK(a.gamma_rate() == doctest::Approx(b.gamma_rate()).epsilon(1e-9));
}
