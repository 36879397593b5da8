#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "frugal/error.hpp"
#include "frugal/kernels.hpp"
#include "frugal/rng.hpp"

using namespace frugal;

namespace {

std::vector<double> grid_x() {
  std::vector<double> xs;
  for (double x = -37.0; x <= 37.0; x += 0.0173) xs.push_back(x);
  // region boundaries of the erf rational approximations
  const double sqrt2 = std::sqrt(2.0);
  for (double b : {0.5, 4.0, 26.5}) {
    for (double eps : {-1e-9, 0.0, 1e-9}) {
      xs.push_back(b * sqrt2 + eps);
      xs.push_back(-b * sqrt2 + eps);
    }
  }
  CounterRng rng(7, 1);
  for (int i = 0; i < 200000; ++i) xs.push_back((rng.uniform01() - 0.5) * 20.0);
  return xs;
}

std::vector<double> grid_p() {
  std::vector<double> ps;
  for (double p = 1e-6; p < 1.0; p += 1.37e-4) ps.push_back(p);
  for (double b : {0.02425, 1.0 - 0.02425}) {
    for (double eps : {-1e-12, 0.0, 1e-12}) ps.push_back(b + eps);
  }
  for (double e = -300; e <= -1; e += 1.7) {
    ps.push_back(std::pow(10.0, e));
    ps.push_back(1.0 - std::pow(10.0, e));
  }
  CounterRng rng(7, 2);
  for (int i = 0; i < 200000; ++i) ps.push_back(rng.uniform01());
  std::vector<double> clean;
  for (double p : ps) {
    if (p > 0.0 && p < 1.0) clean.push_back(p);
  }
  return clean;
}

}  // namespace

TEST_CASE("phi matches the libm erfc oracle") {
  for (double x = -8.0; x <= 8.0; x += 0.0137) {
    const double want = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(std::fabs(kernels::phi(x) - want) <= 2e-14);
  }
  // deep lower tail: relative agreement
  for (double x : {-10.0, -15.0, -20.0, -30.0}) {
    const double want = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(std::fabs(kernels::phi(x) - want) <= 1e-11 * want);
  }
  CHECK(kernels::phi(0.0) == 0.5);
  CHECK(kernels::phi(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-13));
}

TEST_CASE("phi_inv round trips against phi to high accuracy") {
  CHECK(kernels::phi_inv(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(kernels::phi_inv(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(kernels::phi_inv(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  for (double u = 0.001; u < 0.9995; u += 0.0007) {
    const double x = kernels::phi_inv(u);
    CHECK(std::fabs(kernels::phi(x) - u) <= 1e-12);
  }
  // far tails still invert well
  for (double u : {1e-12, 1e-9, 1e-6, 1.0 - 1e-9, 1.0 - 1e-12}) {
    const double x = kernels::phi_inv(u);
    const double back = kernels::phi(x);
    CHECK(std::fabs(back - u) <= 1e-9 * std::max(u, 1.0 - u));
  }
  CHECK_THROWS_AS((void)kernels::phi_inv(0.0), RangeError);
  CHECK_THROWS_AS((void)kernels::phi_inv(1.0), RangeError);
  CHECK_THROWS_AS((void)kernels::phi_inv(-0.3), RangeError);
}

TEST_CASE("scalar batch equals elementwise scalar calls") {
  const auto xs = grid_x();
  std::vector<double> out(xs.size());
  kernels::phi_batch_scalar(xs.data(), out.data(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(out[i] == kernels::phi(xs[i]));
  }
}

TEST_CASE("avx2 lanes are bit-identical to the scalar reference") {
  if (!kernels::avx2_supported()) {
    MESSAGE("AVX2 unavailable; skipping equivalence");
    return;
  }
  const auto xs = grid_x();
  std::vector<double> scalar(xs.size()), simd(xs.size());
  kernels::phi_batch_scalar(xs.data(), scalar.data(), xs.size());
  kernels::phi_batch_avx2(xs.data(), simd.data(), xs.size());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::memcmp(&scalar[i], &simd[i], sizeof(double)) != 0) ++mismatches;
  }
  CHECK(mismatches == 0);

  const auto ps = grid_p();
  std::vector<double> qs(ps.size()), qv(ps.size());
  kernels::phi_inv_batch_scalar(ps.data(), qs.data(), ps.size());
  kernels::phi_inv_batch_avx2(ps.data(), qv.data(), ps.size());
  mismatches = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (std::memcmp(&qs[i], &qv[i], sizeof(double)) != 0) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("dispatched batches honor size checks and odd lengths") {
  std::vector<double> x = {-3.0, -0.5, 0.0, 0.25, 1.0, 2.5, 9.0};
  std::vector<double> out(x.size());
  kernels::phi_batch(x, out);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(out[i] == kernels::phi(x[i]));
  std::vector<double> small(3);
  CHECK_THROWS_AS(kernels::phi_batch(x, small), ShapeError);
}

TEST_CASE("counter rng streams are deterministic and distinct") {
  CounterRng a(42, 1), b(42, 1), c(42, 2), d(43, 1);
  std::vector<std::uint64_t> va, vb;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a());
    vb.push_back(b());
  }
  CHECK(va == vb);
  bool differs_stream = false, differs_master = false;
  for (int i = 0; i < 64; ++i) {
    if (c() != va[static_cast<std::size_t>(i)]) differs_stream = true;
    if (d() != va[static_cast<std::size_t>(i)]) differs_master = true;
  }
  CHECK(differs_stream);
  CHECK(differs_master);
  CHECK(derive_key(42, 1) == derive_key(42, 1));
  CHECK(derive_key(42, 1) != derive_key(42, 2));
}

TEST_CASE("stream cross-correlation is negligible") {
  CounterRng a(42, 1), b(42, 2);
  const int n = 10000;
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform01() - 0.5;
    const double y = b.uniform01() - 0.5;
    sa += x;
    sb += y;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  const double corr = (sab - sa * sb / n) / std::sqrt((saa - sa * sa / n) * (sbb - sb * sb / n));
  CHECK(std::fabs(corr) < 0.03);
}

TEST_CASE("uniform01 stays strictly inside the unit interval") {
  CounterRng rng(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}
