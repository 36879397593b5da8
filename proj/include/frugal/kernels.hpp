#pragma once

#include <cstddef>
#include <span>

// Batch math kernels for the sampling hot loops: the standard normal CDF and
// its inverse applied over arrays (copula rank transforms, normal scores,
// inverse-CDF normal generation). A scalar reference implementation defines
// the semantics; an AVX2 variant performs the same arithmetic four lanes at
// a time and is selected at runtime. The two paths are bit-identical by
// construction (explicit FMA, shared constants, blend-mirrored branches), so
// results do not depend on which one ran.
namespace frugal::kernels {

// Scalar reference, always available.
double phi(double x);       // standard normal CDF
double phi_inv(double p);   // inverse CDF; requires p in (0,1), throws RangeError otherwise

// Dispatched batch entry points (in-place allowed: out may alias x).
void phi_batch(std::span<const double> x, std::span<double> out);
void phi_inv_batch(std::span<const double> p, std::span<double> out);

// Introspection / test hooks.
bool avx2_compiled();
bool avx2_supported();
const char* active_path();  // "avx2" or "scalar"; honors FRUGAL_BENCH_SIMD={auto,scalar,avx2}

void phi_batch_scalar(const double* x, double* out, std::size_t n);
void phi_inv_batch_scalar(const double* p, double* out, std::size_t n);
// Present only when compiled with AVX2 support; throw otherwise.
void phi_batch_avx2(const double* x, double* out, std::size_t n);
void phi_inv_batch_avx2(const double* p, double* out, std::size_t n);

}  // namespace frugal::kernels
