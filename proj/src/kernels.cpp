#include "frugal/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "frugal/error.hpp"
#include "kernels_core.hpp"

namespace frugal::kernels {

double phi(double x) { return core::phi_core(x); }

double phi_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw RangeError("phi_inv: p must lie strictly inside (0,1), got " + std::to_string(p));
  }
  return core::phi_inv_core(p);
}

void phi_batch_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = core::phi_core(x[i]);
}

void phi_inv_batch_scalar(const double* p, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = core::phi_inv_core(p[i]);
}

#if !defined(FRUGAL_HAVE_AVX2)
bool avx2_compiled() { return false; }
bool avx2_supported() { return false; }
void phi_batch_avx2(const double*, double*, std::size_t) {
  throw Error("phi_batch_avx2: binary was built without AVX2 support");
}
void phi_inv_batch_avx2(const double*, double*, std::size_t) {
  throw Error("phi_inv_batch_avx2: binary was built without AVX2 support");
}
#endif

namespace {

enum class Path { undecided, scalar, avx2 };
std::atomic<Path> g_path{Path::undecided};

Path resolve() {
  Path p = g_path.load(std::memory_order_relaxed);
  if (p != Path::undecided) return p;
  const char* env = std::getenv("FRUGAL_BENCH_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) {
    p = Path::scalar;
  } else if (env != nullptr && std::strcmp(env, "avx2") == 0) {
    if (!avx2_supported()) throw Error("FRUGAL_BENCH_SIMD=avx2 requested but AVX2 is unavailable");
    p = Path::avx2;
  } else {
    p = avx2_supported() ? Path::avx2 : Path::scalar;
  }
  g_path.store(p, std::memory_order_relaxed);
  return p;
}

}  // namespace

const char* active_path() { return resolve() == Path::avx2 ? "avx2" : "scalar"; }

void phi_batch(std::span<const double> x, std::span<double> out) {
  if (x.size() != out.size()) throw ShapeError("phi_batch: size mismatch");
  if (resolve() == Path::avx2) {
    phi_batch_avx2(x.data(), out.data(), x.size());
  } else {
    phi_batch_scalar(x.data(), out.data(), x.size());
  }
}

void phi_inv_batch(std::span<const double> p, std::span<double> out) {
  if (p.size() != out.size()) throw ShapeError("phi_inv_batch: size mismatch");
  if (resolve() == Path::avx2) {
    phi_inv_batch_avx2(p.data(), out.data(), p.size());
  } else {
    phi_inv_batch_scalar(p.data(), out.data(), p.size());
  }
}

}  // namespace frugal::kernels
