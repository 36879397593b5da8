#include "frugal/rng.hpp"

#include "kernels_core.hpp"

namespace frugal {

namespace {

constexpr std::uint64_t kMul = 0xD2B74407B1CE6E93ULL;   // Philox 2x64 multiplier
constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;  // golden-ratio key schedule

inline void round_once(std::uint64_t& x0, std::uint64_t& x1, std::uint64_t k) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(kMul) * x0;
  const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
  const std::uint64_t lo = static_cast<std::uint64_t>(prod);
  x0 = hi ^ k ^ x1;
  x1 = lo;
}

}  // namespace

void CounterRng::refill() {
  std::uint64_t x0 = block_hi_;
  std::uint64_t x1 = block_lo_;
  std::uint64_t k = key_;
  for (int r = 0; r < 10; ++r) {
    round_once(x0, x1, k);
    k += kWeyl;
  }
  out_[0] = x0;
  out_[1] = x1;
  idx_ = 0;
  if (++block_lo_ == 0) ++block_hi_;  // unreachable in practice (2^65 draws)
}

double CounterRng::normal() { return kernels::core::phi_inv_core(uniform01()); }

std::uint64_t derive_key(std::uint64_t master, std::uint64_t stream) {
  CounterRng r(master, stream);
  return r();
}

}  // namespace frugal
