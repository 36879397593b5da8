#pragma once

#include <cstdint>

namespace frugal {

// Counter-based generator in the Philox 2x64 style: ten rounds of a 128-bit
// multiply mixing a (key, counter) pair. A generator is addressed by
// (master, stream); distinct streams are statistically independent, so any
// bootstrap or iteration can be replayed in isolation and parallel schedules
// cannot change the numbers drawn.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng() : CounterRng(0, 0) {}
  CounterRng(std::uint64_t master, std::uint64_t stream)
      : key_(master), block_hi_(stream), block_lo_(0) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~static_cast<result_type>(0); }

  result_type operator()() {
    if (idx_ == 2) refill();
    return out_[idx_++];
  }

  // Uniform on the open interval (0,1); endpoints are unreachable so normal
  // scores of the result stay finite.
  double uniform01() {
    return (static_cast<double>(operator()() >> 11) + 0.5) * 0x1p-53;
  }

  // Standard normal draw via the inverse CDF (defined in rng.cpp).
  double normal();

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n). Rejection-free modulo is fine here: n is tiny
  // relative to 2^64 in every use, the bias is < n / 2^64.
  std::uint64_t below(std::uint64_t n) { return operator()() % n; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t block_hi_;
  std::uint64_t block_lo_;
  std::uint64_t out_[2] = {0, 0};
  int idx_ = 2;
};

// One 64-bit word from the (master, stream) cell; used to derive child
// masters so seed trees can nest (experiment -> iteration -> bootstrap).
std::uint64_t derive_key(std::uint64_t master, std::uint64_t stream);

inline CounterRng derive_rng(std::uint64_t master, std::uint64_t stream) {
  return CounterRng(master, stream);
}

}  // namespace frugal
