#pragma once
//
// Counter-based RNG: Philox 4x32-10. The stream for a trial is a pure
// function of (master_seed, trial_index), so trials are reproducible
// regardless of execution order or worker count.

#include <cstdint>

namespace spikes {

struct TrialSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;
};

class Philox {
 public:
  explicit Philox(TrialSeed seed)
      : key0_(static_cast<std::uint32_t>(seed.master_seed)),
        key1_(static_cast<std::uint32_t>(seed.master_seed >> 32)),
        ctr0_(static_cast<std::uint32_t>(seed.trial_index)),
        ctr1_(static_cast<std::uint32_t>(seed.trial_index >> 32)) {}

  std::uint32_t next_u32() {
    if (have_ == 0) {
      fill_block();
      have_ = 4;
    }
    return out_[4 - have_--];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on the open interval (0, 1); 53 significant bits.
  double next_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // One keyed bijection application: 10 Philox rounds on a 128-bit counter.
  static void raw_block(const std::uint32_t ctr[4], const std::uint32_t key[2],
                        std::uint32_t out[4]) {
    std::uint32_t x0 = ctr[0], x1 = ctr[1], x2 = ctr[2], x3 = ctr[3];
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, x0, hi0, lo0);
      mulhilo(0xCD9E8D57u, x2, hi1, lo1);
      const std::uint32_t n0 = hi1 ^ x1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ x3 ^ k1;
      const std::uint32_t n3 = lo0;
      x0 = n0; x1 = n1; x2 = n2; x3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out[0] = x0; out[1] = x1; out[2] = x2; out[3] = x3;
  }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  void fill_block() {
    const std::uint32_t ctr[4] = {ctr0_, ctr1_, block_lo_, block_hi_};
    const std::uint32_t key[2] = {key0_, key1_};
    raw_block(ctr, key, out_);
    if (++block_lo_ == 0) ++block_hi_;
  }

  std::uint32_t key0_, key1_, ctr0_, ctr1_;
  std::uint32_t block_lo_ = 0, block_hi_ = 0;
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int have_ = 0;
};

}  // namespace spikes
