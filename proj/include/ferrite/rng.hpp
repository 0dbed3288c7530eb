#pragma once

// Philox4x32-10 counter-based generator. Streams are keyed by
// (global seed, history index, purpose), so every history draws an
// independent, scheduling-invariant sequence.

#include <cstdint>

namespace ferrite {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t history, std::uint32_t purpose = 0)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32) ^ (purpose * 0x9e3779b9u)),
        hist_lo_(static_cast<std::uint32_t>(history)),
        hist_hi_(static_cast<std::uint32_t>(history >> 32)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  // uniform in [0, 1)
  double next_double() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  // uniform in (0, 1], safe as a log argument
  double next_open_double() { return 1.0 - next_double(); }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(draw_);
    std::uint32_t c1 = static_cast<std::uint32_t>(draw_ >> 32);
    std::uint32_t c2 = hist_lo_;
    std::uint32_t c3 = hist_hi_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t lo0, hi0, lo1, hi1;
      mulhilo(0xD2511F53u, c0, lo0, hi0);
      mulhilo(0xCD9E8D57u, c2, lo1, hi1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    block_[0] = c0;
    block_[1] = c1;
    block_[2] = c2;
    block_[3] = c3;
    ++draw_;
    pos_ = 0;
  }

  std::uint32_t key0_, key1_, hist_lo_, hist_hi_;
  std::uint64_t draw_ = 0;
  std::uint32_t block_[4] = {};
  int pos_ = 4;
};

}  // namespace ferrite
