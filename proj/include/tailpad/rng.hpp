#pragma once

#include <bit>
#include <cstdint>
#include <random>

#include "tailpad/common.hpp"

namespace tailpad {

namespace detail {

// SplitMix64 finalizer; used for seed derivation only, never for output bits.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Source of unbiased random bits with an exact consumption counter.
//
// Everything downstream draws randomness exclusively through draw_bits /
// uniform_below, so `bits_consumed` is a faithful trace of how much
// randomness any operation used — the quantity the time-obliviousness
// audits assert on. The engine is std::mt19937_64, whose output sequence
// for a given seed is pinned by the C++ standard, so seeded runs are
// reproducible across platforms.
class BitSource {
 public:
  // Seeded-deterministic mode.
  explicit BitSource(std::uint64_t seed)
      : seed_(seed), engine_(detail::splitmix64(seed)) {}

  // System-entropy mode (non-reproducible).
  static BitSource from_system_entropy() {
    std::random_device rd;
    std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    return BitSource(s);
  }

  // Derives an independent, deterministic substream. Forking does not
  // consume bits from this source; substreams for distinct labels are
  // decorrelated by the splitmix finalizer.
  BitSource fork(std::uint64_t label) const {
    return BitSource(detail::splitmix64(seed_ ^ detail::splitmix64(label ^ 0xa5a5a5a5a5a5a5a5ULL)));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t bits_consumed() const { return bits_consumed_; }

  // Returns w uniform bits as the low bits of the result. 0 <= w <= 64;
  // w = 0 is allowed, returns 0 and consumes nothing (degenerate tables
  // with a single bucket draw zero index bits).
  std::uint64_t draw_bits(unsigned w) {
    check_internal(w <= 64, "draw_bits: width exceeds 64");
    std::uint64_t out = 0;
    unsigned got = 0;
    while (got < w) {
      if (buffered_ == 0) {
        buffer_ = engine_();
        buffered_ = 64;
      }
      unsigned take = w - got;
      if (take > buffered_) take = buffered_;
      out |= (buffer_ & mask(take)) << got;
      buffer_ = (take >= 64) ? 0 : (buffer_ >> take);
      buffered_ -= take;
      got += take;
    }
    bits_consumed_ += w;
    return out;
  }

  // Uniform over [1, d] by rejection on ceil(log2 d)-bit draws. The number
  // of rejection rounds is a function of the public value d alone, never of
  // private data, so the variable bit cost here leaks nothing sensitive.
  std::uint64_t uniform_below(std::uint64_t d) {
    check_internal(d >= 1, "uniform_below: d must be >= 1");
    if (d == 1) return 1;
    unsigned w = std::bit_width(d - 1);
    for (;;) {
      std::uint64_t v = draw_bits(w);
      if (v < d) return v + 1;
    }
  }

 private:
  static std::uint64_t mask(unsigned take) {
    return take >= 64 ? ~0ULL : ((1ULL << take) - 1);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t buffer_ = 0;
  unsigned buffered_ = 0;
  std::uint64_t bits_consumed_ = 0;
};

// Well-known substream labels used by the histogram release so that the
// three logically independent noise sources never interleave.
enum class StreamLabel : std::uint64_t {
  threshold = 1,  // per-entry noisy counts compared against tau
  blanket = 2,    // uniform draws for the padding set
  fresh = 3,      // released noisy counts
  size_search = 4 // unbounded-size estimation loop
};

inline BitSource fork(const BitSource& src, StreamLabel label) {
  return src.fork(static_cast<std::uint64_t>(label));
}

}  // namespace tailpad
