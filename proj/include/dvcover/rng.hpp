#pragma once

#include <array>
#include <cstdint>

namespace dvcover {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

enum class Stream : std::uint32_t {
  position = 0,
  mark = 1,
};

/// Uniform draws keyed by (seed, stream, index); evaluation order never matters.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Uniform in [0,1) with 53 random bits.
  [[nodiscard]] double uniform(Stream stream, std::uint64_t index) const {
    const auto out = Philox4x32::block(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
         static_cast<std::uint32_t>(stream), 0u},
        key_);
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(out[0]) << 21) ^ (static_cast<std::uint64_t>(out[1]) >> 11);
    return static_cast<double>(bits) * 0x1.0p-53;
  }

 private:
  Philox4x32::Key key_;
};

inline Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

}  // namespace dvcover
