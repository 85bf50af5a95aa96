#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mcar {

// Philox4x32-10 counter-based generator. The 128-bit counter is split into a
// 64-bit stream id (high words) and a 64-bit block position (low words), so
// independent substreams are addressable without shared state.
class Philox {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 2) {
      Block ctr{static_cast<std::uint32_t>(pos_), static_cast<std::uint32_t>(pos_ >> 32),
                static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
      buf_ = rounds(ctr, key_);
      ++pos_;
      used_ = 0;
    }
    result_type r = (static_cast<result_type>(buf_[2 * used_ + 1]) << 32) | buf_[2 * used_];
    ++used_;
    return r;
  }

  static Block rounds(Block c, Key k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
      std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += W0;
      k[1] += W1;
    }
    return c;
  }

 private:
  Key key_;
  std::uint64_t stream_;
  std::uint64_t pos_ = 0;
  Block buf_{};
  int used_ = 2;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream ids for the library's uses.
enum class StreamTag : std::uint64_t { bootstrap = 1, split = 2, generate = 3, deletion = 4, repetition = 5 };

inline std::uint64_t stream_id(StreamTag tag, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(static_cast<std::uint64_t>(tag)) ^ a) ^ b);
}

inline Philox substream(std::uint64_t seed, StreamTag tag, std::uint64_t a, std::uint64_t b = 0) {
  return Philox(seed, stream_id(tag, a, b));
}

// Derived seed for nested procedures (e.g. a bootstrap inside a repetition).
inline std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t a, std::uint64_t b = 0) {
  Philox g(seed, stream_id(tag, a, b));
  return g();
}

}  // namespace mcar
