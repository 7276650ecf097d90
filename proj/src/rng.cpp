#include "switchmc/rng.hpp"

#include <cmath>

namespace switchmc {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// SplitMix64, used only to expand (seed, stream_id) into generator state.
std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kPcgMulHi = 2549297995355413924ULL;
constexpr std::uint64_t kPcgMulLo = 4865540595714422341ULL;

std::uint64_t rotr64(std::uint64_t v, unsigned rot) {
  return (v >> rot) | (v << ((-rot) & 63u));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  const u128 mul = (u128(kPcgMulHi) << 64) | kPcgMulLo;

  // Both the state and the increment depend on (seed, stream_id): streams of
  // one LCG family that share a state and differ only in the increment have
  // deterministically related state sequences, so the id is folded into the
  // state as well. The id scramble is bijective, which keeps distinct ids on
  // distinct streams for any fixed seed.
  std::uint64_t s = seed;
  std::uint64_t id_key = stream_id * 0x9e3779b97f4a7c15ULL + 0xda3e39cb94b95bdbULL;
  std::uint64_t x = splitmix64(s) ^ splitmix64(id_key);
  const u128 init_state = (u128(splitmix64(x)) << 64) | splitmix64(x);
  const u128 init_seq = (u128(splitmix64(x)) << 64) | splitmix64(x);

  inc_ = (init_seq << 1) | 1;
  state_ = 0;
  state_ = state_ * mul + inc_;
  state_ += init_state;
  state_ = state_ * mul + inc_;
}

std::uint64_t RngStream::next_u64() {
  const u128 mul = (u128(kPcgMulHi) << 64) | kPcgMulLo;
  const u128 old = state_;
  state_ = old * mul + inc_;
  const std::uint64_t xored = static_cast<std::uint64_t>(old >> 64) ^
                              static_cast<std::uint64_t>(old);
  const unsigned rot = static_cast<unsigned>(old >> 122);
  return rotr64(xored, rot);
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

double RngStream::normal() {
  const double r = std::sqrt(-2.0 * std::log(uniform_open()));
  return r * std::cos(kTwoPi * uniform01());
}

void RngStream::fill_normal(std::span<double> out) {
  std::size_t i = 0;
  while (i + 2 <= out.size()) {
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    const double a = kTwoPi * uniform01();
    out[i] = r * std::cos(a);
    out[i + 1] = r * std::sin(a);
    i += 2;
  }
  if (i < out.size()) out[i] = normal();
}

double RngStream::exponential() { return -std::log(uniform_open()); }

}  // namespace switchmc
