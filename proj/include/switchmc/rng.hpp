#pragma once

#include <cstdint>
#include <span>

namespace switchmc {

// Seeded random stream (PCG64, XSL-RR output). Two streams built from the
// same (seed, stream_id) replay the same sequence; distinct stream_ids select
// distinct LCG increments, giving independent substreams that can be handed
// to workers without coordination.
//
// Normal draws use Box-Muller with a fixed uniform consumption per call, so a
// stream's output is bit-reproducible on a given build. std::* distributions
// are implementation-defined and are not used.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53-bit resolution.
  double uniform01();
  // Uniform on the open interval (0,1); safe as a log/denominator argument.
  double uniform_open();

  // One standard normal draw.
  double normal();
  // Fills out with i.i.d. standard normals, consuming pairs.
  void fill_normal(std::span<double> out);

  // Exp(1) draw.
  double exponential();

 private:
  using u128 = unsigned __int128;

  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  u128 state_ = 0;
  u128 inc_ = 1;
};

}  // namespace switchmc
