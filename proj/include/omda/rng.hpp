// Reproducible, stream-splittable random number generation.
#pragma once

#include <cstdint>

namespace omda {

// Counter-based generator: a SplitMix64 walk whose starting state is keyed by
// (seed, stream_id).  Identical keys reproduce identical draws; distinct
// stream_ids give streams that are independent for practical purposes, so
// replications parallelize by allocating ids, never by sharing a stream.
// Instances are single-owner and cheap to construct.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  double uniform();  // strictly inside (0, 1)
  double normal();   // standard normal (Box-Muller, second draw cached)

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace omda
