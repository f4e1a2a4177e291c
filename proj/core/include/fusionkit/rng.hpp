#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "fusionkit/types.hpp"

namespace fusionkit {

std::uint64_t splitmix64(std::uint64_t& state);

/// Seeded random stream with portable output. The engine (mt19937_64) and
/// every variate transform used here are fully specified, so a seed produces
/// the same draws on any platform. Distribution adaptors from <random> are
/// deliberately avoided: their output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent child stream, e.g. one per row or per replication.
  /// Streams derived from distinct (seed, stream) pairs do not collide.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  double uniform();       // [0, 1)
  double uniform_open();  // (0, 1)
  double normal();        // N(0, 1), inverse-CDF transform
  double exponential(double rate);

  /// Index h with probability probs[h] / sum(probs). Weights need not be
  /// normalised but must be nonnegative with a positive sum.
  int categorical(std::span<const double> probs);

  /// n x d matrix of independent N(0,1) draws, filled row by row.
  Matrix normal_matrix(Index rows, Index cols);

 private:
  std::mt19937_64 engine_;
};

}  // namespace fusionkit
