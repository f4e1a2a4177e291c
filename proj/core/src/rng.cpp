#include "fusionkit/rng.hpp"

#include <cmath>

#include "fusionkit/errors.hpp"
#include "fusionkit/normal.hpp"

namespace fusionkit {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  // Run the seed through splitmix64 so that small consecutive seeds do not
  // produce correlated mt19937_64 states.
  std::uint64_t s = seed;
  engine_.seed(splitmix64(s));
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  std::uint64_t mixed = splitmix64(s);
  return Rng(mixed);
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return norm_quantile(uniform_open()); }

double Rng::exponential(double rate) {
  return -std::log(uniform_open()) / rate;
}

int Rng::categorical(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ValidationError("categorical: negative or NaN weight");
    total += p;
  }
  if (!(total > 0.0)) throw ValidationError("categorical: weights sum to zero");
  const double u = uniform() * total;
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t h = 0; h < probs.size(); ++h) {
    if (probs[h] > 0.0) last_positive = static_cast<int>(h);
    acc += probs[h];
    if (u < acc) return static_cast<int>(h);
  }
  return last_positive;
}

Matrix Rng::normal_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal();
  return m;
}

}  // namespace fusionkit
