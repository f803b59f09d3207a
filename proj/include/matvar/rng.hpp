#pragma once

#include <cstdint>
#include <random>

namespace matvar {

/// SplitMix64 finaliser; used to derive stream indices from tags.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

/// A reproducible random stream identified by (seed, stream_index).
/// The engine is seeded from all 128 bits of the pair, so distinct pairs give
/// unrelated sequences and equal pairs give identical ones.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_index);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_; }

  /// A child stream with the same seed and an index derived from this
  /// stream's index and the tag.
  RngStream derive(std::uint64_t tag) const;

  double normal();
  double uniform();
  double chisq(double dof);
  std::uint64_t poisson(double mean);
  /// Uniform integer in [0, bound).
  std::size_t index(std::size_t bound);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace matvar
