#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace affsim {

// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

enum class Purpose : std::uint64_t {
  bm_path = 1,
  haar = 2,
  sheet = 3,
  entrance = 4,
  conditioned = 5,
  weighted = 6,
  permutation = 7,
  subsample = 8,
  misc = 9,
};

// Independent stream keyed by (seed, replica, purpose); draws are a pure
// function of the key and the draw index.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t replica, Purpose purpose);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  double uniform();  // in (0, 1)
  double normal() { return normal_(*this); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t replica() const { return replica_; }

 private:
  std::uint64_t seed_, replica_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  std::normal_distribution<double> normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace affsim
