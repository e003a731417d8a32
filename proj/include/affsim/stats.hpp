#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "affsim/rootsys.hpp"

namespace affsim {

// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

struct TestResult {
  double stat = 0;
  double p = 1;
};

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);
TestResult ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf);
double wasserstein1(std::span<const double> a, std::span<const double> b);

// Energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'| (V-statistic).
double energy_distance(std::span<const Vec> a, std::span<const Vec> b);
// Permutation test on random subsamples of at most max_per_side points per side.
TestResult energy_test(std::span<const Vec> a, std::span<const Vec> b, int permutations, std::uint64_t seed,
                       std::size_t max_per_side = 1000);

struct TwoSampleStats {
  double ks_stat = 0, ks_p = 1;  // max over coordinates; p Bonferroni-adjusted
  double wasserstein1 = -1;      // rank-1 only, otherwise -1
  double energy_stat = 0, energy_p = 1;
};

TwoSampleStats two_sample_stats(std::span<const Vec> a, std::span<const Vec> b, std::uint64_t seed,
                                int permutations = 200);

struct ChiSquareResult {
  double stat = 0;
  int dof = 0;
  double p = 1;
};

// Pearson test of counts against cell probabilities (normalized internally).
ChiSquareResult chi_square(std::span<const long> counts, std::span<const double> probs);

struct MeanSE {
  double mean = 0, se = 0;
  long n = 0;
};
MeanSE mean_se(std::span<const double> v);

}  // namespace affsim
