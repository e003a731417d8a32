#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "affsim/rng.hpp"
#include "affsim/rootsys.hpp"

namespace affsim {

// su(n+1) with a basis orthonormal for (X, Y) = -tr(XY) / (4 pi^2);
// the first n elements span the Cartan subalgebra.
class LieAlgebra {
 public:
  explicit LieAlgebra(const RootSystem& rs);
  int dim() const { return static_cast<int>(basis_.size()); }
  int size() const { return m_; }
  const RootSystem& root_system() const { return *rs_; }
  CMat to_matrix(const Eigen::Ref<const Vec>& coords) const;
  Vec from_matrix(const CMat& X) const;
  const std::vector<CMat>& basis() const { return basis_; }

 private:
  const RootSystem* rs_;
  int m_;
  std::vector<CMat> basis_;
};

// exp of an anti-Hermitian traceless matrix; closed form for 2x2.
CMat exp_algebra(const CMat& X);

struct PathSample {
  double sigma = 1;
  Mat increments;  // dim x S
  std::uint64_t seed = 0, replica = 0;
  int steps() const { return static_cast<int>(increments.cols()); }
};

PathSample sample_bm_path(const LieAlgebra& alg, double sigma, int steps, RandomStream& rng);

struct GroupPath {
  CMat endpoint;
  std::vector<CMat> nodes;  // filled only on request, includes the identity
  int reorthonormalizations = 0;
};

// Lie-Euler scheme X_{k+1} = X_k exp(dx_k / lambda).
GroupPath stochastic_exponential(const LieAlgebra& alg, const Mat& increments, double lambda = 1.0,
                                 bool keep_nodes = false);

double unitarity_defect(const CMat& U);
AlcovePoint radial_part(const RootSystem& rs, const CMat& U);
CMat haar_sample(const RootSystem& rs, RandomStream& rng);
AlcovePoint rad_of_bm(const LieAlgebra& alg, double sigma, int steps, RandomStream& rng);

// Brownian sheet on [0,1] x t_grid stored as increments.
struct SheetSample {
  std::vector<double> t_grid;  // 0 < t_1 < ... < t_T
  Mat increments;              // dim x (S*T), column k*T + j
  int steps() const { return t_grid.empty() ? 0 : static_cast<int>(increments.cols() / t_grid.size()); }
};

SheetSample sample_sheet(const LieAlgebra& alg, int steps, const std::vector<double>& t_grid, RandomStream& rng);
std::vector<std::pair<double, AlcovePoint>> sheet_radial_process(const LieAlgebra& alg, const SheetSample& sheet);

// Gauge action of a loop (algebra coordinates on the S+1 grid nodes) on path increments.
Mat gauge_act(const LieAlgebra& alg, const std::vector<Vec>& loop, const Mat& increments, double lambda = 1.0);

// Binary sample dump: magic, version, family/rank, S, T, seed, dim, count,
// then little-endian float64 values in (sample, step, t, coordinate) order.
struct SampleDump {
  char family = 'A';
  std::uint32_t rank = 1;
  std::uint64_t steps = 0, times = 1, seed = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  std::vector<double> values;
};

void write_dump(const std::string& path, const SampleDump& dump);
SampleDump read_dump(const std::string& path);
SampleDump make_dump(const RootSystem& rs, std::span<const PathSample> paths, std::uint64_t seed);

}  // namespace affsim
