#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

namespace affsim {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kAlcoveTol = 1e-12;

struct WeylElement {
  Mat matrix;                    // action on the orthonormal coordinates
  std::vector<int> permutation;  // (w h)_j = h_{permutation[j]} in trace coordinates
  int sign = 1;
};

// Point of the closed fundamental alcove.
struct AlcovePoint {
  Vec coords;
};

struct AlcoveFold {
  AlcovePoint point;
  bool interior = false;
};

// A dominant weight with everything the character sums need.
struct DominantWeight {
  std::vector<int> labels;
  Vec weight;
  Vec shifted;  // weight + rho
  double shifted_norm2 = 0;
  double dim = 1;
  std::vector<std::pair<Vec, int>> orbit;  // (w(weight+rho), det w)
};

class RootSystem;

namespace detail {
struct TableCache {
  std::mutex mu;
  std::map<long, std::unique_ptr<const std::vector<DominantWeight>>> dominant;
  std::map<long, std::unique_ptr<const std::vector<Vec>>> coroot;
  std::map<long, std::unique_ptr<const std::vector<Vec>>> weight;
  std::once_flag phi_once;
  double phi_constant = 0;
};
}  // namespace detail

class RootSystem {
 public:
  char family() const { return family_; }
  int rank() const { return rank_; }
  int trace_dim() const { return rank_ + 1; }
  int num_positive() const { return static_cast<int>(positive_.size()); }
  int dual_coxeter() const { return rank_ + 1; }

  const Mat& trace_basis() const { return basis_; }
  Vec to_trace(const Vec& x) const { return basis_ * x; }
  CVec to_trace(const CVec& x) const { return basis_.cast<cplx>() * x; }
  Vec from_trace(const Vec& h) const { return basis_.transpose() * h; }

  const std::vector<Vec>& simple_roots() const { return simple_; }
  const std::vector<Vec>& positive_roots() const { return positive_; }
  const std::vector<Vec>& coroots() const { return positive_; }
  const std::vector<Vec>& fundamental_weights() const { return fundamental_; }
  const std::vector<Vec>& alcove_vertices() const { return vertices_; }
  const std::vector<WeylElement>& weyl_group() const { return weyl_; }
  const Vec& rho() const { return rho_; }
  const Vec& theta() const { return theta_; }
  double rho_product() const { return rho_product_; }
  double coroot_covolume() const;
  double form(const Vec& a, const Vec& b) const { return a.dot(b); }

  // Distance from x to the boundary of the alcove scaled by t (negative outside).
  double wall_distance(const Vec& x, double t = 1.0) const;
  bool in_alcove(const Vec& x, double tol = kAlcoveTol) const;
  bool is_interior(const Vec& x, double tol = kAlcoveTol) const;
  Vec barycenter() const;

  detail::TableCache& cache() const { return *cache_; }

  friend RootSystem build_root_system(char family, int rank);

 private:
  RootSystem() = default;
  char family_ = 'A';
  int rank_ = 1;
  Mat basis_;
  std::vector<Vec> simple_, positive_, fundamental_, vertices_;
  std::vector<WeylElement> weyl_;
  Vec rho_, theta_;
  double rho_product_ = 1;
  std::shared_ptr<detail::TableCache> cache_;
};

RootSystem build_root_system(char family, int rank);

AlcoveFold fold_to_alcove(const RootSystem& rs, const Vec& x);
// Reflection-word fallback; exposed for testing.
AlcoveFold fold_by_reflections(const RootSystem& rs, const Vec& x, int max_iter = 10000);

std::vector<Vec> coroot_lattice_ball(const RootSystem& rs, double radius,
                                     std::size_t cap = 4'000'000);
std::vector<Vec> weight_lattice_ball(const RootSystem& rs, double radius,
                                     std::size_t cap = 4'000'000);
std::vector<Vec> dominant_weights_ball(const RootSystem& rs, double radius);
std::vector<DominantWeight> dominant_weight_table(const RootSystem& rs, double radius);

// Dominance test; returns Dynkin labels or throws DomainError.
std::vector<int> dynkin_labels(const RootSystem& rs, const Vec& lambda);
Vec weight_from_labels(const RootSystem& rs, const std::vector<int>& labels);
double weyl_dimension(const RootSystem& rs, const Vec& lambda);

// Cached tables; radius is rounded up to a multiple of 0.5.
const std::vector<DominantWeight>& cached_dominant(const RootSystem& rs, double radius);
const std::vector<Vec>& cached_coroots(const RootSystem& rs, double radius);
const std::vector<Vec>& cached_weights(const RootSystem& rs, double radius);

}  // namespace affsim
