#pragma once

#include <functional>
#include <vector>

#include "affsim/rootsys.hpp"
#include "affsim/series.hpp"

namespace affsim {

// prod over positive roots of (e^{i pi a(x)} - e^{-i pi a(x)})
cplx pi_value(const RootSystem& rs, const CVec& x);
cplx pi_value(const RootSystem& rs, const Vec& x);
// prod over positive roots of 2 i pi a(lambda)
cplx h_value(const RootSystem& rs, const CVec& lambda);
// prod over positive roots of a(v)
double root_product(const RootSystem& rs, const Vec& v);

// sum_w det(w) exp(2 pi i (w v, x)) for a precomputed orbit of v
cplx alternant(const std::vector<std::pair<Vec, int>>& orbit, const Vec& x);

// Characters at a fixed torus point, via complete homogeneous symmetric
// polynomials, so root hyperplanes need no special handling.
class CharacterEvaluator {
 public:
  CharacterEvaluator(const RootSystem& rs, const CVec& x, int max_label_sum);
  cplx operator()(const std::vector<int>& labels) const;

 private:
  int m_;
  const std::vector<WeylElement>* weyl_;
  std::vector<cplx> h_;
};

cplx weyl_character(const RootSystem& rs, const Vec& lambda, const CVec& x);
cplx weyl_character(const RootSystem& rs, const Vec& lambda, const Vec& x);

// p_s^sigma(e^x); precision error when the tail bound cannot be met within caps.
double heat_kernel(const RootSystem& rs, double s, double sigma, const Vec& x,
                   const Truncation& tr = {});
// p_s^sigma(e^x) - 1, summed without the trivial term.
double heat_kernel_deviation(const RootSystem& rs, double s, double sigma, const Vec& x,
                             const Truncation& tr = {});

double radial_density(const RootSystem& rs, double sigma, const Vec& z, const Truncation& tr = {});
double radial_normalizer(const RootSystem& rs, double sigma, const Truncation& tr = {});

// Integral over the alcove simplex with adaptive Gauss-Kronrod in collapsed coordinates.
double integrate_alcove(const RootSystem& rs, const std::function<double(const Vec&)>& f,
                        double rel_tol = 1e-9);

// Normalised orbital Fourier transform; tends to 1 as x -> 0.
double kirillov_ratio(const RootSystem& rs, const Vec& x, const Vec& lambda);

// Limit of f at x along a fixed generic direction, used when f has a
// removable singularity at x of the given vanishing order.
double removable_limit(const std::function<double(const Vec&)>& f, const Vec& x, int order,
                       double scale = 1.0);

}  // namespace affsim
