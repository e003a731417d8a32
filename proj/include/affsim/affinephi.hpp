#pragma once

#include <utility>

#include "affsim/rootsys.hpp"
#include "affsim/series.hpp"

namespace affsim {

// Below this value of the time parameter the character expansion is used.
inline constexpr double kFormSwitch = 2 * kPi;

struct PhiArgs {
  double b = 1;
  CVec y;
  double a = 1;
  Vec x;
};

// Lattice-sum form. Throws SingularInputError when pi(-y/b) is too small.
ScaledComplex phi_hat_lattice_scaled(const RootSystem& rs, const PhiArgs& args, const Truncation& tr = {});
cplx phi_hat_lattice(const RootSystem& rs, const PhiArgs& args, const Truncation& tr = {});

// Character-sum form of phi_{d+y}(1/sigma, x/sigma) without the constant C.
ScaledComplex phi_hat_charsum_scaled(const RootSystem& rs, double sigma, const Vec& x, const CVec& y,
                                     const Truncation& tr = {});
cplx phi_hat_charsum(const RootSystem& rs, double sigma, const Vec& x, const CVec& y,
                     const Truncation& tr = {});

// C, calibrated once per root system by comparing the two forms.
double phi_char_constant(const RootSystem& rs);

// y -> 0 limit (b = 1), routed to the cheaper representation.
ScaledComplex phi_hat_d_scaled(const RootSystem& rs, double a, const Vec& x, const Truncation& tr = {});
ScaledComplex phi_hat_d_lattice_scaled(const RootSystem& rs, double a, const Vec& x, const Truncation& tr = {});
cplx phi_hat_d(const RootSystem& rs, double a, const Vec& x, const Truncation& tr = {});
// i^N, the constant phase of phi_d on the chamber.
cplx phi_d_phase(const RootSystem& rs);

// phi_{d+y}(a, x) with b = 1, routed.
ScaledComplex phi_hat_scaled(const RootSystem& rs, double a, const Vec& x, const CVec& y,
                             const Truncation& tr = {});
// phi_{d+y}(a, x) / phi_d(a, x)
cplx phi_ratio(const RootSystem& rs, double a, const Vec& x, const CVec& y, const Truncation& tr = {});

// (weight-lattice side, coroot-lattice side) of the theta identity.
std::pair<double, double> theta_pair(const RootSystem& rs, const Vec& x, double t, const Truncation& tr = {});

// grad_x log phi_d(t, x); BoundaryError within 1e-8 of a wall of tA (in x/t units).
Vec grad_log_phi_d(const RootSystem& rs, double t, const Vec& x, const Truncation& tr = {});

}  // namespace affsim
