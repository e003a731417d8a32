#pragma once

#include <cmath>
#include <complex>

namespace affsim {

// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0, comp_ = 0;
};

class ComplexCompensatedSum {
 public:
  void add(std::complex<double> z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  std::complex<double> value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_, im_;
};

// Value represented as mantissa * exp(log_scale).
struct ScaledComplex {
  std::complex<double> mantissa;
  double log_scale = 0;
  double abs_mantissa = 0;  // sum of |terms| on the same scale
  std::complex<double> value() const { return mantissa * std::exp(log_scale); }
};

inline std::complex<double> ratio(const ScaledComplex& a, const ScaledComplex& b) {
  return (a.mantissa / b.mantissa) * std::exp(a.log_scale - b.log_scale);
}

// Pointwise majorant of |term| at lattice norm r:
//   exp(log_coef + lin*r - quad*r^2) * (r + poly_shift)^degree.
struct ShellBound {
  double log_coef = 0;
  double lin = 0;
  double quad = 0;
  double degree = 0;
  double poly_shift = 0;
};

struct Truncation {
  double weight_radius = 40;
  double lattice_radius = 60;
  double tail_tol = 1e-15;
};

// Bound on the sum of |term| over lattice points (rank n, contained in the
// weight lattice translated by `offset`) with norm > R.
double shell_tail(int n, double R, const ShellBound& b, double offset = 0);

// Smallest radius (step 0.5, at most cap) whose tail is below tol.
// Throws PrecisionError with the bound reached at cap.
double certified_radius(int n, const ShellBound& b, double tol, double cap, double offset = 0);

}  // namespace affsim
