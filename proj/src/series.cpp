#include "affsim/series.hpp"

#include <limits>

#include "affsim/errors.hpp"

namespace affsim {

namespace {
double log_count(int n, double r) { return n * std::log(2.0 * std::sqrt(2.0) * r + 1.0); }
}  // namespace

double shell_tail(int n, double R, const ShellBound& b, double offset) {
  double total = 0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 1000000; ++k) {
    double r = R + k;
    double ub = r + 1;
    double lin_r = b.lin >= 0 ? ub : r;
    double rq = std::max(r, 0.0);
    double lt = log_count(n, ub + offset) + b.log_coef + b.lin * lin_r - b.quad * rq * rq;
    if (b.degree != 0) lt += b.degree * std::log(ub + b.poly_shift);
    double term = std::exp(lt);
    total += term;
    if (lt < prev && (term <= 1e-18 * total || lt < -745)) break;
    prev = lt;
  }
  return total;
}

double certified_radius(int n, const ShellBound& b, double tol, double cap, double offset) {
  for (double R = 0.5; R <= cap + 1e-12; R += 0.5)
    if (shell_tail(n, R, b, offset) <= tol) return R;
  throw PrecisionError("series truncation cannot meet the tail tolerance", shell_tail(n, cap, b, offset));
}

}  // namespace affsim
