#include "affsim/charfun.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "affsim/errors.hpp"

namespace affsim {

cplx pi_value(const RootSystem& rs, const CVec& x) {
  cplx p = 1;
  for (const auto& a : rs.positive_roots()) {
    cplx v = a.cast<cplx>().dot(x);  // dot conjugates the left operand; a is real
    p *= cplx(0, 2) * std::sin(kPi * v);
  }
  return p;
}

cplx pi_value(const RootSystem& rs, const Vec& x) {
  cplx p = 1;
  for (const auto& a : rs.positive_roots()) p *= cplx(0, 2 * std::sin(kPi * a.dot(x)));
  return p;
}

cplx h_value(const RootSystem& rs, const CVec& lambda) {
  cplx p = 1;
  for (const auto& a : rs.positive_roots()) p *= cplx(0, 2 * kPi) * a.cast<cplx>().dot(lambda);
  return p;
}

double root_product(const RootSystem& rs, const Vec& v) {
  double p = 1;
  for (const auto& a : rs.positive_roots()) p *= a.dot(v);
  return p;
}

cplx alternant(const std::vector<std::pair<Vec, int>>& orbit, const Vec& x) {
  double re = 0, im = 0;
  for (const auto& [v, s] : orbit) {
    double ph = 2 * kPi * v.dot(x);
    re += s * std::cos(ph);
    im += s * std::sin(ph);
  }
  return {re, im};
}

CharacterEvaluator::CharacterEvaluator(const RootSystem& rs, const CVec& x, int max_label_sum)
    : m_(rs.trace_dim()), weyl_(&rs.weyl_group()) {
  CVec h = rs.to_trace(x);
  const int K = max_label_sum + m_ + 1;
  h_.assign(K + 1, cplx(0));
  h_[0] = 1;
  // h_k(z_1..z_j) = h_k(z_1..z_{j-1}) + z_j h_{k-1}(z_1..z_j)
  for (int j = 0; j < m_; ++j) {
    cplx z = std::exp(cplx(0, 2 * kPi) * h(j));
    for (int k = 1; k <= K; ++k) h_[k] += z * h_[k - 1];
  }
}

cplx CharacterEvaluator::operator()(const std::vector<int>& labels) const {
  std::vector<int> part(m_, 0);
  for (int i = m_ - 2; i >= 0; --i) part[i] = part[i + 1] + labels[i];
  auto hk = [&](int k) -> cplx {
    if (k < 0) return 0;
    if (k >= static_cast<int>(h_.size())) throw InternalError("character degree out of range");
    return h_[k];
  };
  if (m_ == 2) return hk(part[0]);
  // Leibniz expansion: exact for integer entries, e.g. at the identity
  CMat M(m_, m_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) M(i, j) = hk(part[i] - i + j);
  ComplexCompensatedSum det;
  for (const auto& w : *weyl_) {
    cplx t = double(w.sign);
    for (int i = 0; i < m_ && t != 0.0; ++i) t *= M(i, w.permutation[i]);
    det.add(t);
  }
  return det.value();
}

cplx weyl_character(const RootSystem& rs, const Vec& lambda, const CVec& x) {
  auto labels = dynkin_labels(rs, lambda);
  int total = 0;
  for (int l : labels) total += l;
  return CharacterEvaluator(rs, x, total)(labels);
}

cplx weyl_character(const RootSystem& rs, const Vec& lambda, const Vec& x) {
  return weyl_character(rs, lambda, CVec(x.cast<cplx>()));
}

namespace {

double heat_series(const RootSystem& rs, double s, double sigma, const Vec& x, const Truncation& tr,
                   bool include_trivial) {
  if (!(s > 0) || !(sigma > 0)) throw DomainError("heat_kernel: s and sigma must be positive");
  const double c = 2 * kPi * kPi * s * sigma;
  const int N = rs.num_positive();
  const double rho2 = rs.rho().squaredNorm();
  ShellBound b;
  b.log_coef = c * rho2 - 2 * std::log(rs.rho_product()) + N * std::log(2.0);
  b.quad = c;
  b.degree = 2 * N;
  double R = certified_radius(rs.rank(), b, tr.tail_tol, tr.weight_radius, rs.rho().norm());
  const auto& table = cached_dominant(rs, R);
  int maxsum = 0;
  for (const auto& d : table) {
    int t = 0;
    for (int l : d.labels) t += l;
    maxsum = std::max(maxsum, t);
  }
  CharacterEvaluator ch(rs, CVec(x.cast<cplx>()), maxsum);
  ComplexCompensatedSum acc;
  for (const auto& d : table) {
    bool trivial = true;
    for (int l : d.labels) trivial = trivial && l == 0;
    if (trivial && !include_trivial) continue;
    acc.add(d.dim * ch(d.labels) * std::exp(-c * (d.shifted_norm2 - rho2)));
  }
  cplx v = acc.value();
  double scale = include_trivial ? 1.0 : std::max(std::abs(v), 1e-300);
  if (std::abs(v.imag()) > 1e-10 * std::max(1.0, scale))
    throw InternalError("heat kernel has a non-negligible imaginary part");
  return v.real();
}

}  // namespace

double heat_kernel(const RootSystem& rs, double s, double sigma, const Vec& x, const Truncation& tr) {
  return heat_series(rs, s, sigma, x, tr, true);
}

double heat_kernel_deviation(const RootSystem& rs, double s, double sigma, const Vec& x,
                             const Truncation& tr) {
  return heat_series(rs, s, sigma, x, tr, false);
}

double radial_density(const RootSystem& rs, double sigma, const Vec& z, const Truncation& tr) {
  if (!rs.in_alcove(z)) return 0;
  double p2 = std::norm(pi_value(rs, z));
  return heat_kernel(rs, 1.0, sigma, z, tr) * p2;
}

namespace {

double nested_gk(int depth, int n, std::vector<double>& u,
                 const std::function<double(const std::vector<double>&)>& g, double tol) {
  using boost::math::quadrature::gauss_kronrod;
  auto inner = [&](double t) {
    u[depth] = t;
    if (depth + 1 == n) return g(u);
    return nested_gk(depth + 1, n, u, g, tol);
  };
  return gauss_kronrod<double, 15>::integrate(inner, 0.0, 1.0, 12, tol);
}

}  // namespace

double integrate_alcove(const RootSystem& rs, const std::function<double(const Vec&)>& f,
                        double rel_tol) {
  const int n = rs.rank();
  const auto& V = rs.alcove_vertices();
  Mat E(n, n);
  for (int k = 0; k < n; ++k) E.col(k) = V[k + 1] - V[0];
  const double vol_jac = std::abs(E.determinant());
  auto g = [&](const std::vector<double>& u) {
    Vec p = V[0];
    double rem = 1, jac = 1;
    for (int k = 0; k < n; ++k) {
      if (k > 0) jac *= rem;
      double bk = rem * u[k];
      p += bk * E.col(k);
      rem *= 1 - u[k];
    }
    return f(p) * jac;
  };
  std::vector<double> u(n, 0.0);
  return vol_jac * nested_gk(0, n, u, g, rel_tol);
}

double radial_normalizer(const RootSystem& rs, double sigma, const Truncation& tr) {
  return integrate_alcove(rs, [&](const Vec& z) { return radial_density(rs, sigma, z, tr); }, 1e-9);
}

double removable_limit(const std::function<double(const Vec&)>& f, const Vec& x, int order,
                       double scale) {
  const int n = static_cast<int>(x.size());
  Vec u(n);
  for (int i = 0; i < n; ++i) u(i) = std::sqrt(2.0 + i) - 1.0 + 0.1 * i;
  u.normalize();
  double eps = std::pow(2.2e-16, 1.0 / (order + 4)) * scale;
  auto sym = [&](double e) { return 0.5 * (f(x + e * u) + f(x - e * u)); };
  return (4 * sym(eps / 2) - sym(eps)) / 3;
}

double kirillov_ratio(const RootSystem& rs, const Vec& x, const Vec& lambda) {
  const double hl = root_product(rs, lambda);
  double lam_scale = std::max(1.0, lambda.norm());
  if (std::abs(hl) < 1e-12 * std::pow(lam_scale, rs.num_positive()))
    throw DomainError("kirillov_ratio: lambda lies on a root hyperplane");
  if (x.squaredNorm() == 0) return 1.0;

  std::vector<Vec> wl;
  for (const auto& w : rs.weyl_group()) wl.push_back(w.matrix * lambda);
  auto raw = [&](const Vec& y) {
    // log-sum with shift for stability
    double mx = -1e300;
    for (const auto& v : wl) mx = std::max(mx, v.dot(y));
    CompensatedSum acc;
    for (std::size_t i = 0; i < wl.size(); ++i)
      acc.add(rs.weyl_group()[i].sign * std::exp(wl[i].dot(y) - mx));
    return acc.value() * std::exp(mx) * rs.rho_product() / (root_product(rs, y) * hl);
  };
  int order = 0;
  double xs = std::max(x.norm(), 1e-300);
  for (const auto& a : rs.positive_roots())
    if (std::abs(a.dot(x)) < 1e-4 * xs / lam_scale) ++order;
  if (xs * lam_scale < 1e-3) order = rs.num_positive();
  if (order == 0) return raw(x);
  return removable_limit(raw, x, order, 1.0 / lam_scale);
}

}  // namespace affsim
