#include "affsim/affinephi.hpp"

#include <cmath>

#include "affsim/charfun.hpp"
#include "affsim/errors.hpp"

namespace affsim {

namespace {

constexpr cplx kI(0, 1);

cplx bilinear(const CVec& u, const CVec& v) { return u.cwiseProduct(v).sum(); }

int label_sum_max(const std::vector<DominantWeight>& table) {
  int m = 0;
  for (const auto& d : table) {
    int t = 0;
    for (int l : d.labels) t += l;
    m = std::max(m, t);
  }
  return m;
}

ShellBound charsum_bound(const RootSystem& rs, double sigma, double im_y, int extra_degree) {
  const int N = rs.num_positive();
  const double c = 2 * kPi * kPi * sigma;
  const double rn = rs.rho().norm();
  ShellBound b;
  b.log_coef = std::log(double(rs.weyl_group().size())) + 0.5 * N * std::log(2.0) -
               std::log(rs.rho_product()) + c * rn * rn + 2 * kPi * rn * im_y;
  if (extra_degree) b.log_coef += std::log(2 * kPi);
  b.lin = 2 * kPi * im_y;
  b.quad = c;
  b.degree = N + extra_degree;
  return b;
}

// Product over positive roots and its gradient.
double root_product_grad(const RootSystem& rs, const Vec& v, Vec& grad) {
  const auto& R = rs.positive_roots();
  const std::size_t N = R.size();
  std::vector<double> val(N), pre(N + 1, 1.0), suf(N + 1, 1.0);
  for (std::size_t i = 0; i < N; ++i) val[i] = R[i].dot(v);
  for (std::size_t i = 0; i < N; ++i) pre[i + 1] = pre[i] * val[i];
  for (std::size_t i = N; i-- > 0;) suf[i] = suf[i + 1] * val[i];
  grad.setZero(v.size());
  for (std::size_t i = 0; i < N; ++i) grad += (pre[i] * suf[i + 1]) * R[i];
  return pre[N];
}

void check_positive(double v, const char* what) {
  if (!(v > 0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

}  // namespace

ScaledComplex phi_hat_lattice_scaled(const RootSystem& rs, const PhiArgs& args, const Truncation& tr) {
  check_positive(args.a, "a");
  check_positive(args.b, "b");
  const double a = args.a, b = args.b;
  const Vec& x = args.x;
  cplx piy = pi_value(rs, CVec(-args.y / b));
  if (std::abs(piy) < 1e-10) throw SingularInputError("phi_hat_lattice: pi(-y/b) vanishes");

  const auto& W = rs.weyl_group();
  std::vector<CVec> u;
  double eref = -1e300;
  for (const auto& w : W) {
    u.push_back(w.matrix.transpose().cast<cplx>() * args.y);
    eref = std::max(eref, bilinear(x.cast<cplx>(), u.back()).real());
  }
  const double yr = args.y.real().norm();
  ShellBound sb;
  sb.log_coef = std::log(double(W.size())) + yr * x.norm() - eref;
  sb.lin = a * yr + b * x.norm();
  sb.quad = 0.5 * a * b;
  double R = certified_radius(rs.rank(), sb, tr.tail_tol, tr.lattice_radius);
  const auto& gam = cached_coroots(rs, R);

  std::vector<cplx> ex;
  ex.reserve(gam.size() * W.size());
  double shift = -1e300;
  for (const auto& g : gam) {
    CVec v = (x + a * g).cast<cplx>();
    double base = -b * (x.dot(g) + 0.5 * a * g.squaredNorm());
    for (std::size_t i = 0; i < W.size(); ++i) {
      cplx e = bilinear(v, u[i]) + base;
      ex.push_back(e);
      shift = std::max(shift, e.real());
    }
  }
  ComplexCompensatedSum acc;
  double abs_acc = 0;
  std::size_t k = 0;
  for (std::size_t gi = 0; gi < gam.size(); ++gi)
    for (std::size_t i = 0; i < W.size(); ++i, ++k) {
      cplx t = double(W[i].sign) * std::exp(ex[k] - shift);
      acc.add(t);
      abs_acc += std::abs(t);
    }
  return {acc.value() / piy, shift, abs_acc / std::abs(piy)};
}

cplx phi_hat_lattice(const RootSystem& rs, const PhiArgs& args, const Truncation& tr) {
  return phi_hat_lattice_scaled(rs, args, tr).value();
}

ScaledComplex phi_hat_charsum_scaled(const RootSystem& rs, double sigma, const Vec& x, const CVec& y,
                                     const Truncation& tr) {
  check_positive(sigma, "sigma");
  const double c = 2 * kPi * kPi * sigma;
  const double rho2 = rs.rho().squaredNorm();
  const double im_y = y.imag().norm();
  double R = certified_radius(rs.rank(), charsum_bound(rs, sigma, im_y, 0), tr.tail_tol, tr.weight_radius,
                              rs.rho().norm());
  const auto& table = cached_dominant(rs, R);
  const bool yzero = y.squaredNorm() == 0;
  std::unique_ptr<CharacterEvaluator> ch;
  if (!yzero) ch = std::make_unique<CharacterEvaluator>(rs, CVec(-y), label_sum_max(table));
  const double nw = double(rs.weyl_group().size());

  ComplexCompensatedSum acc;
  double abs_acc = 0;
  for (const auto& d : table) {
    double w = std::exp(-c * (d.shifted_norm2 - rho2));
    cplx cm = yzero ? cplx(d.dim) : (*ch)(d.labels);
    acc.add(alternant(d.orbit, x) * cm * w);
    abs_acc += nw * std::abs(cm) * w;
  }
  cplx yy = bilinear(y, y);
  double log_scale = 0.5 * rs.rank() * std::log(2 * kPi * sigma) + x.squaredNorm() / (2 * sigma) +
                     yy.real() / (2 * sigma) - c * rho2;
  cplx phase = std::exp(kI * (yy.imag() / (2 * sigma)));
  return {acc.value() * phase, log_scale, abs_acc};
}

cplx phi_hat_charsum(const RootSystem& rs, double sigma, const Vec& x, const CVec& y, const Truncation& tr) {
  return phi_hat_charsum_scaled(rs, sigma, x, y, tr).value();
}

double phi_char_constant(const RootSystem& rs) {
  auto& cache = rs.cache();
  std::call_once(cache.phi_once, [&] {
    const int n = rs.rank();
    Vec x(n);
    CVec y(n);
    for (int i = 0; i < n; ++i) {
      x(i) = 0.13 + 0.07 * i;
      y(i) = cplx(0.21 - 0.05 * i, 0);
    }
    // the lattice form cancels heavily unless sigma is small
    const double sigma = std::min(0.2, 1.0 / (kPi * kPi * rs.rho().squaredNorm()));
    auto lat = phi_hat_lattice_scaled(rs, {1.0, y, 1.0 / sigma, x / sigma});
    auto chs = phi_hat_charsum_scaled(rs, sigma, x, y);
    cplx c = ratio(lat, chs);
    if (std::abs(c.imag()) > 1e-8 * std::abs(c)) throw InternalError("phi constant is not real");
    cache.phi_constant = c.real();
  });
  return cache.phi_constant;
}

cplx phi_d_phase(const RootSystem& rs) { return std::pow(kI, rs.num_positive()); }

ScaledComplex phi_hat_d_lattice_scaled(const RootSystem& rs, double a, const Vec& x, const Truncation& tr) {
  check_positive(a, "a");
  const int N = rs.num_positive();
  ShellBound sb;
  sb.lin = x.norm();
  sb.quad = 0.5 * a;
  sb.degree = N;
  sb.poly_shift = x.norm() / a;
  double R = certified_radius(rs.rank(), sb, tr.tail_tol, tr.lattice_radius);
  const auto& gam = cached_coroots(rs, R);
  double shift = -1e300;
  std::vector<double> ex(gam.size());
  for (std::size_t i = 0; i < gam.size(); ++i) {
    ex[i] = -x.dot(gam[i]) - 0.5 * a * gam[i].squaredNorm();
    shift = std::max(shift, ex[i]);
  }
  CompensatedSum acc;
  double abs_acc = 0;
  for (std::size_t i = 0; i < gam.size(); ++i) {
    double t = std::exp(ex[i] - shift) * root_product(rs, x + a * gam[i]);
    acc.add(t);
    abs_acc += std::abs(t);
  }
  double kmag = std::pow(2 * kPi, -N) / rs.rho_product();
  cplx kappa = phi_d_phase(rs) * kmag;
  return {kappa * acc.value(), shift, kmag * abs_acc};
}

ScaledComplex phi_hat_d_scaled(const RootSystem& rs, double a, const Vec& x, const Truncation& tr) {
  check_positive(a, "a");
  if (a >= kFormSwitch) return phi_hat_d_lattice_scaled(rs, a, x, tr);
  auto v = phi_hat_charsum_scaled(rs, 1.0 / a, x / a, CVec::Zero(rs.rank()), tr);
  double c = phi_char_constant(rs);
  v.mantissa *= c;
  v.abs_mantissa *= c;
  return v;
}

cplx phi_hat_d(const RootSystem& rs, double a, const Vec& x, const Truncation& tr) {
  return phi_hat_d_scaled(rs, a, x, tr).value();
}

ScaledComplex phi_hat_scaled(const RootSystem& rs, double a, const Vec& x, const CVec& y, const Truncation& tr) {
  check_positive(a, "a");
  if (a >= kFormSwitch && std::abs(pi_value(rs, CVec(-y))) >= 1e-6)
    return phi_hat_lattice_scaled(rs, {1.0, y, a, x}, tr);
  auto v = phi_hat_charsum_scaled(rs, 1.0 / a, x / a, y, tr);
  double c = phi_char_constant(rs);
  v.mantissa *= c;
  v.abs_mantissa *= c;
  return v;
}

cplx phi_ratio(const RootSystem& rs, double a, const Vec& x, const CVec& y, const Truncation& tr) {
  check_positive(a, "a");
  if (a < kFormSwitch)
    return ratio(phi_hat_charsum_scaled(rs, 1.0 / a, x / a, y, tr),
                 phi_hat_charsum_scaled(rs, 1.0 / a, x / a, CVec::Zero(rs.rank()), tr));
  return ratio(phi_hat_scaled(rs, a, x, y, tr), phi_hat_d_lattice_scaled(rs, a, x, tr));
}

std::pair<double, double> theta_pair(const RootSystem& rs, const Vec& x, double t, const Truncation& tr) {
  check_positive(t, "t");
  const int n = rs.rank();
  ShellBound lb;
  lb.quad = 2 * kPi * kPi * t;
  double R1 = certified_radius(n, lb, tr.tail_tol, tr.weight_radius);
  CompensatedSum lhs;
  for (const auto& mu : cached_weights(rs, R1))
    lhs.add(std::cos(2 * kPi * mu.dot(x)) * std::exp(-2 * kPi * kPi * t * mu.squaredNorm()));

  ShellBound rb;
  rb.log_coef = -x.squaredNorm() / (2 * t);
  rb.lin = x.norm() / t;
  rb.quad = 1 / (2 * t);
  double R2 = certified_radius(n, rb, tr.tail_tol, tr.lattice_radius);
  CompensatedSum rhs;
  for (const auto& z : cached_coroots(rs, R2)) rhs.add(std::exp(-(x + z).squaredNorm() / (2 * t)));
  return {lhs.value(), std::pow(2 * kPi * t, -0.5 * n) * rhs.value()};
}

Vec grad_log_phi_d(const RootSystem& rs, double t, const Vec& x, const Truncation& tr) {
  check_positive(t, "t");
  if (!(rs.wall_distance(x / t) >= 1e-8)) throw BoundaryError("grad_log_phi_d: point too close to a wall");
  const int n = rs.rank();
  if (t < kFormSwitch) {
    const double sigma = 1.0 / t;
    const double c = 2 * kPi * kPi * sigma;
    const double rho2 = rs.rho().squaredNorm();
    double R = certified_radius(n, charsum_bound(rs, sigma, 0, 1), tr.tail_tol, tr.weight_radius,
                                rs.rho().norm());
    Vec z = x / t;
    CompensatedSum s;
    std::vector<CompensatedSum> g(n);
    for (const auto& d : cached_dominant(rs, R)) {
      double w = d.dim * std::exp(-c * (d.shifted_norm2 - rho2));
      // phi_d is i^N times a real function; work with the imaginary/real part accordingly
      cplx sa = 0;
      CVec ga = CVec::Zero(n);
      for (const auto& [v, sg] : d.orbit) {
        cplx e = double(sg) * std::exp(kI * (2 * kPi * v.dot(z)));
        sa += e;
        ga += (kI * 2.0 * kPi * e) * v.cast<cplx>();
      }
      cplx ph = std::conj(phi_d_phase(rs));
      s.add(w * (sa * ph).real());
      for (int i = 0; i < n; ++i) g[i].add(w * (ga(i) * ph).real());
    }
    Vec grad(n);
    for (int i = 0; i < n; ++i) grad(i) = g[i].value() / s.value();
    return x / t + grad / t;
  }
  const int N = rs.num_positive();
  ShellBound sb;
  sb.lin = x.norm();
  sb.quad = 0.5 * t;
  sb.degree = N + 1;
  sb.poly_shift = std::max(double(N), x.norm() / t + 1.0 / (std::sqrt(2.0) * t));
  double R = certified_radius(n, sb, tr.tail_tol, tr.lattice_radius);
  const auto& gam = cached_coroots(rs, R);
  double shift = -1e300;
  for (const auto& g : gam) shift = std::max(shift, -x.dot(g) - 0.5 * t * g.squaredNorm());
  CompensatedSum s;
  std::vector<CompensatedSum> gs(n);
  Vec gh(n);
  for (const auto& g : gam) {
    double e = std::exp(-x.dot(g) - 0.5 * t * g.squaredNorm() - shift);
    double hv = root_product_grad(rs, x + t * g, gh);
    s.add(e * hv);
    Vec term = e * (gh - hv * g);
    for (int i = 0; i < n; ++i) gs[i].add(term(i));
  }
  Vec grad(n);
  for (int i = 0; i < n; ++i) grad(i) = gs[i].value() / s.value();
  return grad;
}

}  // namespace affsim
