#include <doctest.h>

#include <random>

#include "affsim/affinephi.hpp"
#include "affsim/charfun.hpp"
#include "affsim/errors.hpp"

using namespace affsim;

namespace {

Vec uniform_vec(std::mt19937_64& g, int n, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = U(g);
  return v;
}

// Uniform point in the alcove scaled by t.
Vec alcove_point(const RootSystem& rs, std::mt19937_64& g, double t) {
  std::exponential_distribution<double> E(1.0);
  std::vector<double> w(rs.rank() + 1);
  double s = 0;
  for (auto& v : w) s += (v = E(g));
  Vec x = Vec::Zero(rs.rank());
  for (int i = 0; i <= rs.rank(); ++i) x += (w[i] / s) * rs.alcove_vertices()[i];
  return t * x;
}

double phi_d_real(const RootSystem& rs, double a, const Vec& x) {
  return (phi_hat_d(rs, a, x) / phi_d_phase(rs)).real();
}

double log_phi_d(const RootSystem& rs, double a, const Vec& x) {
  auto v = phi_hat_d_scaled(rs, a, x);
  return std::log((v.mantissa / phi_d_phase(rs)).real()) + v.log_scale;
}

}  // namespace

TEST_CASE("character-sum constant equals 1/sqrt(n+1)") {
  for (int n = 1; n <= 3; ++n) {
    auto rs = build_root_system('A', n);
    CHECK(phi_char_constant(rs) == doctest::Approx(1 / std::sqrt(n + 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("lattice and character-sum forms agree") {
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> S(0.1, 0.4);
  for (int n = 1; n <= 2; ++n) {
    auto rs = build_root_system('A', n);
    double c = phi_char_constant(rs);
    int done = 0;
    while (done < 50) {
      Vec x = uniform_vec(g, n, -0.8, 0.8);
      Vec yr = uniform_vec(g, n, -0.8, 0.8);
      if (std::abs(pi_value(rs, x)) < 0.1 || std::abs(pi_value(rs, Vec(-yr))) < 0.5) continue;
      double sigma = S(g);
      CVec y = yr.cast<cplx>();
      auto lat = phi_hat_lattice_scaled(rs, {1.0, y, 1 / sigma, x / sigma});
      auto chs = phi_hat_charsum_scaled(rs, sigma, x, y);
      cplx q = ratio(lat, chs) / c;
      CHECK(std::abs(q - 1.0) < 1e-8);
      if (std::abs(q - 1.0) >= 1e-8)
        MESSAGE("x=" << x.transpose() << " y=" << yr.transpose() << " s=" << sigma << " lat cond "
                     << lat.abs_mantissa / std::abs(lat.mantissa) << " chs cond "
                     << chs.abs_mantissa / std::abs(chs.mantissa));
      ++done;
    }
  }
}

TEST_CASE("forms agree for complex y") {
  auto rs = build_root_system('A', 2);
  std::mt19937_64 g(9);
  for (int k = 0; k < 10; ++k) {
    Vec x = uniform_vec(g, 2, -0.5, 0.5);
    CVec y(2);
    for (int i = 0; i < 2; ++i) y(i) = cplx(uniform_vec(g, 1, -0.5, 0.5)(0), uniform_vec(g, 1, -0.3, 0.3)(0));
    if (std::abs(pi_value(rs, CVec(-y))) < 0.1) continue;
    cplx q = ratio(phi_hat_lattice_scaled(rs, {1.0, y, 4.0, Vec(4 * x)}), phi_hat_charsum_scaled(rs, 0.25, x, y));
    CHECK(std::abs(q / phi_char_constant(rs) - 1.0) < 1e-8);
  }
}

TEST_CASE("theta identity ratio is constant") {
  for (int n = 1; n <= 2; ++n) {
    auto rs = build_root_system('A', n);
    double lo = 1e300, hi = -1e300;
    for (double t : {0.1, 0.25, 0.5, 1.0, 2.0})
      for (int i = 0; i < 5; ++i) {
        Vec x = (0.17 * i) * rs.theta() + (0.05 * i * i) * rs.rho();
        auto [l, r] = theta_pair(rs, x, t);
        lo = std::min(lo, l / r);
        hi = std::max(hi, l / r);
      }
    CHECK((hi - lo) / lo <= 1e-10);
    CHECK(lo == doctest::Approx(std::sqrt(n + 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("phi_d vanishes on walls and is positive inside") {
  std::mt19937_64 g(4);
  for (int n = 1; n <= 2; ++n) {
    auto rs = build_root_system('A', n);
    for (double a : {0.3, 1.0, 3.0, 8.0}) {
      for (int k = 0; k < 20; ++k) {
        Vec x = alcove_point(rs, g, a);
        CHECK(phi_d_real(rs, a, x) > 0);
        // project onto a wall: either a simple-root wall or the affine wall
        Vec w = x;
        if (k % (n + 1) < n) {
          const Vec& al = rs.simple_roots()[k % (n + 1)];
          w -= 0.5 * al.dot(w) * al;
        } else {
          w -= 0.5 * (rs.theta().dot(w) - a) * rs.theta();
        }
        auto v = phi_hat_d_scaled(rs, a, w);
        CHECK(std::abs(v.mantissa) <= 1e-8 * v.abs_mantissa);
      }
    }
  }
}

TEST_CASE("the two representations of phi_d agree across the switch") {
  for (int n = 1; n <= 2; ++n) {
    auto rs = build_root_system('A', n);
    std::mt19937_64 g(17);
    for (double a : {3.0, 6.0, 9.0}) {
      Vec x = alcove_point(rs, g, a);
      auto l = phi_hat_d_lattice_scaled(rs, a, x);
      auto c = phi_hat_charsum_scaled(rs, 1 / a, x / a, CVec::Zero(n));
      c.mantissa *= phi_char_constant(rs);
      CHECK(std::abs(ratio(l, c) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("gradient of log phi_d") {
  for (int n = 1; n <= 2; ++n) {
    auto rs = build_root_system('A', n);
    std::mt19937_64 g(31);
    for (double t : {0.05, 0.4, 1.5, 7.0}) {
      for (int k = 0; k < 8; ++k) {
        Vec x = alcove_point(rs, g, t);
        if (rs.wall_distance(x / t) < 0.02) continue;
        Vec gr = grad_log_phi_d(rs, t, x);
        const double h = 1e-5 * t;
        for (int i = 0; i < n; ++i) {
          Vec e = Vec::Zero(n);
          e(i) = h;
          double fd = (log_phi_d(rs, t, x + e) - log_phi_d(rs, t, x - e)) / (2 * h);
          CHECK(std::abs(gr(i) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }
  auto a1 = build_root_system('A', 1);
  // the drift of b/t vanishes at the midpoint while the heat kernel is flat
  for (double t : {0.05, 0.3, 1.0}) {
    Vec mid = a1.barycenter() * t;
    CHECK(std::abs(grad_log_phi_d(a1, t, mid)(0) - mid(0) / t) < 1e-10);
  }
  CHECK_THROWS_AS(grad_log_phi_d(a1, 1.0, Vec(Vec::Zero(1))), BoundaryError);
}

TEST_CASE("phi_d is space-time harmonic") {
  for (int n = 1; n <= 2; ++n) {
    auto rs = build_root_system('A', n);
    std::mt19937_64 g(5);
    for (double t : {0.3, 1.0, 7.0}) {
      Vec x = alcove_point(rs, g, t);
      const double h = 2e-4 * t;
      const double l0 = log_phi_d(rs, t, x);
      auto f = [&](double tt, const Vec& xx) { return std::exp(log_phi_d(rs, tt, xx) - l0); };
      double lap = 0;
      for (int i = 0; i < n; ++i) {
        Vec e = Vec::Zero(n);
        e(i) = h;
        lap += (f(t, x + e) - 2 + f(t, x - e)) / (h * h);
      }
      double dt = (f(t + h, x) - f(t - h, x)) / (2 * h);
      double scale = std::abs(lap) + std::abs(dt) + 1 / (t * t);
      CHECK(std::abs(0.5 * lap + dt) <= 1e-4 * scale);
    }
  }
}

TEST_CASE("singular inputs") {
  auto rs = build_root_system('A', 1);
  Vec x(1);
  x(0) = 0.2;
  CHECK_THROWS_AS(phi_hat_lattice(rs, {1.0, CVec::Zero(1), 1.0, x}), SingularInputError);
  // the routed version falls back to the character form
  CHECK(std::isfinite(std::abs(phi_hat_scaled(rs, 8.0, x, CVec::Zero(1)).mantissa)));
}
