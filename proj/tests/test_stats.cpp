#include <doctest.h>

#include "affsim/errors.hpp"
#include "affsim/rng.hpp"
#include "affsim/stats.hpp"

using namespace affsim;

namespace {
std::vector<double> normals(std::uint64_t seed, std::uint64_t rep, int n, double mu = 0) {
  RandomStream r(seed, rep, Purpose::misc);
  std::vector<double> v(n);
  for (auto& x : v) x = mu + r.normal();
  return v;
}
}  // namespace

TEST_CASE("kolmogorov distribution reference values") {
  // reference values from an independent implementation
  const double ref[][2] = {{0.3, 0.9999906941986655}, {0.5, 0.9639452436648751}, {1.0, 0.26999967167735456},
                           {1.18, 0.1234538094297657}, {1.36, 0.049485876755377876}, {2.0, 0.0006709252557796953}};
  for (auto& r : ref) CHECK(kolmogorov_sf(r[0]) == doctest::Approx(r[1]).epsilon(1e-10));
  CHECK(kolmogorov_sf(0) == 1.0);
}

TEST_CASE("ks on identical samples") {
  auto a = normals(1, 0, 500);
  auto r = ks_two_sample(a, a);
  CHECK(r.stat == 0);
  CHECK(r.p == 1);
  CHECK(wasserstein1(a, a) == 0);
  std::vector<double> small(50, 0.0);
  CHECK_THROWS_AS(ks_two_sample(small, a), StatisticsError);
}

TEST_CASE("ks calibration and power") {
  int pass = 0;
  for (int rep = 0; rep < 100; ++rep) {
    auto a = normals(2, 2 * rep, 10000), b = normals(2, 2 * rep + 1, 10000);
    pass += ks_two_sample(a, b).p > 0.01;
  }
  CHECK(pass >= 98);
  auto a = normals(3, 0, 10000), b = normals(3, 1, 10000, 0.5);
  CHECK(ks_two_sample(a, b).p < 1e-6);
}

TEST_CASE("one-sample ks and wasserstein") {
  auto a = normals(4, 0, 20000);
  auto r = ks_one_sample(a, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); });
  CHECK(r.p > 0.001);
  auto b = normals(4, 1, 20000, 0.3);
  CHECK(wasserstein1(a, b) == doctest::Approx(0.3).epsilon(0.1));
  std::vector<double> x{0, 1}, y{2, 3};
  CHECK(wasserstein1(x, y) == doctest::Approx(2.0));
}

TEST_CASE("energy distance and permutation test") {
  RandomStream r(5, 0, Purpose::misc);
  std::vector<Vec> a(600), b(600), c(600);
  for (auto& v : a) v = Vec::NullaryExpr(2, [&] { return r.normal(); });
  for (auto& v : b) v = Vec::NullaryExpr(2, [&] { return r.normal(); });
  for (auto& v : c) v = Vec::NullaryExpr(2, [&] { return r.normal() + 0.4; });
  auto same = energy_test(a, b, 200, 9);
  CHECK(same.p > 0.01);
  auto diff = energy_test(a, c, 200, 9);
  CHECK(diff.p < 0.01);
  CHECK(energy_distance(a, a) == doctest::Approx(0.0).scale(1));
  // rank-1 energy distance equals twice the integral of (F - G)^2
  std::vector<Vec> p{Vec::Constant(1, 0.0)}, q{Vec::Constant(1, 1.0)};
  CHECK(energy_distance(p, q) == doctest::Approx(2.0));
  auto s = two_sample_stats(a, b, 3);
  CHECK(s.wasserstein1 == -1);
  CHECK(s.energy_p > 0.01);
  std::vector<Vec> flat(200, Vec::Zero(2));
  CHECK_THROWS_AS(energy_test(flat, flat, 10, 1), StatisticsError);
}

TEST_CASE("chi square") {
  std::vector<long> counts{10, 20, 30, 40};
  std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
  auto r = chi_square(counts, probs);
  CHECK(r.stat == doctest::Approx(0.0).scale(1));
  CHECK(r.p == doctest::Approx(1.0));
  CHECK(r.dof == 3);
  std::vector<long> c2{30, 20, 30, 20};
  auto r2 = chi_square(c2, probs);
  CHECK(r2.stat == doctest::Approx(40.0 + 0 + 0 + 10.0));
}
