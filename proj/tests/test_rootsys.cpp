#include <doctest.h>

#include <random>
#include <set>

#include "affsim/errors.hpp"
#include "affsim/rootsys.hpp"

using namespace affsim;

TEST_CASE("configuration errors name the field") {
  try {
    build_root_system('B', 2);
    FAIL("expected error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "family");
  }
  try {
    build_root_system('A', 5);
    FAIL("expected error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "rank");
  }
}

TEST_CASE("basic data for A1 and A2") {
  auto a1 = build_root_system('A', 1);
  CHECK(a1.dual_coxeter() == 2);
  CHECK(a1.weyl_group().size() == 2);
  CHECK(a1.theta().squaredNorm() == doctest::Approx(2.0));
  CHECK(a1.rho().norm() == doctest::Approx(std::sqrt(0.5)));

  auto a2 = build_root_system('A', 2);
  CHECK(a2.positive_roots().size() == 3);
  CHECK(a2.weyl_group().size() == 6);
  CHECK(a2.dual_coxeter() == 3);
  for (const auto& r : a2.positive_roots()) CHECK(r.squaredNorm() == doctest::Approx(2.0));
  // fundamental weights are dual to simple coroots
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(a2.simple_roots()[i].dot(a2.fundamental_weights()[j]) == doctest::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("Weyl group closure and form invariance") {
  for (int n = 1; n <= 3; ++n) {
    auto rs = build_root_system('A', n);
    std::mt19937_64 gen(7);
    std::normal_distribution<double> N01;
    for (const auto& w : rs.weyl_group()) {
      for (const auto& r : rs.positive_roots()) {
        Vec img = w.matrix * r;
        bool found = false;
        for (const auto& s : rs.positive_roots())
          found = found || (img - s).norm() < 1e-12 || (img + s).norm() < 1e-12;
        CHECK(found);
      }
      Vec a(n), b(n);
      for (int i = 0; i < n; ++i) {
        a(i) = N01(gen);
        b(i) = N01(gen);
      }
      CHECK(std::abs((w.matrix * a).dot(w.matrix * b) - a.dot(b)) <= 1e-14 * (1 + a.norm() * b.norm()));
      CHECK(std::abs(w.matrix.determinant() - w.sign) < 1e-12);
    }
  }
}

TEST_CASE("fold examples") {
  auto a1 = build_root_system('A', 1);
  Vec x(1);
  x(0) = 2.3 / std::sqrt(2.0);
  auto f = fold_to_alcove(a1, x);
  CHECK(a1.theta().dot(f.point.coords) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(f.interior);
  x(0) = 0;
  CHECK_FALSE(fold_to_alcove(a1, x).interior);
}

namespace {
// Oracle: breadth-first search over words in the affine reflections.
Vec brute_force_fold(const RootSystem& rs, const Vec& x, int max_len) {
  std::vector<Vec> frontier{x};
  for (int len = 0; len <= max_len; ++len) {
    for (const auto& v : frontier)
      if (rs.in_alcove(v, 1e-10)) return v;
    std::vector<Vec> next;
    for (const auto& v : frontier) {
      for (const auto& a : rs.simple_roots()) next.push_back(v - a.dot(v) * a);
      next.push_back(v - (rs.theta().dot(v) - 1.0) * rs.theta());
    }
    frontier.swap(next);
    if (frontier.size() > 2'000'000) break;
  }
  throw std::runtime_error("oracle search exhausted");
}
}  // namespace

TEST_CASE("fold agrees with brute-force word search, is idempotent and lands in A") {
  for (int n = 1; n <= 2; ++n) {
    auto rs = build_root_system('A', n);
    std::mt19937_64 gen(11 + n);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int k = 0; k < 40; ++k) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x(i) = U(gen);
      auto f = fold_to_alcove(rs, x);
      CHECK(rs.in_alcove(f.point.coords));
      auto g = fold_to_alcove(rs, f.point.coords);
      CHECK((g.point.coords - f.point.coords).norm() == 0.0);
      Vec o = brute_force_fold(rs, x, n == 1 ? 12 : 9);
      CHECK((o - f.point.coords).norm() < 1e-9);
      // the reflection fallback reaches the same point
      CHECK((fold_by_reflections(rs, x).point.coords - f.point.coords).norm() < 1e-9);
    }
  }
  for (int n = 3; n <= 4; ++n) {
    auto rs = build_root_system('A', n);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> U(-3, 3);
    for (int k = 0; k < 50; ++k) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x(i) = U(gen);
      auto f = fold_to_alcove(rs, x);
      CHECK(rs.in_alcove(f.point.coords));
      CHECK((fold_by_reflections(rs, x).point.coords - f.point.coords).norm() < 1e-9);
    }
  }
}

TEST_CASE("lattice balls") {
  auto a2 = build_root_system('A', 2);
  CHECK(coroot_lattice_ball(a2, 1.5).size() == 7);
  auto a1 = build_root_system('A', 1);
  CHECK(dominant_weights_ball(a1, 0.8).size() == 1);
  auto d = dominant_weights_ball(a1, 1.5);
  REQUIRE(d.size() == 2);
  CHECK(d[0].norm() == 0.0);
  CHECK((d[1] - a1.fundamental_weights()[0]).norm() < 1e-14);
  CHECK(dominant_weights_ball(a2, 0.0).empty());
  CHECK_THROWS_AS(coroot_lattice_ball(a2, 100.0, 1000), ResourceError);

  // ascending order and dimension formula on A2
  auto t = dominant_weight_table(a2, 5.0);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i - 1].shifted_norm2 <= t[i].shifted_norm2 + 1e-12);
  CHECK(t[0].dim == 1);
  CHECK(t[1].dim == 3);  // defining representation and its dual
  CHECK(t[2].dim == 3);
}
