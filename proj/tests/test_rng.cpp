#include <doctest.h>

#include "affsim/rng.hpp"

using namespace affsim;

TEST_CASE("philox known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(7, 3, Purpose::bm_path), b(7, 3, Purpose::bm_path);
  RandomStream c(7, 4, Purpose::bm_path), d(7, 3, Purpose::haar), e(8, 3, Purpose::bm_path);
  int same_c = 0, same_d = 0, same_e = 0;
  for (int i = 0; i < 100; ++i) {
    auto x = a();
    CHECK(x == b());
    same_c += x == c();
    same_d += x == d();
    same_e += x == e();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
  CHECK(same_e == 0);
}

TEST_CASE("uniform and normal moments") {
  RandomStream r(1, 0, Purpose::misc);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(umin > 0);
  CHECK(umax < 1);
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 5 / std::sqrt(double(n)));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}
