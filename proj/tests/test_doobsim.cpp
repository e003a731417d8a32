#include <doctest.h>

#include "affsim/affinephi.hpp"
#include "affsim/doobsim.hpp"
#include "affsim/errors.hpp"
#include "affsim/stats.hpp"

using namespace affsim;

TEST_CASE("entrance samples are interior and the two modes agree") {
  auto rs = build_root_system('A', 1);
  EntranceSampler rej(rs, 0.05, EntranceMode::rejection), rad(rs, 0.05, EntranceMode::radial, {}, 400);
  std::vector<double> a, b;
  for (int i = 0; i < 4000; ++i) {
    RandomStream r1(21, i, Purpose::entrance), r2(22, i, Purpose::entrance);
    auto p = rej(r1), q = rad(r2);
    CHECK(rs.is_interior(p.normalized()));
    CHECK(rs.in_alcove(q.normalized()));
    a.push_back(p.normalized()(0));
    b.push_back(q.normalized()(0));
  }
  CHECK(ks_two_sample(a, b).p > 0.01);
  CHECK_THROWS_AS(EntranceSampler(rs, 0, EntranceMode::rejection), DomainError);
}

TEST_CASE("entrance rejection in rank two") {
  auto rs = build_root_system('A', 2);
  EntranceSampler rej(rs, 0.1, EntranceMode::rejection);
  for (int i = 0; i < 200; ++i) {
    RandomStream r(23, i, Purpose::entrance);
    CHECK(rs.is_interior(rej(r).normalized()));
  }
}

TEST_CASE("conditioned paths stay inside, free paths exit") {
  auto rs = build_root_system('A', 1);
  SpaceTimePoint s{0.2, rs.barycenter() * 0.2};
  int exits = 0;
  for (int i = 0; i < 50; ++i) {
    RandomStream r(24, i, Purpose::conditioned);
    auto tr = simulate_conditioned(rs, s, 0.3, 1e-3, {}, r);
    CHECK(tr.min_wall_distance > 0);
    CHECK(tr.nodes.back().tau == doctest::Approx(0.5));
    CHECK(tr.drifts.size() == tr.nodes.size() - 1);
    for (const auto& nd : tr.nodes) CHECK(rs.is_interior(nd.normalized(), 0.0));
    ConditionedOptions zero;
    zero.zero_drift = true;
    zero.record = {0.3};
    RandomStream r2(25, i, Purpose::conditioned);
    exits += simulate_conditioned(rs, s, 0.3, 1e-3, {}, r2, zero).exited;
  }
  CHECK(exits > 10);
  RandomStream r3(1, 0, Purpose::misc);
  CHECK_THROWS_AS(simulate_conditioned(rs, {0.2, Vec::Constant(1, -0.1)}, 0.3, 1e-3, {}, r3), DomainError);
}

TEST_CASE("record times are hit exactly") {
  auto rs = build_root_system('A', 2);
  SpaceTimePoint s{1.0, rs.barycenter()};
  ConditionedOptions opt;
  opt.record = {0.1, 0.25};
  RandomStream r(26, 0, Purpose::conditioned);
  auto tr = simulate_conditioned(rs, s, 0.25, 0.01, {}, r, opt);
  REQUIRE(tr.nodes.size() == 3);
  CHECK(tr.times[1] == doctest::Approx(0.1));
  CHECK(tr.nodes[2].tau == doctest::Approx(1.25));
}

TEST_CASE("weighted estimator: unit mean and agreement with the h-transform") {
  auto rs = build_root_system('A', 1);
  SpaceTimePoint s{1.0, rs.barycenter()};
  WeightedOptions wo;
  wo.particles = 200;
  std::vector<PathFunctional> fs{[](const ConditionedTrajectory&) { return 1.0; },
                                 [](const ConditionedTrajectory& p) { return p.nodes.back().normalized()(0); }};
  auto w = weighted_expectation(rs, s, 0.3, 2e-3, fs, {}, 27, 4000, wo);
  CHECK(std::abs(w[0].value - 1) < 3 * w[0].stderr_ + 1e-3);
  auto c = conditioned_expectation(rs, s, 0.3, 2e-3, fs, {}, 28, 4000);
  CHECK(c[0].value == 1.0);
  CHECK(std::abs(w[1].value - c[1].value) < 3 * std::hypot(w[1].stderr_, c[1].stderr_));
  CHECK_THROWS_AS(weighted_expectation(rs, s, 0.3, 2e-3, fs[0], {}, 27, 100, wo), DomainError);
}

TEST_CASE("phi ratio log form") {
  auto rs = build_root_system('A', 2);
  SpaceTimePoint p{0.7, rs.barycenter() * 0.7}, q{1.3, rs.barycenter() * 1.3};
  CHECK(std::exp(log_phi_d_ratio(rs, p, q)) == doctest::Approx(phi_d_ratio(rs, p, q)).epsilon(1e-12));
}

TEST_CASE("entrance law is carried forward by the conditioned dynamics") {
  auto rs = build_root_system('A', 1);
  EntranceSampler e0(rs, 0.05, EntranceMode::rejection), e1(rs, 0.3, EntranceMode::rejection);
  std::vector<double> a, b;
  ConditionedOptions opt;
  opt.record = {0.25};
  for (int i = 0; i < 3000; ++i) {
    RandomStream r1(31, i, Purpose::entrance), r2(32, i, Purpose::conditioned), r3(33, i, Purpose::entrance);
    auto p = simulate_conditioned(rs, e0(r1), 0.25, 2e-3, {}, r2, opt);
    a.push_back(p.nodes.back().normalized()(0));
    b.push_back(e1(r3).normalized()(0));
  }
  CHECK(ks_two_sample(a, b).p > 0.01);
}

TEST_CASE("wall-split and Euler steps stay inside the chamber") {
  auto rs = build_root_system('A', 2);
  for (auto scheme : {StepScheme::euler, StepScheme::wall_split}) {
    ConditionedOptions opt;
    opt.scheme = scheme;
    RandomStream r(41, 0, Purpose::conditioned);
    SpaceTimePoint s{0.5, Vec(0.5 * rs.barycenter())};
    auto p = simulate_conditioned(rs, s, 0.5, 1e-2, {}, r, opt);
    for (const auto& q : p.nodes) CHECK(rs.is_interior(q.normalized()));
  }
}
