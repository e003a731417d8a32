#include "affsim/doobsim.hpp"

#include <cmath>
#include <limits>

#include "affsim/affinephi.hpp"
#include "affsim/charfun.hpp"
#include "affsim/errors.hpp"
#include "affsim/groupsim.hpp"
#include "affsim/parallel.hpp"

namespace affsim {

namespace {

constexpr long kMaxProposals = 100000;  // no acceptance in this many: rate below 1e-4

Vec normal_vec(int n, RandomStream& rng) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

void check_start(const RootSystem& rs, const SpaceTimePoint& s) {
  if (!(s.tau > 0)) throw DomainError("start time must be positive");
  if (s.b.size() != rs.rank()) throw DomainError("start point has wrong dimension");
  if (!rs.is_interior(s.normalized())) throw DomainError("start point is not inside the chamber");
}

Estimate summarize(const std::vector<double>& v, long used) {
  CompensatedSum s, s2;
  for (double x : v) s.add(x);
  const double n = double(v.size());
  const double m = s.value() / n;
  for (double x : v) s2.add((x - m) * (x - m));
  Estimate e;
  e.value = m;
  e.stderr_ = v.size() > 1 ? std::sqrt(s2.value() / (n - 1) / n) : 0.0;
  e.n = static_cast<long>(v.size());
  e.used = used;
  return e;
}

struct NearWalls {
  Vec normal;  // inward unit normal of the nearest wall
  double d1 = 0, d2 = std::numeric_limits<double>::infinity();
};

// Distances from b to the walls of the cone at level tau.
NearWalls near_walls(const RootSystem& rs, double tau, const Vec& b) {
  NearWalls w;
  w.d1 = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec& unit, double d) {
    if (d < w.d1) {
      w.d2 = w.d1;
      w.d1 = d;
      w.normal = unit;
    } else {
      w.d2 = std::min(w.d2, d);
    }
  };
  for (const auto& a : rs.simple_roots()) {
    const double len = a.norm();
    consider(a / len, a.dot(b) / len);
  }
  const double lt = rs.theta().norm();
  consider(-rs.theta() / lt, (tau - rs.theta().dot(b)) / lt);
  return w;
}

}  // namespace

EntranceSampler::EntranceSampler(const RootSystem& rs, double t0, EntranceMode mode, const Truncation& tr,
                                 int radial_steps)
    : rs_(&rs), t0_(t0), mode_(mode), tr_(tr), radial_steps_(radial_steps) {
  if (!(t0 > 0)) throw DomainError("entrance time must be positive");
  if (mode == EntranceMode::radial) return;
  // |phi_d(t0, t0 q) pi(q)| = C (2 pi / t0)^{n/2} e^{t0 |q|^2 / 2 - 2 pi^2 |rho|^2 / t0} |pi(q)|^2 p(e^q)
  // with |pi|^2 <= 4^N and p(e^q) <= p(e) on the alcove.
  const int n = rs.rank();
  double r2 = 0;
  for (const auto& v : rs.alcove_vertices()) r2 = std::max(r2, v.squaredNorm());
  log_env_ = std::log(phi_char_constant(rs)) + rs.num_positive() * std::log(4.0) +
             std::log(heat_kernel(rs, 1.0, 1.0 / t0, Vec::Zero(n), tr)) + 0.5 * n * std::log(2 * kPi / t0) +
             0.5 * t0 * r2 - 2 * kPi * kPi * rs.rho().squaredNorm() / t0;
}

SpaceTimePoint EntranceSampler::operator()(RandomStream& rng) const {
  const RootSystem& rs = *rs_;
  const int n = rs.rank();
  if (mode_ == EntranceMode::radial) {
    LieAlgebra alg(rs);
    return {t0_, t0_ * rad_of_bm(alg, 1.0 / t0_, radial_steps_, rng).coords};
  }
  const double sd = std::sqrt(t0_);
  for (long k = 0; k < kMaxProposals; ++k) {
    Vec z = sd * normal_vec(n, rng);
    double u = rng.uniform();
    Vec q = z / t0_;
    if (!rs.is_interior(q)) continue;
    auto ph = phi_hat_d_scaled(rs, t0_, z, tr_);
    double lw = std::log(std::abs(ph.mantissa)) + ph.log_scale + std::log(std::abs(pi_value(rs, q)));
    if (lw > log_env_ + 1e-9) throw InternalError("entrance envelope violated");
    if (std::log(u) < lw - log_env_) return {t0_, z};
  }
  throw EfficiencyError("entrance rejection acceptance below 1e-4; use a larger t0 or the radial mode");
}

SpaceTimePoint entrance_sample(const RootSystem& rs, double t0, EntranceMode mode, const Truncation& tr,
                               RandomStream& rng) {
  return EntranceSampler(rs, t0, mode, tr)(rng);
}

ConditionedTrajectory simulate_conditioned(const RootSystem& rs, const SpaceTimePoint& start, double horizon,
                                           double dt, const Truncation& tr, RandomStream& rng,
                                           const ConditionedOptions& opt) {
  check_start(rs, start);
  if (!(horizon > 0) || !(dt > 0)) throw DomainError("horizon and dt must be positive");
  const int n = rs.rank();
  const bool every = opt.record.empty();
  ConditionedTrajectory out;
  out.times.push_back(0);
  out.nodes.push_back(start);
  double tau = start.tau;
  Vec b = start.b;
  double elapsed = 0;
  std::size_t next = 0;
  out.min_wall_distance = rs.wall_distance(b / tau);
  const double floor_dt = std::ldexp(dt, -opt.max_halvings);

  while (true) {
    double target = every ? horizon : (next < opt.record.size() ? opt.record[next] : horizon);
    if (target > horizon) throw DomainError("record time beyond horizon");
    if (elapsed >= target - 1e-12 * horizon) {
      if (!every && next < opt.record.size()) {
        out.times.push_back(elapsed);
        out.nodes.push_back({tau, b});
        ++next;
        continue;
      }
      break;
    }
    double h = std::min(dt, target - elapsed);
    const bool split = opt.scheme == StepScheme::wall_split && !opt.zero_drift;
    const NearWalls walls = near_walls(rs, tau, b);
    const double d = walls.d1;
    const double guard = split ? walls.d2 : walls.d1;
    while (guard < opt.refine_factor * std::sqrt(h) && h > floor_dt) {
      h *= 0.5;
      ++out.halvings;
    }
    Vec drift = opt.zero_drift ? Vec::Zero(n) : grad_log_phi_d(rs, tau, b, tr);
    Vec smooth;
    double smooth_n = 0;
    if (split) {
      smooth = drift - walls.normal / d;
      smooth_n = smooth.dot(walls.normal);
      smooth -= smooth_n * walls.normal;
    }
    int resamples = 0;
    Vec nb;
    while (true) {
      const double sh = std::sqrt(h);
      if (split) {
        Vec xi = normal_vec(n, rng);
        const double xn = xi.dot(walls.normal);
        const double e1 = rng.normal(), e2 = rng.normal();
        const double u = d + sh * xn + h * smooth_n;
        const double nd = std::sqrt(u * u + h * (e1 * e1 + e2 * e2));
        nb = b + sh * (xi - xn * walls.normal) + h * smooth + (nd - d) * walls.normal;
      } else {
        nb = b + sh * normal_vec(n, rng) + h * drift;
      }
      if (opt.zero_drift) break;
      if (rs.wall_distance(nb / (tau + h)) > 1e-7) break;
      if (h > floor_dt) {
        h *= 0.5;
        ++out.halvings;
      } else if (++resamples > opt.max_resamples) {
        throw StepFailureError("conditioned step failed at the step floor near a wall (tau = " +
                               std::to_string(tau) + ", distance " + std::to_string(d) + ")");
      } else {
        ++out.resamples;
      }
    }
    b = nb;
    tau += h;
    elapsed += h;
    ++out.steps;
    const double wd = rs.wall_distance(b / tau);
    out.min_wall_distance = std::min(out.min_wall_distance, wd);
    if (every) {
      out.times.push_back(elapsed);
      out.nodes.push_back({tau, b});
      out.drifts.push_back(drift);
    }
    if (opt.zero_drift && !rs.is_interior(b / tau, 0.0)) {
      out.exited = true;
      out.exit_time = elapsed;
      if (!every) {
        out.times.push_back(elapsed);
        out.nodes.push_back({tau, b});
      }
      return out;
    }
  }
  return out;
}

ConditionedTrajectory simulate_free(const RootSystem& rs, const SpaceTimePoint& start, double horizon, double dt,
                                    RandomStream& rng, const std::vector<double>& record) {
  check_start(rs, start);
  if (!(horizon > 0) || !(dt > 0)) throw DomainError("horizon and dt must be positive");
  const int n = rs.rank();
  ConditionedTrajectory out;
  out.times.push_back(0);
  out.nodes.push_back(start);
  double tau = start.tau, elapsed = 0;
  Vec b = start.b;
  std::size_t next = 0;
  out.min_wall_distance = rs.wall_distance(b / tau);
  while (elapsed < horizon - 1e-12 * horizon) {
    double target = next < record.size() ? record[next] : horizon;
    double h = std::min(dt, target - elapsed);
    b += std::sqrt(h) * normal_vec(n, rng);
    tau += h;
    elapsed += h;
    ++out.steps;
    double wd = rs.wall_distance(b / tau);
    out.min_wall_distance = std::min(out.min_wall_distance, wd);
    if (!out.exited && !rs.is_interior(b / tau, 0.0)) {
      out.exited = true;
      out.exit_time = elapsed;
    }
    bool hit = next < record.size() && elapsed >= record[next] - 1e-12 * horizon;
    if (record.empty() || hit) {
      out.times.push_back(elapsed);
      out.nodes.push_back({tau, b});
      if (hit) ++next;
    }
  }
  if (!record.empty() && out.times.size() != record.size() + 1) {
    // the final horizon is always recorded
    out.times.push_back(elapsed);
    out.nodes.push_back({tau, b});
  }
  return out;
}

double phi_d_ratio(const RootSystem& rs, const SpaceTimePoint& p, const SpaceTimePoint& q, const Truncation& tr) {
  return ratio(phi_hat_d_scaled(rs, p.tau, p.b, tr), phi_hat_d_scaled(rs, q.tau, q.b, tr)).real();
}

double log_phi_d_ratio(const RootSystem& rs, const SpaceTimePoint& p, const SpaceTimePoint& q,
                       const Truncation& tr) {
  auto a = phi_hat_d_scaled(rs, p.tau, p.b, tr), c = phi_hat_d_scaled(rs, q.tau, q.b, tr);
  return std::log(std::abs(a.mantissa)) - std::log(std::abs(c.mantissa)) + a.log_scale - c.log_scale;
}

namespace {

// Probability that a Brownian bridge of duration h between two points inside
// the chamber stays inside: product over walls of 1 - exp(-2 d0 d1 / h).
// Exact for one wall, including the moving one since the bridge minus a linear
// drift is again a bridge.
double bridge_survival(const RootSystem& rs, double tau0, const Vec& b0, double tau1, const Vec& b1, double h) {
  double s = 1;
  auto f = [&](double d0, double d1) { s *= -std::expm1(-2 * d0 * d1 / h); };
  for (const auto& a : rs.simple_roots()) {
    const double na = a.norm();
    f(a.dot(b0) / na, a.dot(b1) / na);
  }
  const Vec& th = rs.theta();
  const double nt = th.norm();
  f((tau0 - th.dot(b0)) / nt, (tau1 - th.dot(b1)) / nt);
  return s;
}

struct Particle {
  Vec b;
  double lw = 0;    // log weight since the last resampling
  double lphi = 0;  // log |phi_d| at the current node, relative to the start
  ConditionedTrajectory path;
};

}  // namespace

std::vector<Estimate> weighted_expectation(const RootSystem& rs, const SpaceTimePoint& start, double horizon,
                                           double dt, const std::vector<PathFunctional>& fs, const Truncation& tr,
                                           std::uint64_t seed, long replicas, const WeightedOptions& opt) {
  check_start(rs, start);
  if (!(horizon > 0) || !(dt > 0)) throw DomainError("horizon and dt must be positive");
  const int P = std::max(1, opt.particles);
  const long B = replicas / P;
  if (B < 2) throw DomainError("weighted estimator needs at least two batches of particles");
  std::vector<double> rec = opt.record;
  if (rec.empty() || rec.back() < horizon) rec.push_back(horizon);
  const int n = rs.rank();
  constexpr double kDead = -std::numeric_limits<double>::infinity();

  // Resampling uses w * phi_d(current) / phi_d(previous) as potential; the
  // product telescopes, so the estimator targets the same expectation as
  // plain weighting by phi_d(end) / phi_d(start).
  const std::size_t F = fs.size();
  std::vector<std::vector<double>> batch_value(F, std::vector<double>(B, 0.0));
  std::vector<double> batch_logz(B, 0.0);
  std::vector<long> batch_alive(B, 0);
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t bi) {
    RandomStream rng(seed, bi, Purpose::weighted);
    std::vector<Particle> ps(P);
    for (auto& p : ps) {
      p.b = start.b;
      p.path.times = {0};
      p.path.nodes = {start};
    }
    double tau = start.tau, elapsed = 0, logz = 0;
    std::size_t next = 0;
    std::vector<double> cum(P);
    while (elapsed < horizon - 1e-12 * horizon) {
      const double h = std::min(dt, rec[next] - elapsed);
      const double ntau = tau + h;
      double lmax = kDead;
      for (auto& p : ps) {
        if (p.lw == kDead) continue;
        // guided particles take sub-steps no longer than (wall distance / 5)^2
        double pt = tau;
        while (pt < ntau - 1e-15 * ntau && p.lw != kDead) {
          double hs = ntau - pt;
          if (opt.guided) {
            const double d = rs.wall_distance(p.b, pt);
            hs = std::min(hs, std::max(d * d / 25, std::ldexp(h, -30)));
          }
          Vec noise = std::sqrt(hs) * normal_vec(n, rng);
          Vec nb = p.b + noise;
          if (opt.guided) {
            // Gaussian proposal centred at the h-transform Euler step, drift
            // clipped to half the wall distance; the density ratio against the
            // driftless step enters the weight
            Vec g = grad_log_phi_d(rs, pt, p.b, tr);
            const double d = rs.wall_distance(p.b, pt), gn = g.norm() * hs;
            if (gn > 0.5 * d) g *= 0.5 * d / gn;
            nb += hs * g;
            p.lw += (noise.squaredNorm() - (nb - p.b).squaredNorm()) / (2 * hs);
          }
          const double npt = pt + hs >= ntau - 1e-15 * ntau ? ntau : pt + hs;
          if (!rs.is_interior(nb / npt, 0.0)) {
            p.lw = kDead;
          } else {
            if (opt.bridge) p.lw += std::log(bridge_survival(rs, pt, p.b, npt, nb, hs));
            const double lphi = log_phi_d_ratio(rs, {npt, nb}, start, tr);
            p.lw += lphi - p.lphi;
            p.lphi = lphi;
          }
          p.b = std::move(nb);
          pt = npt;
          ++p.path.steps;
        }
        if (p.lw != kDead) lmax = std::max(lmax, p.lw);
      }
      tau = ntau;
      elapsed += h;
      if (elapsed >= rec[next] - 1e-12 * horizon) {
        for (auto& p : ps) {
          p.path.times.push_back(elapsed);
          p.path.nodes.push_back({tau, p.b});
        }
        ++next;
      }
      if (lmax == kDead) {
        logz = kDead;
        break;
      }
      double w1 = 0, w2 = 0;
      for (const auto& p : ps) {
        const double w = std::exp(p.lw - lmax);
        w1 += w;
        w2 += w * w;
      }
      const bool last = elapsed >= horizon - 1e-12 * horizon;
      if (!last && w1 * w1 < 0.5 * P * w2) {
        logz += lmax + std::log(w1 / P);
        double acc = 0;
        for (int i = 0; i < P; ++i) cum[i] = (acc += std::exp(ps[i].lw - lmax) / w1);
        std::vector<Particle> fresh;
        fresh.reserve(P);
        const double u0 = rng.uniform() / P;
        int j = 0;
        for (int i = 0; i < P; ++i) {
          const double u = u0 + double(i) / P;
          while (j < P - 1 && cum[j] < u) ++j;
          fresh.push_back(ps[j]);
          fresh.back().lw = 0;
        }
        ps = std::move(fresh);
      }
    }
    batch_logz[bi] = logz;
    if (logz == kDead) return;
    std::vector<CompensatedSum> s(F);
    long alive = 0;
    for (auto& p : ps) {
      if (p.lw == kDead) continue;
      ++alive;
      const double w = std::exp(logz + p.lw);
      for (std::size_t k = 0; k < F; ++k) s[k].add(fs[k](p.path) * w);
    }
    batch_alive[bi] = alive;
    for (std::size_t k = 0; k < F; ++k) batch_value[k][bi] = s[k].value() / P;
  });
  long used = 0;
  double lz = 0;
  for (long i = 0; i < B; ++i) {
    used += batch_alive[i];
    lz += batch_logz[i] == kDead ? 0.0 : batch_logz[i];
  }
  if (used == 0) throw DegenerateEstimateError("weighted estimator: every path was absorbed");
  std::vector<Estimate> out;
  for (std::size_t k = 0; k < F; ++k) {
    out.push_back(summarize(batch_value[k], used));
    out.back().log_survival = lz / B;
  }
  return out;
}

Estimate weighted_expectation(const RootSystem& rs, const SpaceTimePoint& start, double horizon, double dt,
                              const PathFunctional& f, const Truncation& tr, std::uint64_t seed, long replicas,
                              const WeightedOptions& opt) {
  return weighted_expectation(rs, start, horizon, dt, std::vector<PathFunctional>{f}, tr, seed, replicas, opt)[0];
}

std::vector<Estimate> conditioned_expectation(const RootSystem& rs, const SpaceTimePoint& start, double horizon,
                                              double dt, const std::vector<PathFunctional>& fs,
                                              const Truncation& tr, std::uint64_t seed, long replicas) {
  if (replicas < 2) throw DomainError("at least two replicas required");
  const std::size_t F = fs.size();
  std::vector<std::vector<double>> v(F, std::vector<double>(replicas, 0.0));
  ConditionedOptions opt;
  opt.record = {horizon};
  parallel_for(static_cast<std::size_t>(replicas), [&](std::size_t i) {
    RandomStream rng(seed, i, Purpose::conditioned);
    auto path = simulate_conditioned(rs, start, horizon, dt, tr, rng, opt);
    for (std::size_t k = 0; k < F; ++k) v[k][i] = fs[k](path);
  });
  std::vector<Estimate> out;
  for (std::size_t k = 0; k < F; ++k) out.push_back(summarize(v[k], replicas));
  return out;
}

Estimate conditioned_expectation(const RootSystem& rs, const SpaceTimePoint& start, double horizon, double dt,
                                 const PathFunctional& f, const Truncation& tr, std::uint64_t seed, long replicas) {
  return conditioned_expectation(rs, start, horizon, dt, std::vector<PathFunctional>{f}, tr, seed, replicas)[0];
}

}  // namespace affsim
