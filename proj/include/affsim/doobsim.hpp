#pragma once

#include <functional>
#include <vector>

#include "affsim/rng.hpp"
#include "affsim/rootsys.hpp"
#include "affsim/series.hpp"

namespace affsim {

// tau d + b; inside the affine chamber iff b / tau is inside the alcove.
struct SpaceTimePoint {
  double tau = 1;
  Vec b;
  Vec normalized() const { return b / tau; }
};

enum class EntranceMode { rejection, radial };

// Sampler for the entrance law at time t0 of the process started at the tip.
// rejection: Gaussian proposal N(0, t0) weighted by |phi_d(t0, z) pi(z / t0)| on t0 A.
// radial:    t0 * rad of a Brownian motion with variance 1 / t0.
class EntranceSampler {
 public:
  EntranceSampler(const RootSystem& rs, double t0, EntranceMode mode, const Truncation& tr = {},
                  int radial_steps = 1000);
  SpaceTimePoint operator()(RandomStream& rng) const;
  double log_envelope() const { return log_env_; }
  double t0() const { return t0_; }

 private:
  const RootSystem* rs_;
  double t0_;
  EntranceMode mode_;
  Truncation tr_;
  int radial_steps_;
  double log_env_ = 0;
};

SpaceTimePoint entrance_sample(const RootSystem& rs, double t0, EntranceMode mode, const Truncation& tr,
                               RandomStream& rng);

// euler: Euler-Maruyama with step halving near every wall.
// wall_split: the component normal to the nearest wall is advanced as an exact 3-d Bessel
// step (the drift's 1/distance part there), the rest by Euler; halving follows the second-nearest wall.
enum class StepScheme { euler, wall_split };

struct ConditionedOptions {
  std::vector<double> record;  // elapsed times to store; empty stores every step
  bool zero_drift = false;     // plain space-time BM, exits allowed
  StepScheme scheme = StepScheme::wall_split;
  double refine_factor = 5;  // halve the step while wall distance < refine_factor * sqrt(step)
  int max_halvings = 40;
  int max_resamples = 50;
};

struct ConditionedTrajectory {
  std::vector<double> times;  // elapsed time, times[0] = 0
  std::vector<SpaceTimePoint> nodes;
  std::vector<Vec> drifts;  // per step, only when every step is stored
  double min_wall_distance = 1e300;  // in alcove units
  long steps = 0, halvings = 0, resamples = 0;
  bool exited = false;
  double exit_time = -1;
};

// Euler-Maruyama for db = dB + grad log phi_d(tau, b) dt, dtau = dt.
ConditionedTrajectory simulate_conditioned(const RootSystem& rs, const SpaceTimePoint& start, double horizon,
                                           double dt, const Truncation& tr, RandomStream& rng,
                                           const ConditionedOptions& opt = {});

// Unconditioned space-time BM sampled exactly on the grid; exits are flagged
// (alcove membership checked at every grid point) but the path continues.
ConditionedTrajectory simulate_free(const RootSystem& rs, const SpaceTimePoint& start, double horizon, double dt,
                                    RandomStream& rng, const std::vector<double>& record = {});

struct Estimate {
  double value = 0;
  double stderr_ = 0;
  long n = 0;     // independent units behind the standard error
  long used = 0;  // contributing paths
  double log_survival = 0;  // weighted estimator only: mean log survival factor
};

using PathFunctional = std::function<double(const ConditionedTrajectory&)>;

struct WeightedOptions {
  int particles = 500;  // per independent batch
  bool bridge = true;   // Brownian-bridge survival factor between grid points
  bool guided = true;   // propose with the h-transform drift, reweighted to W
  std::vector<double> record;  // elapsed times stored in the path passed to f (horizon is always last)
};

// E_W[f(path) phi_d(tau_t, b_t) / phi_d(u, x) ; T > t]. Survival to t is rare
// from small u, so free paths are run as batches of particles; killed
// particles are replaced by copies of survivors and the survival fraction is
// carried as a product. Batches are independent; the standard error is taken
// across batches.
std::vector<Estimate> weighted_expectation(const RootSystem& rs, const SpaceTimePoint& start, double horizon,
                                           double dt, const std::vector<PathFunctional>& fs, const Truncation& tr,
                                           std::uint64_t seed, long replicas, const WeightedOptions& opt = {});
Estimate weighted_expectation(const RootSystem& rs, const SpaceTimePoint& start, double horizon, double dt,
                              const PathFunctional& f, const Truncation& tr, std::uint64_t seed, long replicas,
                              const WeightedOptions& opt = {});

// log |phi_d(p) / phi_d(q)|
double log_phi_d_ratio(const RootSystem& rs, const SpaceTimePoint& p, const SpaceTimePoint& q,
                       const Truncation& tr = {});

// Plain averages over h-transform paths.
std::vector<Estimate> conditioned_expectation(const RootSystem& rs, const SpaceTimePoint& start, double horizon,
                                              double dt, const std::vector<PathFunctional>& fs,
                                              const Truncation& tr, std::uint64_t seed, long replicas);
Estimate conditioned_expectation(const RootSystem& rs, const SpaceTimePoint& start, double horizon, double dt,
                                 const PathFunctional& f, const Truncation& tr, std::uint64_t seed, long replicas);

// phi_d(p) / phi_d(q), real since the phase of phi_d is constant.
double phi_d_ratio(const RootSystem& rs, const SpaceTimePoint& p, const SpaceTimePoint& q, const Truncation& tr = {});

}  // namespace affsim
