#include "affsim/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "affsim/errors.hpp"
#include "affsim/rng.hpp"
#include "affsim/series.hpp"

namespace affsim {

namespace {

void check_sample(std::size_t n, const char* what) {
  if (n < 100) throw StatisticsError(std::string(what) + ": at least 100 samples per side required");
}

void check_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) throw StatisticsError("non-finite sample value");
}

// (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D, the usual finite-sample correction
double ks_p(double d, double ne) {
  double s = std::sqrt(ne);
  return kolmogorov_sf((s + 0.12 + 0.11 / s) * d);
}

}  // namespace

double kolmogorov_sf(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 1.18) {
    // 1 - sqrt(2 pi)/lambda sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
    double s = 0;
    for (int k = 1; k <= 20; ++k) {
      double e = (2 * k - 1) * kPi / lambda;
      s += std::exp(-e * e / 8);
    }
    return std::clamp(1.0 - std::sqrt(2 * kPi) / lambda * s, 0.0, 1.0);
  }
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 2 : -2) * t;
    if (t < 1e-300) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  check_sample(std::min(a.size(), b.size()), "ks_two_sample");
  check_finite(a);
  check_finite(b);
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = double(x.size()), nb = double(y.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < x.size() && j < y.size()) {
    double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return {d, ks_p(d, na * nb / (na + nb))};
}

TestResult ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf) {
  check_sample(a.size(), "ks_one_sample");
  check_finite(a);
  std::vector<double> x(a.begin(), a.end());
  std::sort(x.begin(), x.end());
  const double n = double(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return {d, ks_p(d, n)};
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw StatisticsError("wasserstein1: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  // integral of |F_a - F_b| over the merged support
  std::vector<double> all(x);
  all.insert(all.end(), y.begin(), y.end());
  std::sort(all.begin(), all.end());
  CompensatedSum s;
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k + 1 < all.size(); ++k) {
    while (i < x.size() && x[i] <= all[k]) ++i;
    while (j < y.size() && y[j] <= all[k]) ++j;
    s.add(std::abs(double(i) / x.size() - double(j) / y.size()) * (all[k + 1] - all[k]));
  }
  return s.value();
}

namespace {

// mean pairwise distances from a precomputed matrix and a label vector
double energy_from_matrix(const std::vector<double>& D, std::size_t m, const std::vector<std::uint8_t>& lab,
                          std::size_t na) {
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &D[i * m];
    for (std::size_t j = i + 1; j < m; ++j) {
      const int c = lab[i] + lab[j];
      if (c == 1)
        sab += row[j];
      else if (c == 0)
        saa += row[j];
      else
        sbb += row[j];
    }
  }
  const double nb = double(m - na);
  const double a = double(na);
  return 2 * sab / (a * nb) - 2 * saa / (a * a) - 2 * sbb / (nb * nb);
}

}  // namespace

double energy_distance(std::span<const Vec> a, std::span<const Vec> b) {
  if (a.empty() || b.empty()) throw StatisticsError("energy_distance: empty sample");
  auto mean_dist = [](std::span<const Vec> x, std::span<const Vec> y) {
    CompensatedSum s;
    for (const auto& u : x)
      for (const auto& v : y) s.add((u - v).norm());
    return s.value() / (double(x.size()) * y.size());
  };
  return 2 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b);
}

TestResult energy_test(std::span<const Vec> a, std::span<const Vec> b, int permutations, std::uint64_t seed,
                       std::size_t max_per_side) {
  check_sample(std::min(a.size(), b.size()), "energy_test");
  if (permutations < 1) throw StatisticsError("energy_test: permutations must be positive");
  RandomStream rng(seed, 0, Purpose::subsample);
  auto pick = [&](std::span<const Vec> x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (x.size() > max_per_side) {
      for (std::size_t k = 0; k < max_per_side; ++k) {
        std::size_t r = k + static_cast<std::size_t>(rng.uniform() * (x.size() - k));
        std::swap(idx[k], idx[std::min(r, x.size() - 1)]);
      }
      idx.resize(max_per_side);
    }
    return idx;
  };
  auto ia = pick(a), ib = pick(b);
  std::vector<const Vec*> pts;
  for (auto i : ia) pts.push_back(&a[i]);
  for (auto i : ib) pts.push_back(&b[i]);
  const std::size_t m = pts.size(), na = ia.size();
  bool spread = false;
  std::vector<double> D(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (!pts[i]->allFinite()) throw StatisticsError("non-finite sample value");
    for (std::size_t j = i + 1; j < m; ++j) {
      D[i * m + j] = D[j * m + i] = (*pts[i] - *pts[j]).norm();
      spread = spread || D[i * m + j] > 0;
    }
  }
  if (!spread) throw StatisticsError("energy_test: all points coincide");
  std::vector<std::uint8_t> lab(m, 0);
  std::fill(lab.begin() + na, lab.end(), 1);
  const double obs = energy_from_matrix(D, m, lab, na);
  RandomStream prng(seed, 1, Purpose::permutation);
  int ge = 0;
  for (int p = 0; p < permutations; ++p) {
    std::shuffle(lab.begin(), lab.end(), prng);
    if (energy_from_matrix(D, m, lab, na) >= obs - 1e-12 * std::abs(obs)) ++ge;
  }
  return {obs, (1.0 + ge) / (1.0 + permutations)};
}

TwoSampleStats two_sample_stats(std::span<const Vec> a, std::span<const Vec> b, std::uint64_t seed,
                                int permutations) {
  check_sample(std::min(a.size(), b.size()), "two_sample_stats");
  const int d = static_cast<int>(a[0].size());
  TwoSampleStats out;
  out.ks_p = 1;
  double pmin = 1;
  for (int k = 0; k < d; ++k) {
    std::vector<double> x, y;
    for (const auto& v : a) x.push_back(v(k));
    for (const auto& v : b) y.push_back(v(k));
    auto r = ks_two_sample(x, y);
    out.ks_stat = std::max(out.ks_stat, r.stat);
    pmin = std::min(pmin, r.p);
    if (d == 1) out.wasserstein1 = wasserstein1(x, y);
  }
  out.ks_p = std::min(1.0, pmin * d);
  auto e = energy_test(a, b, permutations, seed);
  out.energy_stat = e.stat;
  out.energy_p = e.p;
  return out;
}

ChiSquareResult chi_square(std::span<const long> counts, std::span<const double> probs) {
  if (counts.size() != probs.size() || counts.size() < 2) throw StatisticsError("chi_square: bad cell layout");
  double total = 0, psum = 0;
  for (long c : counts) total += double(c);
  for (double p : probs) {
    if (!(p > 0)) throw StatisticsError("chi_square: cell probabilities must be positive");
    psum += p;
  }
  if (total <= 0) throw StatisticsError("chi_square: no observations");
  ChiSquareResult r;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double e = total * probs[i] / psum;
    r.stat += (counts[i] - e) * (counts[i] - e) / e;
  }
  r.dof = static_cast<int>(counts.size()) - 1;
  r.p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.stat));
  return r;
}

MeanSE mean_se(std::span<const double> v) {
  if (v.empty()) throw StatisticsError("mean_se: empty sample");
  CompensatedSum s, s2;
  for (double x : v) s.add(x);
  const double n = double(v.size());
  double m = s.value() / n;
  for (double x : v) s2.add((x - m) * (x - m));
  return {m, v.size() > 1 ? std::sqrt(s2.value() / (n - 1) / n) : 0.0, static_cast<long>(v.size())};
}

}  // namespace affsim
