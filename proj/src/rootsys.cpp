#include "affsim/rootsys.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "affsim/errors.hpp"

namespace affsim {

namespace {

Vec trace_unit(int dim, int j, int k) {
  Vec v = Vec::Zero(dim);
  v(j) = 1;
  v(k) = -1;
  return v;
}

int permutation_sign(const std::vector<int>& p) {
  int sign = 1;
  std::vector<bool> seen(p.size(), false);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(p[j])) {
      seen[j] = true;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

void sort_by_norm(std::vector<Vec>& v) {
  std::sort(v.begin(), v.end(), [](const Vec& a, const Vec& b) {
    double na = a.squaredNorm(), nb = b.squaredNorm();
    if (std::abs(na - nb) > 1e-9) return na < nb;
    return lex_less(a, b);
  });
}

long radius_key(double radius) { return static_cast<long>(std::ceil(radius * 2.0 - 1e-9)); }

}  // namespace

RootSystem build_root_system(char family, int rank) {
  if (family != 'A') throw ConfigError("family", "only type A is supported");
  if (rank < 1 || rank > 4) throw ConfigError("rank", "rank must lie in 1..4");

  RootSystem rs;
  rs.family_ = family;
  rs.rank_ = rank;
  const int m = rank + 1;

  // Helmert basis of the zero-sum hyperplane.
  rs.basis_ = Mat::Zero(m, rank);
  for (int k = 0; k < rank; ++k) {
    double c = 1.0 / std::sqrt(double(k + 1) * double(k + 2));
    for (int j = 0; j <= k; ++j) rs.basis_(j, k) = c;
    rs.basis_(k + 1, k) = -double(k + 1) * c;
  }

  for (int i = 0; i < rank; ++i) rs.simple_.push_back(rs.from_trace(trace_unit(m, i, i + 1)));
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k) rs.positive_.push_back(rs.from_trace(trace_unit(m, j, k)));
  rs.theta_ = rs.from_trace(trace_unit(m, 0, rank));

  Vec rho_tr(m);
  for (int j = 0; j < m; ++j) rho_tr(j) = 0.5 * rank - j;
  rs.rho_ = rs.from_trace(rho_tr);

  rs.vertices_.push_back(Vec::Zero(rank));
  for (int i = 1; i <= rank; ++i) {
    Vec w(m);
    for (int j = 0; j < m; ++j) w(j) = (j < i ? 1.0 : 0.0) - double(i) / m;
    rs.fundamental_.push_back(rs.from_trace(w));
    rs.vertices_.push_back(rs.fundamental_.back());
  }

  rs.rho_product_ = 1;
  for (const auto& a : rs.positive_) rs.rho_product_ *= a.dot(rs.rho_);

  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    Mat P = Mat::Zero(m, m);
    for (int j = 0; j < m; ++j) P(j, perm[j]) = 1;
    WeylElement w;
    w.matrix = rs.basis_.transpose() * P * rs.basis_;
    w.permutation = perm;
    w.sign = permutation_sign(perm);
    rs.weyl_.push_back(std::move(w));
  } while (std::next_permutation(perm.begin(), perm.end()));

  rs.cache_ = std::make_shared<detail::TableCache>();
  return rs;
}

double RootSystem::coroot_covolume() const { return std::sqrt(double(rank_ + 1)); }

double RootSystem::wall_distance(const Vec& x, double t) const {
  double d = (t - theta_.dot(x)) / theta_.norm();
  for (const auto& a : simple_) d = std::min(d, a.dot(x) / a.norm());
  return d;
}

bool RootSystem::in_alcove(const Vec& x, double tol) const {
  for (const auto& a : simple_)
    if (a.dot(x) < -tol) return false;
  return theta_.dot(x) <= 1.0 + tol;
}

bool RootSystem::is_interior(const Vec& x, double tol) const {
  for (const auto& a : simple_)
    if (a.dot(x) <= tol) return false;
  return theta_.dot(x) < 1.0 - tol;
}

Vec RootSystem::barycenter() const {
  Vec c = Vec::Zero(rank_);
  for (const auto& v : vertices_) c += v;
  return c / double(vertices_.size());
}

AlcoveFold fold_by_reflections(const RootSystem& rs, const Vec& x, int max_iter) {
  Vec y = x;
  for (int it = 0; it < max_iter; ++it) {
    bool moved = false;
    for (const auto& a : rs.simple_roots()) {
      double v = a.dot(y);
      if (v < -kAlcoveTol) {
        y -= v * a;  // |a|^2 = 2, coroot = a
        moved = true;
        break;
      }
    }
    if (!moved) {
      double v = rs.theta().dot(y);
      if (v > 1.0 + kAlcoveTol) {
        y -= (v - 1.0) * rs.theta();
        moved = true;
      }
    }
    if (!moved) return {AlcovePoint{y}, rs.is_interior(y)};
  }
  throw InternalError("alcove fold did not terminate");
}

AlcoveFold fold_to_alcove(const RootSystem& rs, const Vec& x) {
  if (!x.allFinite()) throw DomainError("fold_to_alcove: non-finite input");
  if (rs.in_alcove(x)) return {AlcovePoint{x}, rs.is_interior(x)};

  const int m = rs.trace_dim();
  Vec h = rs.to_trace(x);
  Vec f(m);
  for (int j = 0; j < m; ++j) f(j) = h(j) - std::floor(h(j));
  long shift = std::lround(f.sum());
  shift = std::clamp(shift, 0L, long(m - 1));
  std::vector<double> s(f.data(), f.data() + m);
  std::sort(s.begin(), s.end(), std::greater<>());
  for (long j = 0; j < shift; ++j) s[j] -= 1.0;
  std::sort(s.begin(), s.end(), std::greater<>());
  Vec g = Eigen::Map<Vec>(s.data(), m);
  g.array() -= g.mean();
  Vec y = rs.from_trace(g);
  if (rs.in_alcove(y)) return {AlcovePoint{y}, rs.is_interior(y)};
  return fold_by_reflections(rs, x);
}

namespace {

// Enumerates integer vectors k with k_last = 0 (weights) or sum 0 (coroots).
template <class Accept>
std::vector<Vec> enumerate_box(const RootSystem& rs, int bound, bool zero_sum, std::size_t cap,
                               Accept accept) {
  const int n = rs.rank();
  const int m = n + 1;
  double box = std::pow(2.0 * bound + 1.0, n);
  if (box > 50.0 * double(cap)) throw ResourceError("lattice enumeration exceeds the size cap");
  std::vector<Vec> out;
  std::vector<int> k(n, -bound);
  Vec h(m);
  while (true) {
    long sum = 0;
    for (int j = 0; j < n; ++j) {
      h(j) = k[j];
      sum += k[j];
    }
    if (zero_sum) {
      h(n) = -double(sum);
    } else {
      h(n) = 0;
      h.array() -= h.mean();
    }
    Vec v = rs.from_trace(h);
    if (accept(v)) {
      out.push_back(std::move(v));
      if (out.size() > cap) throw ResourceError("lattice ball exceeds the size cap");
    }
    int j = 0;
    while (j < n && k[j] == bound) k[j++] = -bound;
    if (j == n) break;
    ++k[j];
  }
  sort_by_norm(out);
  return out;
}

}  // namespace

std::vector<Vec> coroot_lattice_ball(const RootSystem& rs, double radius, std::size_t cap) {
  if (!(radius >= 0)) throw DomainError("coroot_lattice_ball: negative radius");
  int bound = static_cast<int>(std::floor(radius));
  double r2 = radius * radius * (1 + 1e-14);
  return enumerate_box(rs, bound, true, cap, [&](const Vec& v) { return v.squaredNorm() <= r2; });
}

std::vector<Vec> weight_lattice_ball(const RootSystem& rs, double radius, std::size_t cap) {
  if (!(radius >= 0)) throw DomainError("weight_lattice_ball: negative radius");
  int bound = static_cast<int>(std::floor(std::sqrt(2.0) * radius)) + 1;
  double r2 = radius * radius * (1 + 1e-14);
  return enumerate_box(rs, bound, false, cap, [&](const Vec& v) { return v.squaredNorm() <= r2; });
}

Vec weight_from_labels(const RootSystem& rs, const std::vector<int>& labels) {
  Vec w = Vec::Zero(rs.rank());
  for (int i = 0; i < rs.rank(); ++i) w += labels[i] * rs.fundamental_weights()[i];
  return w;
}

std::vector<int> dynkin_labels(const RootSystem& rs, const Vec& lambda) {
  std::vector<int> labels;
  for (const auto& a : rs.simple_roots()) {
    double v = a.dot(lambda);
    long r = std::lround(v);
    if (std::abs(v - double(r)) > 1e-9 || r < 0) throw DomainError("weight is not dominant integral");
    labels.push_back(static_cast<int>(r));
  }
  return labels;
}

double weyl_dimension(const RootSystem& rs, const Vec& lambda) {
  Vec s = lambda + rs.rho();
  double p = 1;
  for (const auto& a : rs.positive_roots()) p *= a.dot(s);
  return p / rs.rho_product();
}

std::vector<DominantWeight> dominant_weight_table(const RootSystem& rs, double radius) {
  std::vector<DominantWeight> out;
  if (radius <= 0) return out;
  const int n = rs.rank();
  int mmax = static_cast<int>(std::floor(std::sqrt(2.0) * radius));
  std::vector<int> m(n, 0);
  double r2 = radius * radius * (1 + 1e-14);
  while (true) {
    Vec w = weight_from_labels(rs, m);
    Vec s = w + rs.rho();
    if (s.squaredNorm() <= r2) {
      DominantWeight d;
      d.labels = m;
      d.weight = w;
      d.shifted = s;
      d.shifted_norm2 = s.squaredNorm();
      d.dim = std::round(weyl_dimension(rs, w));
      for (const auto& e : rs.weyl_group()) d.orbit.emplace_back(e.matrix * s, e.sign);
      out.push_back(std::move(d));
    }
    int j = 0;
    while (j < n && m[j] == mmax) m[j++] = 0;
    if (j == n) break;
    ++m[j];
  }
  std::sort(out.begin(), out.end(), [](const DominantWeight& a, const DominantWeight& b) {
    if (std::abs(a.shifted_norm2 - b.shifted_norm2) > 1e-9) return a.shifted_norm2 < b.shifted_norm2;
    return a.labels < b.labels;
  });
  return out;
}

std::vector<Vec> dominant_weights_ball(const RootSystem& rs, double radius) {
  std::vector<Vec> out;
  for (auto& d : dominant_weight_table(rs, radius)) out.push_back(d.weight);
  return out;
}

const std::vector<DominantWeight>& cached_dominant(const RootSystem& rs, double radius) {
  auto& c = rs.cache();
  long key = radius_key(radius);
  std::lock_guard lock(c.mu);
  auto& slot = c.dominant[key];
  if (!slot)
    slot = std::make_unique<const std::vector<DominantWeight>>(dominant_weight_table(rs, key * 0.5));
  return *slot;
}

const std::vector<Vec>& cached_coroots(const RootSystem& rs, double radius) {
  auto& c = rs.cache();
  long key = radius_key(radius);
  std::lock_guard lock(c.mu);
  auto& slot = c.coroot[key];
  if (!slot) slot = std::make_unique<const std::vector<Vec>>(coroot_lattice_ball(rs, key * 0.5));
  return *slot;
}

const std::vector<Vec>& cached_weights(const RootSystem& rs, double radius) {
  auto& c = rs.cache();
  long key = radius_key(radius);
  std::lock_guard lock(c.mu);
  auto& slot = c.weight[key];
  if (!slot) slot = std::make_unique<const std::vector<Vec>>(weight_lattice_ball(rs, key * 0.5));
  return *slot;
}

}  // namespace affsim
