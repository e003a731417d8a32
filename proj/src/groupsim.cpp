#include "affsim/groupsim.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "affsim/errors.hpp"

namespace affsim {

namespace {
constexpr cplx kI(0, 1);
constexpr char kMagic[8] = {'A', 'F', 'F', 'S', 'I', 'M', 'S', '1'};
constexpr std::uint32_t kDumpVersion = 1;

using M2 = Eigen::Matrix2cd;

inline M2 su2_matrix(double c0, double c1, double c2) {
  const double r2pi = std::sqrt(2.0) * kPi;
  M2 X;
  X << cplx(0, r2pi * c0), cplx(r2pi * c1, r2pi * c2), cplx(-r2pi * c1, r2pi * c2), cplx(0, -r2pi * c0);
  return X;
}

inline M2 su2_exp(double c0, double c1, double c2) {
  const double theta = std::sqrt(2.0) * kPi * std::sqrt(c0 * c0 + c1 * c1 + c2 * c2);
  double sc = theta < 1e-8 ? 1.0 - theta * theta / 6 : std::sin(theta) / theta;
  M2 E = sc * su2_matrix(c0, c1, c2);
  E(0, 0) += std::cos(theta);
  E(1, 1) += std::cos(theta);
  return E;
}

CMat reorthonormalize(const CMat& U) {
  Eigen::HouseholderQR<CMat> qr(U);
  CMat Q = qr.householderQ();
  CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    cplx d = R(j, j);
    Q.col(j) *= d / std::abs(d);
  }
  cplx det = Q.determinant();
  return Q * std::exp(-kI * std::arg(det) / double(Q.rows()));
}

}  // namespace

LieAlgebra::LieAlgebra(const RootSystem& rs) : rs_(&rs), m_(rs.trace_dim()) {
  const Mat& B = rs.trace_basis();
  for (int k = 0; k < rs.rank(); ++k) {
    CMat H = CMat::Zero(m_, m_);
    for (int j = 0; j < m_; ++j) H(j, j) = kI * (2 * kPi * B(j, k));
    basis_.push_back(H);
  }
  const double c = std::sqrt(2.0) * kPi;
  for (int j = 0; j < m_; ++j)
    for (int k = j + 1; k < m_; ++k) {
      CMat A = CMat::Zero(m_, m_), S = CMat::Zero(m_, m_);
      A(j, k) = c;
      A(k, j) = -c;
      S(j, k) = kI * c;
      S(k, j) = kI * c;
      basis_.push_back(A);
      basis_.push_back(S);
    }
}

CMat LieAlgebra::to_matrix(const Eigen::Ref<const Vec>& coords) const {
  if (m_ == 2) return su2_matrix(coords(0), coords(1), coords(2));
  CMat X = CMat::Zero(m_, m_);
  for (int i = 0; i < dim(); ++i) X += coords(i) * basis_[i];
  return X;
}

Vec LieAlgebra::from_matrix(const CMat& X) const {
  Vec c(dim());
  for (int i = 0; i < dim(); ++i) c(i) = -(X * basis_[i]).trace().real() / (4 * kPi * kPi);
  return c;
}

CMat exp_algebra(const CMat& X) {
  if (X.rows() == 2) {
    double c0 = X(0, 0).imag() / (std::sqrt(2.0) * kPi);
    double c1 = X(0, 1).real() / (std::sqrt(2.0) * kPi);
    double c2 = X(0, 1).imag() / (std::sqrt(2.0) * kPi);
    return su2_exp(c0, c1, c2);
  }
  // X = iH with H Hermitian
  CMat H = -kI * X;
  H = 0.5 * (H + H.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  Eigen::VectorXcd ph = (kI * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

double unitarity_defect(const CMat& U) {
  return (U.adjoint() * U - CMat::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
}

PathSample sample_bm_path(const LieAlgebra& alg, double sigma, int steps, RandomStream& rng) {
  if (!(sigma > 0)) throw DomainError("sample_bm_path: sigma must be positive");
  if (steps < 1) throw DomainError("sample_bm_path: at least one step required");
  PathSample p;
  p.sigma = sigma;
  p.seed = rng.seed();
  p.replica = rng.replica();
  p.increments.resize(alg.dim(), steps);
  const double sd = std::sqrt(sigma / steps);
  for (int k = 0; k < steps; ++k)
    for (int i = 0; i < alg.dim(); ++i) p.increments(i, k) = sd * rng.normal();
  return p;
}

GroupPath stochastic_exponential(const LieAlgebra& alg, const Mat& increments, double lambda, bool keep_nodes) {
  if (!(lambda > 0)) throw DomainError("stochastic_exponential: lambda must be positive");
  if (!increments.allFinite()) throw DataError("stochastic_exponential: non-finite increment");
  GroupPath out;
  const int S = static_cast<int>(increments.cols());
  const int m = alg.size();
  if (keep_nodes) out.nodes.push_back(CMat::Identity(m, m));
  if (m == 2) {
    M2 X = M2::Identity();
    for (int k = 0; k < S; ++k) {
      X = X * su2_exp(increments(0, k) / lambda, increments(1, k) / lambda, increments(2, k) / lambda);
      if ((k & 63) == 63 || k + 1 == S) {
        if (unitarity_defect(X) > 1e-12) {
          X = reorthonormalize(X);
          ++out.reorthonormalizations;
        }
      }
      if (keep_nodes) out.nodes.push_back(X);
    }
    out.endpoint = X;
    return out;
  }
  CMat X = CMat::Identity(m, m);
  for (int k = 0; k < S; ++k) {
    X = X * exp_algebra(alg.to_matrix(increments.col(k) / lambda));
    if ((k & 15) == 15 || k + 1 == S) {
      if (unitarity_defect(X) > 1e-12) {
        X = reorthonormalize(X);
        ++out.reorthonormalizations;
      }
    }
    if (keep_nodes) out.nodes.push_back(X);
  }
  out.endpoint = X;
  return out;
}

AlcovePoint radial_part(const RootSystem& rs, const CMat& U) {
  if (U.rows() != rs.trace_dim() || U.cols() != rs.trace_dim()) throw DomainError("radial_part: size mismatch");
  if (rs.trace_dim() == 2) {
    cplx a = U(0, 0), b = U(0, 1);
    double phi = std::atan2(std::sqrt(a.imag() * a.imag() + std::norm(b)), a.real());
    Vec z(1);
    z(0) = phi / (kPi * std::sqrt(2.0));
    return fold_to_alcove(rs, z).point;
  }
  Eigen::ComplexEigenSolver<CMat> es(U, false);
  const int m = rs.trace_dim();
  Vec phi(m);
  for (int j = 0; j < m; ++j) phi(j) = std::arg(es.eigenvalues()(j)) / (2 * kPi);
  phi(0) -= std::round(phi.sum());
  phi.array() -= phi.mean();
  return fold_to_alcove(rs, rs.from_trace(phi)).point;
}

CMat haar_sample(const RootSystem& rs, RandomStream& rng) {
  const int m = rs.trace_dim();
  CMat Z(m, m);
  const double s = std::sqrt(0.5);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) Z(i, j) = cplx(s * rng.normal(), s * rng.normal());
  return reorthonormalize(Z);
}

AlcovePoint rad_of_bm(const LieAlgebra& alg, double sigma, int steps, RandomStream& rng) {
  auto p = sample_bm_path(alg, sigma, steps, rng);
  return radial_part(alg.root_system(), stochastic_exponential(alg, p.increments).endpoint);
}

SheetSample sample_sheet(const LieAlgebra& alg, int steps, const std::vector<double>& t_grid, RandomStream& rng) {
  if (steps < 1) throw DomainError("sample_sheet: at least one step required");
  if (t_grid.empty()) throw DomainError("sample_sheet: empty time grid");
  const int T = static_cast<int>(t_grid.size());
  std::vector<double> sd(T);
  for (int j = 0; j < T; ++j) {
    double dt = t_grid[j] - (j ? t_grid[j - 1] : 0.0);
    if (!(dt > 0)) throw DomainError("sample_sheet: time grid must be increasing and positive");
    sd[j] = std::sqrt(dt / steps);
  }
  SheetSample sh;
  sh.t_grid = t_grid;
  sh.increments.resize(alg.dim(), Eigen::Index(steps) * T);
  for (int k = 0; k < steps; ++k)
    for (int j = 0; j < T; ++j)
      for (int i = 0; i < alg.dim(); ++i) sh.increments(i, Eigen::Index(k) * T + j) = sd[j] * rng.normal();
  return sh;
}

std::vector<std::pair<double, AlcovePoint>> sheet_radial_process(const LieAlgebra& alg, const SheetSample& sheet) {
  const int T = static_cast<int>(sheet.t_grid.size());
  const int S = sheet.steps();
  Mat cum = Mat::Zero(alg.dim(), S);
  std::vector<std::pair<double, AlcovePoint>> out;
  for (int j = 0; j < T; ++j) {
    for (int k = 0; k < S; ++k) cum.col(k) += sheet.increments.col(Eigen::Index(k) * T + j);
    const double t = sheet.t_grid[j];
    auto g = stochastic_exponential(alg, cum / t);
    out.emplace_back(t, radial_part(alg.root_system(), g.endpoint));
  }
  return out;
}

Mat gauge_act(const LieAlgebra& alg, const std::vector<Vec>& loop, const Mat& increments, double lambda) {
  const Eigen::Index S = increments.cols();
  if (static_cast<Eigen::Index>(loop.size()) != S + 1) throw DomainError("gauge_act: loop needs S+1 nodes");
  std::vector<CMat> g;
  for (const auto& l : loop) g.push_back(exp_algebra(alg.to_matrix(l)));
  if ((g.front() - g.back()).cwiseAbs().maxCoeff() > 1e-12) throw DomainError("gauge_act: loop is not closed");
  Mat out(alg.dim(), S);
  for (Eigen::Index k = 0; k < S; ++k) {
    CMat ad = g[k] * alg.to_matrix(increments.col(k)) * g[k].adjoint();
    CMat step = g[k] * g[k + 1].adjoint();
    CMat lg = step.log();
    out.col(k) = alg.from_matrix(ad) + lambda * alg.from_matrix(lg);
  }
  return out;
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("sample dump truncated");
  return v;
}

}  // namespace

void write_dump(const std::string& path, const SampleDump& d) {
  if (d.values.size() != d.count * d.steps * d.times * d.dim) throw DataError("sample dump size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path);
  os.write(kMagic, 8);
  put<std::uint32_t>(os, kDumpVersion);
  put<char>(os, d.family);
  put<std::uint32_t>(os, d.rank);
  put<std::uint64_t>(os, d.steps);
  put<std::uint64_t>(os, d.times);
  put<std::uint64_t>(os, d.seed);
  put<std::uint32_t>(os, d.dim);
  put<std::uint64_t>(os, d.count);
  os.write(reinterpret_cast<const char*>(d.values.data()), std::streamsize(d.values.size() * sizeof(double)));
}

SampleDump read_dump(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw DataError("bad sample dump magic");
  if (get<std::uint32_t>(is) != kDumpVersion) throw DataError("unsupported sample dump version");
  SampleDump d;
  d.family = get<char>(is);
  d.rank = get<std::uint32_t>(is);
  d.steps = get<std::uint64_t>(is);
  d.times = get<std::uint64_t>(is);
  d.seed = get<std::uint64_t>(is);
  d.dim = get<std::uint32_t>(is);
  d.count = get<std::uint64_t>(is);
  d.values.resize(d.count * d.steps * d.times * d.dim);
  is.read(reinterpret_cast<char*>(d.values.data()), std::streamsize(d.values.size() * sizeof(double)));
  if (!is) throw DataError("sample dump truncated");
  return d;
}

SampleDump make_dump(const RootSystem& rs, std::span<const PathSample> paths, std::uint64_t seed) {
  SampleDump d;
  d.family = rs.family();
  d.rank = static_cast<std::uint32_t>(rs.rank());
  d.seed = seed;
  d.count = paths.size();
  if (!paths.empty()) {
    d.steps = static_cast<std::uint64_t>(paths[0].steps());
    d.dim = static_cast<std::uint32_t>(paths[0].increments.rows());
  }
  for (const auto& p : paths) {
    if (static_cast<std::uint64_t>(p.steps()) != d.steps) throw DataError("paths of unequal length");
    for (int k = 0; k < p.steps(); ++k)
      for (Eigen::Index i = 0; i < p.increments.rows(); ++i) d.values.push_back(p.increments(i, k));
  }
  return d;
}

}  // namespace affsim
