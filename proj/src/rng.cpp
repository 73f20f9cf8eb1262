#include "skewvar/rng.hpp"

#include <cmath>

#include "skewvar/error.hpp"

namespace skewvar {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngHandle::RngHandle(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::uint64_t x = seed;
  (void)splitmix64(x);
  x ^= 0xa0761d6478bd642fULL * (stream + 1);
  for (auto& s : s_) s = splitmix64(x);
}

RngHandle RngHandle::split(std::uint64_t substream) const {
  std::uint64_t x = stream_;
  std::uint64_t mixed = splitmix64(x) ^ (substream + 0x9e3779b97f4a7c15ULL);
  return RngHandle(seed_, mixed);
}

std::uint64_t RngHandle::next_u64() {
  std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngHandle::uniform01() {
  // 53-bit mantissa, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngHandle::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  have_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

Eigen::VectorXd RngHandle::normal_vec(int k) {
  Eigen::VectorXd z(k);
  for (int i = 0; i < k; ++i) z(i) = normal();
  return z;
}

double RngHandle::gamma(double shape, double scale) {
  require(shape > 0 && scale > 0, "gamma draw needs positive shape/scale, got {} {}", shape, scale);
  // Marsaglia-Tsang; shape < 1 handled by the boost u^{1/shape}.
  double boost = 1.0;
  double a = shape;
  if (a < 1.0) {
    boost = std::pow(uniform01(), 1.0 / a);
    a += 1.0;
  }
  double d = a - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v * scale;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return boost * d * v * scale;
  }
}

Eigen::VectorXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, RngHandle& rng) {
  require(cov.rows() == cov.cols() && cov.rows() == mean.size(),
          "draw_mvn dimension mismatch: mean {} cov {}x{}", mean.size(), cov.rows(), cov.cols());
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    fail("draw_mvn: covariance not SPD (smallest eigenvalue {})",
         es.eigenvalues().minCoeff());
  }
  return mean + llt.matrixL() * rng.normal_vec(static_cast<int>(mean.size()));
}

Eigen::MatrixXd draw_inverse_wishart(const Eigen::MatrixXd& scale, int dof, RngHandle& rng) {
  const int k = static_cast<int>(scale.rows());
  require(scale.cols() == k, "inverse wishart scale must be square, got {}x{}", scale.rows(),
          scale.cols());
  require(dof > k - 1, "inverse wishart needs dof > k-1, got dof {} for k {}", dof, k);
  Eigen::LLT<Eigen::MatrixXd> llt_scale(scale);
  require(llt_scale.info() == Eigen::Success, "inverse wishart scale matrix is not SPD");

  // X = C A A' C' ~ Wishart(scale^{-1}, dof) for any C with C C' = scale^{-1};
  // with scale = Ls Ls', C = (Ls^{-1})' works.
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd Linv = llt_scale.matrixL().solve(I);
  Eigen::MatrixXd bart = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    bart(i, i) = std::sqrt(rng.chi_square(static_cast<double>(dof - i)));
    for (int j = 0; j < i; ++j) bart(i, j) = rng.normal();
  }
  Eigen::MatrixXd F = Linv.transpose() * bart;  // X = F F'
  // IW draw = X^{-1} = F^{-T} F^{-1}.
  Eigen::MatrixXd Finv = F.partialPivLu().solve(I);
  Eigen::MatrixXd out = Finv.transpose() * Finv;
  return 0.5 * (out + out.transpose());
}

SkewDraw draw_skew_innovation(const Eigen::VectorXd& d, const Eigen::VectorXd& h,
                              const Eigen::MatrixXd& A, RngHandle& rng) {
  const int n = static_cast<int>(d.size());
  require(h.size() == n, "draw_skew_innovation: d has {} entries but h has {}", n, h.size());
  require(A.rows() == n && A.cols() == n, "draw_skew_innovation: A must be {0}x{0}", n);
  SkewDraw out;
  out.theta_parent = rng.normal_vec(n);
  out.tau = out.theta_parent.cwiseAbs();
  out.E = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i)
    out.E(i) = d(i) * out.tau(i) + std::exp(0.5 * h(i)) * rng.normal();
  return out;
}

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(kTwoPi);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace skewvar
