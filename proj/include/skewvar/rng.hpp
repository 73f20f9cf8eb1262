#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace skewvar {

// xoshiro256++ seeded through splitmix64. A (seed, stream) pair fully
// determines the draw sequence, so workers can own independent streams and a
// run replays bit-for-bit under any scheduling.
class RngHandle {
 public:
  RngHandle() : RngHandle(0, 0) {}
  explicit RngHandle(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Deterministically derived child stream (substream tree).
  RngHandle split(std::uint64_t substream) const;

  std::uint64_t next_u64();
  double uniform01();  // open interval (0, 1)
  double normal();
  Eigen::VectorXd normal_vec(int k);
  double gamma(double shape, double scale);
  double chi_square(double dof) { return gamma(0.5 * dof, 2.0); }

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

Eigen::VectorXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, RngHandle& rng);

// Draw from IW(scale, dof) via the Bartlett decomposition of the Wishart of
// the inverted scale.
Eigen::MatrixXd draw_inverse_wishart(const Eigen::MatrixXd& scale, int dof, RngHandle& rng);

struct SkewDraw {
  Eigen::VectorXd E;             // d .* tau + e, structural scale
  Eigen::VectorXd tau;           // |theta_parent|
  Eigen::VectorXd theta_parent;  // N(0, I)
};

// Composite skew-normal innovation. E is returned on the structural scale;
// observation-space innovations are A^{-1} E, applied by callers.
SkewDraw draw_skew_innovation(const Eigen::VectorXd& d, const Eigen::VectorXd& h,
                              const Eigen::MatrixXd& A, RngHandle& rng);

double std_normal_pdf(double z);
double std_normal_cdf(double z);

}  // namespace skewvar
