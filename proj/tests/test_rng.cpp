#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "skewvar/error.hpp"
#include "skewvar/rng.hpp"
#include "testutil.hpp"

using namespace skewvar;

TEST_CASE("identical seed and stream replay the same sequence") {
  RngHandle a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  RngHandle c(42, 7), d(42, 8);
  int same = 0;
  for (int i = 0; i < 1000; ++i)
    if (c.next_u64() == d.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("split streams are reproducible and distinct") {
  RngHandle root(9, 0);
  RngHandle a = root.split(3), b = root.split(3), c = root.split(4);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("draw_mvn near-degenerate covariance collapses to the mean") {
  RngHandle rng(1);
  Eigen::VectorXd mean(2);
  mean << 3.0, -1.0;
  Eigen::MatrixXd cov = 1e-16 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd draw = draw_mvn(mean, cov, rng);
  CHECK((draw - mean).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("draw_mvn sample covariance matches identity within 0.02") {
  RngHandle rng(2);
  const int n = 100000;
  Eigen::MatrixXd draws(n, 2);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  for (int i = 0; i < n; ++i) draws.row(i) = draw_mvn(mean, cov, rng).transpose();
  Eigen::MatrixXd centered = draws.rowwise() - draws.colwise().mean();
  Eigen::MatrixXd sample_cov = centered.transpose() * centered / (n - 1);
  CHECK((sample_cov - cov).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("draw_mvn sample mean within CLT bound for random SPD covariance") {
  RngHandle rng(3);
  Eigen::MatrixXd cov = testutil::random_spd(3, rng);
  Eigen::VectorXd mean(3);
  mean << 1.0, -2.0, 0.5;
  const int n = 50000;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) acc += draw_mvn(mean, cov, rng);
  acc /= n;
  for (int i = 0; i < 3; ++i) {
    double bound = 4.0 * std::sqrt(cov(i, i) / n);
    CHECK(std::abs(acc(i) - mean(i)) < bound);
  }
}

TEST_CASE("draw_mvn rejects a non-SPD covariance") {
  RngHandle rng(4);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 2.0, 2.0, 1.0;  // indefinite
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS((void)draw_mvn(mean, cov, rng), Error);
}

TEST_CASE("inverse wishart k=1 reduces to scaled inverse chi-square") {
  RngHandle rng(5);
  Eigen::MatrixXd scale(1, 1);
  scale << 3.0;
  const int dof = 8;
  const int n = 200000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += draw_inverse_wishart(scale, dof, rng)(0, 0);
  acc /= n;
  double expected = scale(0, 0) / (dof - 1 - 1);  // scale/(dof-k-1), k=1
  CHECK(acc == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("inverse wishart k=2 MC mean matches scale/(dof-k-1)") {
  RngHandle rng(6);
  Eigen::MatrixXd scale = Eigen::MatrixXd::Identity(2, 2);
  const int dof = 10;
  const int n = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < n; ++i) acc += draw_inverse_wishart(scale, dof, rng);
  acc /= n;
  Eigen::MatrixXd expected = scale / (dof - 2 - 1);
  CHECK((acc - expected).cwiseAbs().maxCoeff() < 0.02 * expected(0, 0) + 0.004);
}

TEST_CASE("inverse wishart k=3 mean matches within 3 MC standard errors") {
  RngHandle rng(16);
  Eigen::MatrixXd scale = testutil::random_spd(3, rng);
  const int dof = 12;
  const int n = 100000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  Eigen::MatrixXd acc2 = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd w = draw_inverse_wishart(scale, dof, rng);
    acc += w;
    acc2 += w.cwiseProduct(w);
  }
  acc /= n;
  acc2 /= n;
  Eigen::MatrixXd expected = scale / (dof - 3 - 1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double se = std::sqrt((acc2(i, j) - acc(i, j) * acc(i, j)) / n);
      CHECK(std::abs(acc(i, j) - expected(i, j)) < 3.0 * se);
    }
}

TEST_CASE("every inverse wishart draw passes Cholesky") {
  RngHandle rng(7);
  Eigen::MatrixXd scale = testutil::random_spd(3, rng);
  for (int i = 0; i < 200; ++i) {
    Eigen::MatrixXd w = draw_inverse_wishart(scale, 6, rng);
    Eigen::LLT<Eigen::MatrixXd> llt(w);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("inverse wishart rejects dof <= k-1") {
  RngHandle rng(8);
  Eigen::MatrixXd scale = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS((void)draw_inverse_wishart(scale, 2, rng), Error);
}

TEST_CASE("skew innovation with d=0 is standard normal") {
  RngHandle rng(9);
  const int n = 100000;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(1), h = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd draws(n);
  for (int i = 0; i < n; ++i) draws(i) = draw_skew_innovation(d, h, a, rng).E(0);
  CHECK(std::abs(testutil::skewness_of(draws)) < 0.05);
  CHECK(testutil::ks_pvalue_normal(draws) > 0.01);
}

TEST_CASE("skew innovation with vanishing noise has half-normal mean") {
  RngHandle rng(10);
  const int n = 1000000;
  Eigen::VectorXd d = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd h = Eigen::VectorXd::Constant(1, -60.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(1, 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += draw_skew_innovation(d, h, a, rng).E(0);
  acc /= n;
  const double half_normal_mean = std::sqrt(2.0 / M_PI);
  CHECK(acc == doctest::Approx(half_normal_mean).epsilon(0.005));
}

TEST_CASE("skew innovation MC skewness sign follows d") {
  RngHandle rng(11);
  const int n = 200000;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(1);
  for (double dval : {2.0, -2.0}) {
    Eigen::VectorXd d = Eigen::VectorXd::Constant(1, dval);
    Eigen::VectorXd draws(n);
    for (int i = 0; i < n; ++i) draws(i) = draw_skew_innovation(d, h, a, rng).E(0);
    CHECK(testutil::skewness_of(draws) * dval > 0.0);
  }
}

TEST_CASE("skew innovation returns tau = |theta_parent| bitwise") {
  RngHandle rng(12);
  Eigen::VectorXd d(3), h(3);
  d << 1.0, -0.5, 0.0;
  h << 0.1, -0.2, 0.3;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  for (int i = 0; i < 50; ++i) {
    SkewDraw s = draw_skew_innovation(d, h, a, rng);
    CHECK((s.tau - s.theta_parent.cwiseAbs()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("standard normal pdf and cdf values") {
  CHECK(std_normal_pdf(0.0) == doctest::Approx(0.3989422804).epsilon(1e-9));
  CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std_normal_cdf(1.96) == doctest::Approx(0.9750021049).epsilon(1e-8));
}

TEST_CASE("normal cdf matches quadrature of the pdf to 1e-12") {
  // Simpson quadrature oracle over [-8, z].
  auto quad_cdf = [](double z) {
    const int steps = 20000;
    double lo = -8.0;
    double hth = (z - lo) / steps;
    double acc = std_normal_pdf(lo) + std_normal_pdf(z);
    for (int i = 1; i < steps; ++i)
      acc += std_normal_pdf(lo + i * hth) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * hth / 3.0 + std_normal_cdf(-8.0);
  };
  for (double z : {-4.0, -1.0, 0.3, 1.96, 3.5}) {
    CHECK(std_normal_cdf(z) == doctest::Approx(quad_cdf(z)).epsilon(1e-12));
  }
}

TEST_CASE("gamma sampler mean and variance") {
  RngHandle rng(13);
  const int n = 200000;
  for (double shape : {0.5, 2.5, 30.0}) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rng.gamma(shape, 2.0);
    acc /= n;
    CHECK(acc == doctest::Approx(shape * 2.0).epsilon(0.02));
  }
}
