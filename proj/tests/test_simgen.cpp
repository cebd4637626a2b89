#include <gtest/gtest.h>

#include "mdep/simgen.hpp"
#include "oracles.hpp"

using namespace mdep;

TEST(BuildMixing, Formula) {
  for (const auto& a : build_mixing(4, 5, 2, 0.0, 0.7, MixingVariant::ReciprocalLag)) EXPECT_TRUE(a.isZero(0.0));
  const auto a = build_mixing(2, 3, 0, 1.0, 1.0, MixingVariant::ReciprocalLag);
  Eigen::MatrixXd expect(2, 3);
  expect << 1, 1, 0.25, 1, 1, 1;
  EXPECT_EQ(a[0], expect);
  const auto lin = build_mixing(2, 3, 2, 0.5, 1.0, MixingVariant::LinearLag);
  EXPECT_DOUBLE_EQ(lin[2](0, 2), 3 * 0.5 / 4);
  const auto rec = build_mixing(2, 3, 2, 0.5, 1.0, MixingVariant::ReciprocalLag);
  EXPECT_DOUBLE_EQ(rec[2](0, 1), 0.5 / 3);
}

TEST(BuildMixing, Banding) {
  const auto a = build_mixing(10, 12, 1, 0.6, 0.5, MixingVariant::ReciprocalLag);
  for (const auto& m : a)
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 12; ++j) {
        if (std::abs(i - j) > 5) EXPECT_EQ(m(i, j), 0.0);
        else EXPECT_GT(m(i, j), 0.0);
      }
  EXPECT_THROW(build_mixing(3, 4, 0, 1, 0.0, MixingVariant::LinearLag), ConfigError);
  EXPECT_THROW(build_mixing(3, 3, 0, 1, 0.5, MixingVariant::LinearLag), ConfigError);
}

TEST(InnovationCovariance, Values) {
  const auto diag = innovation_covariance(6, 5, 0.0, 0.9, Eigen::VectorXd::LinSpaced(6, 1, 2));
  EXPECT_TRUE(diag.sigma.isApprox(Eigen::MatrixXd(Eigen::VectorXd::LinSpaced(6, 1, 2).asDiagonal())));
  const auto s = innovation_covariance(8, 6, 0.3, 0.9);
  EXPECT_DOUBLE_EQ(s.sigma(2, 3), 0.3);
  EXPECT_DOUBLE_EQ(s.sigma(5, 3), 0.075);
  EXPECT_DOUBLE_EQ(s.sigma(1, 1), 1.0);
  EXPECT_TRUE((s.chol * s.chol.transpose()).isApprox(s.sigma, 1e-12));
}

TEST(InnovationCovariance, CatalogIsPositiveDefinite) {
  for (const auto& e : model_catalog())
    for (std::size_t p : {10, 100, 250, 416}) {
      const std::size_t m = static_cast<std::size_t>(std::ceil(1.2 * p));
      ASSERT_LE(m, 500u);
      EXPECT_NO_THROW(innovation_covariance(m, p, e.phi2, e.w)) << e.name << " p=" << p;
    }
  for (int g : {1, 2}) EXPECT_NO_THROW(build_spec(two_sample_params(g, 80, 3)));
}

TEST(InnovationCovariance, NotPositiveDefinite) {
  // A dense band with phi2 large enough to break diagonal dominance.
  try {
    innovation_covariance(40, 39, 3.0, 1.0);
    FAIL();
  } catch (const NotPositiveDefiniteError& e) {
    EXPECT_GE(e.minor(), 2u);
  }
}

TEST(TrueAutocov, DirectSums) {
  std::vector<Eigen::MatrixXd> eye = {Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)};
  const FactorModelSpec spec(eye, Eigen::MatrixXd::Identity(3, 3), {}, false);
  const ProcessMoments mom = true_autocov(spec);
  EXPECT_TRUE(mom.gamma(0).isApprox(2 * Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_TRUE(mom.gamma(1).isApprox(Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_TRUE(mom.gamma(2).isZero(0.0));
  EXPECT_THROW(true_autocov(spec, 2), DimensionError);
  EXPECT_THROW(FactorModelSpec(eye, Eigen::MatrixXd::Identity(3, 3)), ConfigError);

  const auto a = build_mixing(3, 4, 0, 0.7, 1.0, MixingVariant::ReciprocalLag);
  const FactorModelSpec s0(a, Eigen::MatrixXd::Identity(4, 4));
  EXPECT_TRUE(true_autocov(s0, 0).isApprox(a[0] * a[0].transpose()));
}

TEST(TrueAutocov, NonIdentitySigmaAndOmega) {
  const auto a = build_mixing(3, 5, 1, 0.6, 0.8, MixingVariant::ReciprocalLag);
  const auto cov = innovation_covariance(5, 3, 0.4, 0.8);
  const FactorModelSpec spec(a, cov.chol);
  const auto ref = autocov_from_mixing(a, cov.sigma);
  const ProcessMoments mom = true_autocov(spec);
  EXPECT_TRUE(mom.gamma(1).isApprox(ref[1], 1e-12));
  EXPECT_TRUE(mom.gamma(-1).isApprox(ref[1].transpose(), 1e-12));
  EXPECT_NEAR(mom.tr_omega(20), oracle::tr_omega_direct(mom, 20), 1e-12);
  const Eigen::MatrixXd om = mom.omega(20);
  EXPECT_NEAR(mom.tr_omega_sq(20), om.squaredNorm(), 1e-10);
  EXPECT_NEAR(mom.trace_product(1, -1), (ref[1] * ref[1].transpose()).trace(), 1e-12);
}

TEST(Generate, ZeroMixingGivesMean) {
  std::vector<Eigen::MatrixXd> zero = {Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 3)};
  const Eigen::Vector2d mu(1.5, -2);
  const FactorModelSpec spec(zero, Eigen::MatrixXd::Identity(3, 3), mu);
  RngStream rng(1, 1, 1);
  const auto x = generate(spec, 5, rng);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(x(t, 0), 1.5);
    EXPECT_EQ(x(t, 1), -2.0);
  }
}

TEST(Generate, Deterministic) {
  const FactorModelSpec spec = oracle::random_spec(4, 6, 2, 3);
  RngStream a(9, 9, 9), b(9, 9, 9);
  EXPECT_EQ(generate(spec, 30, a).values(), generate(spec, 30, b).values());
}

TEST(Generate, LongRunMean) {
  const auto a = build_mixing(3, 4, 2, 0.6, 1.0, MixingVariant::ReciprocalLag);
  const auto cov = innovation_covariance(4, 3, 0.3, 1.0);
  const Eigen::Vector3d mu(0.5, -1.0, 2.0);
  const FactorModelSpec spec(a, cov.chol, mu);
  const std::size_t n = 1000000;
  RngStream rng(4, 4, 4);
  const auto x = generate(spec, n, rng);
  const Eigen::VectorXd mean = x.values().colwise().mean();
  const Eigen::MatrixXd omega = true_autocov(spec).omega(n);
  for (int j = 0; j < 3; ++j) EXPECT_LT(std::abs(mean(j) - mu(j)), 4 * std::sqrt(omega(j, j) / n)) << j;
}

// Cross-covariances from independent short replicates: E[X_t X_{t+h}'] = Gamma(h)
// at both ends of the window, and zero beyond M.
TEST(Generate, CovarianceStationarityAndDependenceOrder) {
  const std::size_t M = 2, n = 8, R = 100000;
  const FactorModelSpec spec = oracle::random_spec(4, 6, M, 21);
  const ProcessMoments mom = true_autocov(spec);
  struct Cell {
    std::size_t t;
    std::size_t h;
  };
  const std::vector<Cell> cells = {{0, 0}, {0, 1}, {0, 2}, {5, 0}, {4, 1}, {5, 2}, {0, 3}, {4, 3}};
  std::vector<std::vector<oracle::RunningStats>> st(cells.size(), std::vector<oracle::RunningStats>(16));
  for (std::size_t r = 0; r < R; ++r) {
    RngStream rng(17, 2, r);
    const auto x = generate(spec, n, rng);
    for (std::size_t c = 0; c < cells.size(); ++c)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) st[c][i * 4 + j].add(x(cells[c].t, i) * x(cells[c].t + cells[c].h, j));
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Eigen::MatrixXd g = mom.gamma(static_cast<int>(cells[c].h));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const auto& s = st[c][i * 4 + j];
        EXPECT_LT(std::abs(s.mean - g(i, j)), 4.5 * s.se()) << "t=" << cells[c].t << " h=" << cells[c].h;
      }
  }
}

TEST(MeanScenario, Support) {
  RngStream rng(1, 2, 3);
  EXPECT_TRUE(sample_mean_scenario(MeanScenario::Null, 16, rng).isZero(0.0));
  const auto p1 = sample_mean_scenario(MeanScenario::Power1, 16, rng);
  EXPECT_GE(p1.minCoeff(), 0.5);
  EXPECT_LE(p1.maxCoeff(), 0.75);
  const auto p2 = sample_mean_scenario(MeanScenario::Power2, 16, rng);
  EXPECT_GE(p2.minCoeff(), 1.0);
  EXPECT_LE(p2.maxCoeff(), 1.5);
  const auto t1 = sample_mean_scenario(MeanScenario::TwoSample1, 16, rng);
  EXPECT_GE(t1.minCoeff(), 0.25);
  EXPECT_LE(t1.maxCoeff(), 0.5);
  const auto t2 = sample_mean_scenario(MeanScenario::TwoSample2, 16, rng);
  EXPECT_GE(t2.minCoeff(), 0.5);
  EXPECT_LE(t2.maxCoeff(), 1.0);
  EXPECT_EQ(parse_mean_scenario("power2"), MeanScenario::Power2);
  EXPECT_THROW(parse_mean_scenario("power3"), ConfigError);
}

TEST(Catalog, Parameters) {
  const auto& c = model_catalog();
  EXPECT_EQ(c[0].ratio, 4.0);
  EXPECT_EQ(c[1].phi1, 0.6);
  EXPECT_EQ(c[2].phi2, 0.6);
  EXPECT_EQ(c[3].w, 0.8);
  EXPECT_EQ(c[3].M, 3u);
  EXPECT_EQ(c[2].variant, MixingVariant::LinearLag);
  const ProcessParams p = catalog_params(catalog_entry("I"), 40);
  EXPECT_EQ(p.p, 160u);
  EXPECT_EQ(p.factor_dim(), 192u);
  EXPECT_THROW(catalog_entry("V"), ConfigError);
  const ProcessParams g2 = two_sample_params(2, 40, 2);
  EXPECT_EQ(g2.p, 160u);
  EXPECT_EQ(g2.w, 0.5);
  EXPECT_EQ(g2.phi1, 0.4);
  EXPECT_EQ(g2.phi2, 0.5);
}
