#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reset/numerics.hpp"

using namespace reset;
using namespace reset::numerics;

TEST(BinomCdf, Examples) {
    EXPECT_NEAR(binom_cdf(0, 4, 0.5), 0.0625, 1e-15);
    EXPECT_NEAR(binom_cdf(1, 4, 0.5), 5.0 / 16.0, 1e-15);
    EXPECT_EQ(binom_cdf(7, 7, 0.3), 1.0);
    EXPECT_EQ(binom_cdf(9, 7, 0.3), 1.0);
    EXPECT_THROW(binom_cdf(1, 4, 1.5), ConfigError);
    EXPECT_THROW(binom_cdf(1, 4, -0.1), ConfigError);
}

TEST(BinomCdf, MatchesDirectSummation) {
    for (double p : {0.1, 1.0 / 3.0, 0.5, 2.0 / 3.0}) {
        for (std::int64_t n = 0; n <= 200; ++n) {
            double prev = 0.0;
            for (std::int64_t d = 0; d <= n; ++d) {
                const double v = binom_cdf(d, n, p);
                ASSERT_NEAR(v, oracle::binom_cdf(d, n, p), 1e-12) << "n=" << n << " d=" << d << " p=" << p;
                ASSERT_GE(v, prev - 1e-15);
                prev = v;
            }
        }
    }
}

TEST(BinomCdf, DegenerateProbabilities) {
    EXPECT_EQ(binom_cdf(0, 5, 0.0), 1.0);
    EXPECT_EQ(binom_cdf(4, 5, 1.0), 0.0);
}

TEST(BetaQuantile, Examples) {
    EXPECT_NEAR(beta_quantile(1, 1, 0.1), 0.1, 1e-12);
    EXPECT_NEAR(beta_quantile(1, 100, 0.05), 1.0 - std::pow(0.95, 0.01), 1e-12);
    const double x = beta_quantile(2, 3, 0.5);
    EXPECT_NEAR(oracle::beta_cdf_quadrature(2, 3, x), 0.5, 1e-10);
}

TEST(BetaQuantile, InvertsCdfOnGrid) {
    for (double a : {0.5, 1.0, 2.0, 7.5, 40.0}) {
        for (double b : {0.5, 1.0, 3.0, 25.0, 300.0}) {
            for (double q : {1e-6, 0.01, 0.1, 0.5, 0.9, 0.999}) {
                const double x = beta_quantile(a, b, q);
                ASSERT_GE(x, 0.0);
                ASSERT_LE(x, 1.0);
                ASSERT_NEAR(beta_cdf(a, b, x), q, 1e-10 * std::max(1.0, q / 1e-3)) << a << " " << b << " " << q;
            }
        }
    }
}

TEST(BetaQuantile, MatchesIntegerParameterOracle) {
    for (std::int64_t a : {1, 2, 5, 11}) {
        for (std::int64_t b : {1, 4, 30, 150}) {
            for (double q : {0.05, 0.1, 0.5}) {
                const double ref = oracle::bisect([&](double x) { return oracle::beta_cdf_integer(a, b, x); }, q, 0, 1);
                ASSERT_NEAR(beta_quantile(static_cast<double>(a), static_cast<double>(b), q), ref, 1e-10);
            }
        }
    }
}

TEST(BetaQuantile, RejectsInvalidArguments) {
    EXPECT_THROW(beta_quantile(0, 1, 0.5), ConfigError);
    EXPECT_THROW(beta_quantile(1, -1, 0.5), ConfigError);
    EXPECT_THROW(beta_quantile(1, 1, 0.0), ConfigError);
    EXPECT_THROW(beta_quantile(1, 1, 1.0), ConfigError);
}

TEST(NormalQuantile, Examples) {
    EXPECT_EQ(normal_quantile(0.5), 0.0);
    EXPECT_NEAR(normal_quantile(0.025), -1.959963984540054, 1e-12);
    EXPECT_NEAR(normal_quantile(0.025), oracle::normal_quantile_series(0.025), 1e-12);
    EXPECT_EQ(normal_quantile(0.0), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(normal_quantile(1.0), std::numeric_limits<double>::infinity());
}

TEST(NormalQuantile, SymmetricMonotoneAndInverse) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double q = 1e-4; q < 1.0; q += 1e-3) {
        const double z = normal_quantile(q);
        ASSERT_GT(z, prev);
        prev = z;
        ASSERT_NEAR(normal_quantile(1.0 - q), -z, 1e-9);
        ASSERT_NEAR(normal_cdf(z), q, 1e-10);
        ASSERT_NEAR(z, oracle::normal_quantile_series(q), 1e-10);
    }
    for (double q : {1e-300, 1e-100, 1e-20, 1e-10}) {
        ASSERT_NEAR(normal_cdf(normal_quantile(q)) / q, 1.0, 1e-9);
    }
}

TEST(FDistribution, SurvivalMatchesKnownValues) {
    // F(1, n) is the square of a t(n); F(1, inf) ~ chi-square(1).
    EXPECT_NEAR(f_sf(3.841458820694124, 1, 1e7), 0.05, 1e-5);
    // F(2, d2) has closed form (1 + 2 f / d2)^(-d2/2).
    EXPECT_NEAR(f_sf(1.7, 2, 30), std::pow(1.0 + 2.0 * 1.7 / 30.0, -15.0), 1e-13);
}
