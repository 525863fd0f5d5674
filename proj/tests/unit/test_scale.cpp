#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fixq/errors.hpp"
#include "fixq/random.hpp"
#include "fixq/scale.hpp"
#include "oracle/scalar.hpp"

using namespace fixq;

TEST(ScaleFactor, Examples) {
    EXPECT_EQ(scale_factor_for_max(0.3, 0.5).value(), 1.0);
    EXPECT_EQ(scale_factor_for_max(0.75, 0.5).value(), 0.5);
    EXPECT_EQ(scale_factor_for_max(0.75, 0.5).scale(0.75), 0.375);
    const ScaleFactor edge = scale_factor_for_max(0.5, 0.5);
    EXPECT_EQ(edge.value(), 0.5);
    EXPECT_EQ(edge.scale(0.5), 0.25);
}

TEST(ScaleFactor, AllZeroGroupUsesExponentZero) {
    const std::vector<float> zeros(4, 0.0f);
    EXPECT_EQ(scale_factor(std::span<const float>(zeros), 0.5).exponent, 0);
}

TEST(ScaleFactor, NonFiniteInputIsRejected) {
    const std::vector<float> bad{1.0f, std::numeric_limits<float>::quiet_NaN()};
    EXPECT_THROW(scale_factor(std::span<const float>(bad), 0.5), NumericError);
    const std::vector<float> inf{std::numeric_limits<float>::infinity()};
    EXPECT_THROW(scale_factor(std::span<const float>(inf), 0.5), NumericError);
}

TEST(ScaleFactor, ScaledMaxLandsInHalfOpenRange) {
    Rng rng(1);
    for (int i = 0; i < 20000; ++i) {
        const double m = std::ldexp(rng.uniform(0.5, 1.0), static_cast<int>(rng.below(60)) - 30);
        for (double alpha : {0.5, 1.0}) {
            const ScaleFactor sf = scale_factor_for_max(m, alpha);
            const double s = sf.scale(m);
            ASSERT_GE(s, alpha / 2);
            ASSERT_LT(s, alpha);
            ASSERT_EQ(sf.exponent, oracle::sf_exponent(m, alpha == 0.5 ? -1 : 0));
        }
    }
}

TEST(ScaleFactor, AuditRange) {
    EXPECT_TRUE(ScaleFactor{-8}.fits_audit_range());
    EXPECT_TRUE(ScaleFactor{7}.fits_audit_range());
    EXPECT_FALSE(ScaleFactor{8}.fits_audit_range());
    EXPECT_FALSE(ScaleFactor{-9}.fits_audit_range());
}

TEST(Log2, ExactAtPowersOfTwoAndNeighbours) {
    for (int k = -60; k <= 60; ++k) {
        const double p = std::ldexp(1.0, k);
        EXPECT_EQ(floor_log2(p), k);
        EXPECT_EQ(ceil_log2(p), k);
        EXPECT_EQ(floor_log2(std::nextafter(p, 0.0)), k - 1);
        EXPECT_EQ(ceil_log2(std::nextafter(p, 1e300)), k + 1);
    }
    EXPECT_EQ(ceil_log2(0.0924), -3);
    EXPECT_THROW(exponent_of_power_of_two(0.3), ContractError);
    EXPECT_EQ(exponent_of_power_of_two(0.5), -1);
}
