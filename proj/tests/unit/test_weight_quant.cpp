#include <gtest/gtest.h>

#include <cmath>

#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"
#include "fixq/quantized_tensor.hpp"
#include "fixq/weight_quant.hpp"
#include "oracle/scalar.hpp"
#include "support.hpp"

using namespace fixq;

TEST(QuantizeWeights, ZeroTensorGivesZeroLevelsAndError) {
    const Tensor t = Tensor::weight(2, 3, 3, 4, std::vector<float>(72, 0.0f));
    for (auto m : {QuantMethod::LQ, QuantMethod::NLQ}) {
        const QuantizedTensor q = quantize_weights(t, GroupScheme::ChannelWise, m);
        for (double v : dequantize_values(q)) EXPECT_EQ(v, 0.0);
        EXPECT_EQ(quant_error(t, q).total, 0.0);
    }
    const QuantizedTensor l = quantize_weights(t, GroupScheme::LayerWise, QuantMethod::LQ);
    EXPECT_EQ(quant_error(t, l).total, 0.0);
}

TEST(QuantizeWeights, SingleGroupExample) {
    const Tensor t = Tensor::weight(3, 1, 1, 1, {0.3f, -0.1f, 0.01f});
    const QuantizedTensor q = quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::NLQ);
    ASSERT_EQ(q.sf_exponents.size(), 1u);
    EXPECT_EQ(q.sf_exponents[0], 0);
    EXPECT_EQ(q.codebook_id, "weight-nlq-n8");
    const auto v = dequantize_values(q);
    EXPECT_EQ(v[0], 0.296875);
    EXPECT_EQ(v[1], -0.1015625);
    EXPECT_EQ(v[2], 10.0 / 1024);
}

TEST(QuantizeWeights, LevelsMatchTheScalarOracle) {
    Rng rng(11);
    const Tensor t = testing_support::random_weight(rng, 4, 3, 8, 0.07);
    const QuantizedTensor q = quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::NLQ);
    const auto grid = oracle::weight_nlq8_grid();
    for (std::size_t i = 0; i < t.size(); ++i) {
        const std::size_t o = i % 8;
        double m = 0.0;
        for (std::size_t j = o; j < t.size(); j += 8) m = std::max(m, std::fabs(double(t[j])));
        const int e = oracle::sf_exponent(m, -1);
        ASSERT_EQ(q.sf_exponents[o], e);
        const double sw = std::ldexp(double(t[i]), e);
        ASSERT_EQ(q.levels[i], oracle::grid_index(grid, oracle::weight_nlq8(sw)));
    }
}

namespace {

double reconstruction_error(const Tensor& t, const QuantizedTensor& q) {
    const auto d = dequantize_values(q);
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += (double(t[i]) - d[i]) * (double(t[i]) - d[i]);
    return s;
}

}  // namespace

TEST(QuantizeWeights, ChannelWiseNeverWorseThanLayerWise) {
    Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        Tensor t = testing_support::random_weight(rng, 3, 3, 16, 0.05);
        if (trial % 2)
            for (std::size_t i = 0; i < t.size(); ++i) t[i] *= static_cast<float>(std::ldexp(1.0, -int(i % 16) / 3));
        for (auto m : {QuantMethod::LQ, QuantMethod::NLQ}) {
            const QuantizedTensor cw = quantize_weights(t, GroupScheme::ChannelWise, m);
            const QuantizedTensor lw = quantize_weights(t, GroupScheme::LayerWise, m);
            EXPECT_LE(reconstruction_error(t, cw), reconstruction_error(t, lw));
            // The sf-weighted error keeps one factor of sf, so only the uniform grid is ordered by it.
            if (m == QuantMethod::LQ) EXPECT_LE(quant_error(t, cw).total, quant_error(t, lw).total);
        }
    }
}

TEST(QuantizeWeights, LloydNeedsLayerWise) {
    Rng rng(1);
    const Tensor t = testing_support::random_weight(rng, 2, 3, 4, 0.1);
    EXPECT_THROW(quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::Lloyd), ContractError);
    const QuantizedTensor q = quantize_weights(t, GroupScheme::LayerWise, QuantMethod::Lloyd);
    EXPECT_EQ(q.codebook_id, "lloyd-lut");
    EXPECT_FALSE(q.lut.empty());
    EXPECT_LE(q.lut.size(), 256u);
}

TEST(QuantizeWeights, LloydBeatsUniformLayerWise) {
    Rng rng(9);
    Tensor t = testing_support::random_weight(rng, 8, 5, 16, 0.05);
    const double lloyd = quant_error(t, quantize_weights(t, GroupScheme::LayerWise, QuantMethod::Lloyd)).total;
    const double lq = quant_error(t, quantize_weights(t, GroupScheme::LayerWise, QuantMethod::LQ)).total;
    EXPECT_LT(lloyd, lq);
}

TEST(QuantizeWeights, RejectsBadInput) {
    const Tensor a = Tensor::activation(2, 2, 1, {0, 0, 0, 0});
    EXPECT_THROW(quantize_weights(a, GroupScheme::ChannelWise, QuantMethod::NLQ), ContractError);
    Tensor t = Tensor::weight(1, 1, 1, 2, {0.1f, NAN});
    EXPECT_THROW(quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::NLQ), NumericError);
    t[1] = 0.2f;
    EXPECT_THROW(quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::NLQ, 9), ContractError);
    EXPECT_THROW(method_from_string("kmeans"), ContractError);
}

TEST(QuantizeWeights, ExperimentalBitDepths) {
    Rng rng(4);
    const Tensor t = testing_support::random_weight(rng, 3, 3, 4, 0.1);
    double prev = 1e300;
    for (int bits : {4, 6, 8}) {
        const QuantizedTensor q = quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::NLQ, bits);
        EXPECT_EQ(q.codebook_id, "weight-nlq-n" + std::to_string(bits));
        for (auto l : q.levels) EXPECT_LT(l, 1u << bits);
        const double e = quant_error(t, q).total;
        EXPECT_LT(e, prev);
        prev = e;
    }
}

TEST(QuantError, ExactDecodeIsZero) {
    const Tensor t = Tensor::weight(2, 1, 1, 1, {0.296875f, -0.125f});
    EXPECT_EQ(quant_error(t, quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::NLQ)).total, 0.0);
}

TEST(QuantError, SingleElementExample) {
    QuantizedTensor q;
    q.shape = {1, 1, 1, 1};
    q.roles = {Axis::I, Axis::H, Axis::W, Axis::O};
    q.codebook_id = "weight-nlq-n8";
    q.levels = {static_cast<std::uint8_t>(codebook("weight-nlq-n8").encode(38.0 / 128))};
    q.sf_exponents = {0};
    // Double 0.3 is not a float; build the error from the float actually stored.
    const Tensor t = Tensor::weight(1, 1, 1, 1, {0.3f});
    const double d = double(0.3f) - 0.296875;
    EXPECT_DOUBLE_EQ(quant_error(t, q).total, d * d);
    // float(0.3) moves the result by about 7.5e-11.
    EXPECT_NEAR(quant_error(t, q).total, 9.765625e-6, 1e-10);
}

TEST(QuantError, ScaleFactorWeighting) {
    // sf = 2: scaled error is divided by sf.
    const Tensor t = Tensor::weight(1, 1, 1, 1, {0.15f});
    const QuantizedTensor q = quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::NLQ);
    EXPECT_EQ(q.sf_exponents[0], 1);
    const double sw = 2.0 * double(0.15f);
    const double d = sw - oracle::weight_nlq8(sw);
    EXPECT_DOUBLE_EQ(quant_error(t, q).total, d * d / 2.0);
}

TEST(QuantError, MismatchedGroupsRejected) {
    const Tensor t = Tensor::weight(1, 1, 1, 2, {0.1f, 0.2f});
    QuantizedTensor q = quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::NLQ);
    q.sf_exponents.pop_back();
    EXPECT_THROW(quant_error(t, q), ContractError);
    const Tensor other = Tensor::weight(2, 1, 1, 1, {0.1f, 0.2f});
    EXPECT_THROW(quant_error(other, quantize_weights(t, GroupScheme::ChannelWise, QuantMethod::NLQ)), ContractError);
}
