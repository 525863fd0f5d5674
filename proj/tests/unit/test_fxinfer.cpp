#include <gtest/gtest.h>

#include <cmath>

#include "fixq/errors.hpp"
#include "fixq/fxinfer.hpp"
#include "fixq/weight_quant.hpp"
#include "oracle/layer_check.hpp"
#include "support.hpp"

using namespace fixq;
using testing_support::random_activation;
using testing_support::random_weight;
using testing_support::self_quantized;

namespace {

struct Case {
    LayerSpec spec;
    std::int64_t H, W, C, K, O;
};

void expect_matches_oracle(const Case& c, Rng& rng, ActivationKind in_kind) {
    const Tensor x = random_activation(rng, c.H, c.W, c.C, 0.8, in_kind == ActivationKind::ReLU);
    const Tensor w = random_weight(rng, c.C, c.K, c.O, 0.1);
    const QuantizedTensor xq = self_quantized(x, in_kind);
    const QuantizedTensor wq = quantize_weights(w, GroupScheme::ChannelWise, QuantMethod::NLQ);
    std::vector<double> bias(static_cast<std::size_t>(c.O));
    for (auto& b : bias) b = rng.normal(0.0, 0.05);

    const auto mismatch = oracle::check_layer(xq, wq, c.spec, bias);
    EXPECT_FALSE(mismatch.has_value()) << *mismatch;
}

}  // namespace

TEST(Forward, IdentityKernelReproducesInput) {
    Rng rng(1);
    const Tensor x = random_activation(rng, 5, 4, 3, 1.0);
    const QuantizedTensor xq = self_quantized(x, ActivationKind::None);
    std::vector<float> wd(9, 0.0f);
    for (int c = 0; c < 3; ++c) wd[static_cast<std::size_t>(c * 3 + c)] = 1.0f;
    const QuantizedTensor wq = quantize_weights(Tensor::weight(3, 1, 1, 3, wd), GroupScheme::ChannelWise, QuantMethod::NLQ);
    const FixedOutput out = forward_quantized(xq, wq, LayerSpec{});
    EXPECT_EQ(out.values(), dequantize_values(xq));
}

TEST(Forward, MatchesRationalOracle) {
    Rng rng(77);
    const std::vector<Case> cases{
        {{LayerKind::Conv, 1, 1, -1, ActivationKind::None}, 6, 5, 3, 3, 4},
        {{LayerKind::Conv, 2, 2, -1, ActivationKind::ReLU}, 9, 8, 3, 5, 4},
        {{LayerKind::Conv, 2, 2, -1, ActivationKind::LeakyReLU}, 7, 7, 2, 5, 3},
        {{LayerKind::ConvTranspose, 2, 2, -1, ActivationKind::ReLU}, 4, 3, 3, 5, 2},
        {{LayerKind::ConvTranspose, 2, 1, 0, ActivationKind::None}, 3, 4, 2, 3, 3},
        {{LayerKind::ConvTranspose, 1, 0, -1, ActivationKind::LeakyReLU}, 3, 3, 2, 3, 2},
    };
    for (const Case& c : cases)
        for (auto kind : {ActivationKind::ReLU, ActivationKind::None}) expect_matches_oracle(c, rng, kind);
}

TEST(Forward, DeviationFromFloatIsBoundedByQuantizationSteps) {
    Rng rng(3);
    const Tensor x = random_activation(rng, 8, 8, 4, 0.5);
    const Tensor w = random_weight(rng, 4, 3, 5, 0.1);
    const QuantizedTensor xq = self_quantized(x, ActivationKind::None);
    const QuantizedTensor wq = quantize_weights(w, GroupScheme::ChannelWise, QuantMethod::NLQ);
    const LayerSpec spec{LayerKind::Conv, 1, 1, -1, ActivationKind::None};
    const FixedOutput out = forward_quantized(xq, wq, spec);

    std::vector<double> xf(x.data().begin(), x.data().end()), wf(w.data().begin(), w.data().end());
    const auto xd = dequantize_values(xq), wd = dequantize_values(wq);
    std::vector<double> dx(xf.size()), dw(wf.size()), ax(xf.size()), aw(wd.size());
    for (std::size_t i = 0; i < xf.size(); ++i) dx[i] = std::fabs(xf[i] - xd[i]), ax[i] = std::fabs(xf[i]);
    for (std::size_t i = 0; i < wf.size(); ++i) dw[i] = std::fabs(wf[i] - wd[i]), aw[i] = std::fabs(wd[i]);
    const oracle::Dims d{8, 8, 4, 3, 3, 5, 1, 1, 0};
    std::int64_t OH, OW;
    const auto exact = oracle::conv(oracle::exact(xf), oracle::exact(wf), d, OH, OW);
    // |xw - x'w'| <= |x||w - w'| + |x - x'||w'|
    const auto b1 = oracle::conv(oracle::exact(ax), oracle::exact(dw), d, OH, OW);
    const auto b2 = oracle::conv(oracle::exact(dx), oracle::exact(aw), d, OH, OW);
    for (std::size_t i = 0; i < exact.size(); ++i) {
        const oracle::Rational err = oracle::exact(out.value(i)) - exact[i];
        ASSERT_LE(abs(err), b1[i] + b2[i]) << i;
    }
}

TEST(Forward, MisalignedChannelsOverflow) {
    const Tensor x = Tensor::activation(1, 1, 2, {1e-7f, 1e7f});
    const QuantizedTensor xq = self_quantized(x, ActivationKind::None);
    const QuantizedTensor wq =
        quantize_weights(Tensor::weight(2, 1, 1, 1, {0.5f, 0.5f}), GroupScheme::ChannelWise, QuantMethod::NLQ);
    EXPECT_THROW(forward_quantized(xq, wq, LayerSpec{}), NumericError);
}

TEST(Forward, AccumulatorOverflowNamesThePosition) {
    // 4096 channels of the largest mantissas overflow 2^31.
    const std::int64_t C = 4096;
    const Tensor w = Tensor::weight(C, 3, 3, 1, std::vector<float>(C * 9, 0.49f));
    const QuantizedTensor wq = quantize_weights(w, GroupScheme::ChannelWise, QuantMethod::NLQ);
    const Tensor big = Tensor::activation(3, 3, C, std::vector<float>(9 * C, 0.49f));
    const QuantizedTensor bq = self_quantized(big, ActivationKind::None);
    try {
        forward_quantized(bq, wq, LayerSpec{LayerKind::Conv, 1, 0, -1, ActivationKind::None});
        FAIL() << "expected overflow";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("(0, 0, 0)"), std::string::npos) << e.what();
    }
}

TEST(Forward, Contracts) {
    Rng rng(2);
    const QuantizedTensor xq = self_quantized(random_activation(rng, 4, 4, 2, 1.0), ActivationKind::None);
    const QuantizedTensor wq =
        quantize_weights(random_weight(rng, 3, 3, 2, 0.1), GroupScheme::ChannelWise, QuantMethod::NLQ);
    EXPECT_THROW(forward_quantized(xq, wq, LayerSpec{}), ContractError);
    const QuantizedTensor w2 =
        quantize_weights(random_weight(rng, 2, 3, 2, 0.1), GroupScheme::ChannelWise, QuantMethod::NLQ);
    EXPECT_THROW(forward_quantized(xq, w2, LayerSpec{}, std::vector<double>{0.1}), ContractError);
    EXPECT_THROW(forward_quantized(xq, w2, LayerSpec{LayerKind::Conv, 0}), ContractError);
    EXPECT_THROW((LayerSpec{LayerKind::ConvTranspose, 2, 0, 2}.validate()), ContractError);
    const QuantizedTensor lut =
        quantize_weights(random_weight(rng, 2, 3, 2, 0.1), GroupScheme::LayerWise, QuantMethod::Lloyd);
    EXPECT_THROW(forward_quantized(xq, lut, LayerSpec{}), ContractError);
    EXPECT_EQ(layer_kind_from_string("deconv"), LayerKind::ConvTranspose);
    EXPECT_THROW(layer_kind_from_string("pool"), ContractError);
}

TEST(Forward, ShapeLaw) {
    const LayerSpec enc{LayerKind::Conv, 2, 2, -1, ActivationKind::ReLU};
    std::int64_t h = 768, w = 512;
    for (int i = 0; i < 4; ++i) {
        h = output_extent(h, 5, enc);
        w = output_extent(w, 5, enc);
    }
    EXPECT_EQ(h, 48);
    EXPECT_EQ(w, 32);
    EXPECT_EQ(output_extent(37, 5, enc), 19);
    const LayerSpec dec{LayerKind::ConvTranspose, 2, 2, -1, ActivationKind::ReLU};
    EXPECT_EQ(output_extent(48, 5, dec), 96);
}
