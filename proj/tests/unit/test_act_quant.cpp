#include <gtest/gtest.h>

#include <cmath>

#include "fixq/act_quant.hpp"
#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"
#include "support.hpp"

using namespace fixq;

namespace {

Tensor one_channel(std::vector<float> v) {
    const auto n = static_cast<std::int64_t>(v.size());
    return Tensor::activation(1, n, 1, std::move(v));
}

}  // namespace

TEST(Calibrate, Examples) {
    const std::vector<Tensor> a{one_channel({0.1f, -0.3f})};
    const CalibrationProfile p = calibrate(a, ActivationKind::None);
    EXPECT_EQ(p.alpha, 0.5);
    EXPECT_EQ(p.sf_exponents[0], 0);
    EXPECT_DOUBLE_EQ(p.max_scaled[0], double(0.3f));
    EXPECT_EQ(p.range_sel[0], 0);

    const std::vector<Tensor> b{one_channel({0.49f})};
    EXPECT_EQ(calibrate(b, ActivationKind::None).range_sel[0], 3);
}

TEST(Calibrate, MaxOverSamplesAndChannels) {
    const std::vector<Tensor> s{Tensor::activation(1, 1, 3, {0.2f, 3.0f, 0.0f}),
                                Tensor::activation(1, 1, 3, {-0.7f, 1.0f, 0.0f})};
    const CalibrationProfile p = calibrate(s, ActivationKind::LeakyReLU, true, "l1");
    EXPECT_EQ(p.name, "l1");
    EXPECT_EQ(p.max_abs, (std::vector<double>{double(0.7f), 3.0, 0.0}));
    EXPECT_EQ(p.sf_exponents, (std::vector<int>{-1, -3, 0}));
    EXPECT_EQ(p.range_sel[2], 3);
    EXPECT_EQ(p.codebook_id(), "act-mux");
}

TEST(Calibrate, ReluIsOneSidedWithUnitAlpha) {
    const std::vector<Tensor> s{one_channel({0.0f, 0.6f})};
    const CalibrationProfile p = calibrate(s, ActivationKind::ReLU);
    EXPECT_EQ(p.alpha, 1.0);
    EXPECT_EQ(p.sf_exponents[0], 0);
    EXPECT_EQ(p.range_sel[0], 0);
    EXPECT_EQ(p.codebook_id(), "act-mux-relu");
    EXPECT_EQ(p.channel_codebook(0).id(), "act-mux0-relu");
    EXPECT_FALSE(p.channel_codebook(0).is_signed());
    EXPECT_EQ(calibrate(s, ActivationKind::ReLU, false).codebook_id(), "act-uniform-relu");
}

TEST(Calibrate, Errors) {
    EXPECT_THROW(calibrate(std::vector<Tensor>{}, ActivationKind::None), ContractError);
    const std::vector<Tensor> mixed{Tensor::activation(1, 1, 2, {0, 0}), Tensor::activation(1, 1, 3, {0, 0, 0})};
    EXPECT_THROW(calibrate(mixed, ActivationKind::None), ContractError);
    const std::vector<Tensor> w{Tensor::weight(1, 1, 1, 1, {0.1f})};
    EXPECT_THROW(calibrate(w, ActivationKind::None), ContractError);
    EXPECT_THROW(activation_from_string("gelu"), ContractError);
}

TEST(RangeSelect, Intervals) {
    EXPECT_EQ(range_select(0.25, 0.5), 0);
    EXPECT_EQ(range_select(0.3124, 0.5), 0);
    EXPECT_EQ(range_select(0.3125, 0.5), 1);
    EXPECT_EQ(range_select(0.375, 0.5), 2);
    EXPECT_EQ(range_select(0.4375, 0.5), 3);
    EXPECT_EQ(range_select(0.0, 0.5), 3);
    EXPECT_EQ(range_select(0.8, 1.0), 2);
}

TEST(MuxCodebook, BudgetsPerSelection) {
    const int expected[4][3] = {{96, 32, 0}, {64, 64, 0}, {16, 32, 80}, {128, 0, 0}};
    for (bool sign : {true, false}) {
        const double alpha = sign ? 0.5 : 1.0;
        for (int sel = 0; sel < 4; ++sel) {
            const Codebook cb = mux_codebook(sel, 8, alpha, sign);
            const CodebookReport r = validate_codebook(cb);
            EXPECT_TRUE(r.ok) << cb.id();
            EXPECT_EQ(r.levels, 256);
            for (std::size_t k = 0; k < cb.pieces().size(); ++k) {
                const Piece& p = cb.pieces()[k];
                const double per_piece = (p.upper - p.lower) * std::ldexp(1.0, p.precision) * (sign ? 1 : 0.5);
                EXPECT_EQ(per_piece, expected[sel][k]) << cb.id() << " piece " << k;
            }
        }
    }
    EXPECT_EQ(mux_codebook(2, 8, 0.5, true).id(), "act-mux2");
    EXPECT_EQ(mux_codebook(1, 6, 0.5, true).id(), "act-mux1-n6");
    EXPECT_THROW(mux_codebook(4, 8, 0.5, true), ContractError);
}

TEST(MuxCodebook, TopCoversTheSelectedInterval) {
    for (int sel = 0; sel < 3; ++sel) {
        const Codebook cb = mux_codebook(sel, 8, 0.5, true);
        const double upper = 0.5 * (0.625 + 0.125 * sel);
        EXPECT_EQ(cb.top(), upper);
        EXPECT_FALSE(cb.out_of_range(std::nextafter(upper, 0.0)));
    }
}

TEST(MuxCodebook, FinerThanUniformOnItsInterval) {
    Rng rng(6);
    const Codebook uni = Codebook::uniform("u", 8, 0.5, true);
    for (int sel = 0; sel < 3; ++sel) {
        const Codebook cb = mux_codebook(sel, 8, 0.5, true);
        const double top = cb.top();
        double e_mux = 0.0, e_uni = 0.0;
        for (int i = 0; i < 100000; ++i) {
            const double x = rng.uniform(-top, top);
            e_mux += std::pow(x - cb.quantize(x), 2);
            e_uni += std::pow(x - uni.quantize(x), 2);
        }
        EXPECT_LT(e_mux, e_uni) << "sel " << sel;
    }
}

TEST(QuantizeActivations, InRangeHasNoClipsAndHalfStepError) {
    Rng rng(10);
    std::vector<Tensor> cal;
    for (int s = 0; s < 4; ++s) cal.push_back(testing_support::random_activation(rng, 8, 8, 16, 0.7));
    for (auto kind : {ActivationKind::None, ActivationKind::LeakyReLU}) {
        CalibrationProfile p = calibrate(cal, kind);
        for (const Tensor& t : cal) {
            const QuantizedTensor q = quantize_activations(t, p);
            EXPECT_EQ(q.mux, p.range_sel);
            const auto d = dequantize_values(q);
            for (std::size_t i = 0; i < t.size(); ++i) {
                const std::size_t c = i % 16;
                const Codebook& cb = p.channel_codebook(c);
                const double sw = std::ldexp(double(t[i]), p.sf_exponents[c]);
                double half = 0.0;
                for (const Piece& pc : cb.pieces())
                    if (std::fabs(sw) >= pc.lower && std::fabs(sw) < pc.upper)
                        half = sw > cb.max_value() ? pc.step() : pc.step() / 2;
                ASSERT_LE(std::fabs(sw - std::ldexp(d[i], p.sf_exponents[c])), half);
            }
        }
        for (auto n : p.clip_count) EXPECT_EQ(n, 0u);
    }
}

TEST(QuantizeActivations, OutOfRangeSaturatesAndCounts) {
    const std::vector<Tensor> cal{one_channel({0.49f})};
    CalibrationProfile p = calibrate(cal, ActivationKind::None);
    const QuantizedTensor q = quantize_activations(one_channel({2.0f, -2.0f, 0.1f}), p);
    const auto d = dequantize_values(q);
    EXPECT_EQ(d[0], 0.5 - 1.0 / 256);
    EXPECT_EQ(d[1], -0.5);
    EXPECT_EQ(p.clip_count[0], 2u);
}

TEST(QuantizeActivations, ZeroTensorGivesZeros) {
    const std::vector<Tensor> cal{Tensor::activation(2, 2, 2, std::vector<float>(8, 0.0f))};
    for (auto kind : {ActivationKind::ReLU, ActivationKind::None}) {
        CalibrationProfile p = calibrate(cal, kind);
        const QuantizedTensor q = quantize_activations(cal[0], p);
        for (double v : dequantize_values(q)) EXPECT_EQ(v, 0.0);
    }
}

TEST(QuantizeActivations, ChannelMismatch) {
    CalibrationProfile p = calibrate(std::vector<Tensor>{one_channel({0.1f})}, ActivationKind::None);
    EXPECT_THROW(quantize_activations(Tensor::activation(1, 1, 2, {0, 0}), p), ContractError);
}

TEST(IntervalStats, AllSaturating) {
    const std::vector<Tensor> s{Tensor::activation(1, 1, 3, {0.49f, -0.95f, 1.9f})};
    const IntervalStats st = interval_stats(s, ActivationKind::None, "x");
    EXPECT_EQ(st.count, 3u);
    EXPECT_EQ(st.probability[3], 1.0);
    EXPECT_NE(format_interval_table(std::vector<IntervalStats>{st}).find("100.00%"), std::string::npos);
}

TEST(IntervalStats, UniformMaximaSplitEvenly) {
    Rng rng(31);
    std::vector<Tensor> s;
    for (int k = 0; k < 100; ++k) {
        std::vector<float> v(100);
        for (auto& x : v) x = static_cast<float>(rng.uniform(0.25, 0.5));
        s.push_back(Tensor::activation(1, 1, 100, v));
    }
    const IntervalStats st = interval_stats(s, ActivationKind::None);
    ASSERT_EQ(st.count, 10000u);
    for (double p : st.probability) EXPECT_NEAR(p, 0.25, 0.02);
}

TEST(ProfileRecord, RoundTrip) {
    Rng rng(1);
    const std::vector<Tensor> s{testing_support::random_activation(rng, 4, 4, 5, 1.0, true)};
    CalibrationProfile p = calibrate(s, ActivationKind::ReLU, true, "enc1");
    const CalibrationProfile back = profile_from_record(to_record(p));
    EXPECT_EQ(back.name, p.name);
    EXPECT_EQ(back.kind, p.kind);
    EXPECT_EQ(back.sf_exponents, p.sf_exponents);
    EXPECT_EQ(back.range_sel, p.range_sel);
    EXPECT_EQ(back.max_abs, p.max_abs);
    EXPECT_EQ(back.multiplexed, p.multiplexed);
}
