#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "fixq/errors.hpp"
#include "fixq/tensor.hpp"

using namespace fixq;

TEST(Group, ChannelWiseWeightGivesOneGroupPerOutputChannel) {
    const Tensor t = Tensor::weight(3, 5, 5, 128);
    const auto g = group(t, GroupScheme::ChannelWise);
    ASSERT_EQ(g.size(), 128u);
    for (const auto& v : g) EXPECT_EQ(v.count, 75u);
}

TEST(Group, LayerWiseWeightIsOneGroup) {
    const auto g = group(Tensor::weight(3, 5, 5, 128), GroupScheme::LayerWise);
    ASSERT_EQ(g.size(), 1u);
    EXPECT_EQ(g[0].count, 9600u);
}

TEST(Group, ChannelWiseActivation) {
    const auto g = group(Tensor::activation(48, 32, 128), GroupScheme::ChannelWise);
    ASSERT_EQ(g.size(), 128u);
    for (const auto& v : g) EXPECT_EQ(v.count, 1536u);
}

TEST(Group, ViewsAreDisjointAndCover) {
    for (auto scheme : {GroupScheme::ChannelWise, GroupScheme::LayerWise}) {
        const Tensor t = Tensor::weight(2, 3, 3, 7);
        std::vector<int> hits(t.size(), 0);
        for (const auto& v : group(t, scheme))
            for (std::size_t k = 0; k < v.count; ++k) ++hits[v.index(k)];
        EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
}

TEST(Group, ViewsCoverTheElementMultiset) {
    std::vector<float> data(2 * 3 * 4);
    std::iota(data.begin(), data.end(), 0.0f);
    const Tensor t = Tensor::activation(2, 3, 4, data);
    std::vector<float> seen;
    for (const auto& v : group(t, GroupScheme::ChannelWise)) {
        const auto g = v.gather(t.data());
        seen.insert(seen.end(), g.begin(), g.end());
    }
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(seen, data);
}

TEST(Group, GroupOfMatchesViews) {
    const Tensor t = Tensor::weight(2, 2, 2, 5);
    const auto views = group(t, GroupScheme::ChannelWise);
    for (std::size_t g = 0; g < views.size(); ++g)
        for (std::size_t k = 0; k < views[g].count; ++k)
            EXPECT_EQ(group_of(views[g].index(k), 5, GroupScheme::ChannelWise), g);
    EXPECT_EQ(group_of(17, 5, GroupScheme::LayerWise), 0u);
}

TEST(Group, UnsupportedRolesAreRejected) {
    const std::vector<std::int64_t> shape{2, 2};
    const std::vector<Axis> roles{Axis::H, Axis::W};
    EXPECT_THROW(group(shape, roles, GroupScheme::ChannelWise), ContractError);
}

TEST(Tensor, ShapeMismatchThrows) {
    EXPECT_THROW(Tensor({2, 3, 4}, {Axis::OH, Axis::OW, Axis::O}, std::vector<float>(5)), ContractError);
    EXPECT_THROW(Tensor({0, 3, 4}, {Axis::OH, Axis::OW, Axis::O}, {}), ContractError);
    EXPECT_THROW(Tensor({2, 3, 4}, {Axis::I, Axis::OW, Axis::O}, std::vector<float>(24)), ContractError);
}

TEST(Tensor, FactoriesSetLayout) {
    EXPECT_EQ(Tensor::weight(1, 1, 1, 1).layout(), Layout::Weight);
    EXPECT_EQ(Tensor::activation(1, 1, 1).layout(), Layout::Activation);
    EXPECT_EQ(Tensor::weight(2, 3, 3, 4).channels(), 4);
}

TEST(Strings, RoundTrip) {
    for (Axis a : {Axis::I, Axis::H, Axis::W, Axis::O, Axis::OH, Axis::OW}) EXPECT_EQ(axis_from_string(to_string(a)), a);
    EXPECT_EQ(scheme_from_string("cw"), GroupScheme::ChannelWise);
    EXPECT_EQ(scheme_from_string("lw"), GroupScheme::LayerWise);
}
