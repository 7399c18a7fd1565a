#include <map>
#include <set>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "shapeshot/episodes.hpp"
#include "shapeshot/errors.hpp"

using namespace shapeshot;
using shapeshot::testing::random_dataset;

namespace {

// Stylized variants are copies of the original with every pixel set to the
// variant index, so tests can tell them apart.
ClassDataset with_fake_variants(ClassDataset ds, std::size_t n_variants) {
    for (auto& c : ds.classes) {
        c.stylized.assign(c.images.size(), {});
        for (std::size_t i = 0; i < c.images.size(); ++i)
            for (std::size_t v = 0; v < n_variants; ++v) {
                Image img = c.images[i];
                std::fill(img.pixels.begin(), img.pixels.end(), static_cast<double>(v) / 16.0);
                c.stylized[i].push_back(std::move(img));
            }
    }
    return ds;
}

}  // namespace

TEST(Episode, SizesFollowTheShape) {
    const auto ds = random_dataset(8, 20, 4, 1);
    Rng rng(1);
    const auto ep = sample_episode(ds, {5, 5, 15}, rng);
    EXPECT_EQ(ep.support.size(), 25u);
    EXPECT_EQ(ep.query.size(), 75u);
    EXPECT_EQ(ep.class_ids.size(), 5u);
    EXPECT_EQ(ep.source, EpisodeSource::unstylized);
}

TEST(Episode, StructuralInvariants) {
    const auto ds = random_dataset(7, 12, 4, 2);
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const EpisodeShape shape{2 + static_cast<std::size_t>(trial % 5), 1 + static_cast<std::size_t>(trial % 4),
                                 static_cast<std::size_t>(trial % 6)};
        const auto ep = sample_episode(ds, shape, rng);
        ASSERT_EQ(std::set<std::uint32_t>(ep.class_ids.begin(), ep.class_ids.end()).size(), shape.n_way);
        std::set<std::pair<std::uint32_t, std::uint32_t>> used;
        std::vector<std::size_t> support_count(shape.n_way), query_count(shape.n_way);
        for (const auto* part : {&ep.support, &ep.query})
            for (const auto& item : *part) {
                ASSERT_LT(item.label, shape.n_way);
                ASSERT_EQ(item.ref.class_id, ep.class_ids[item.label]);
                ASSERT_TRUE(used.insert({item.ref.class_id, item.ref.image_index}).second) << "image reused";
                const auto& cls = *std::find_if(ds.classes.begin(), ds.classes.end(),
                                                [&](const ClassData& c) { return c.class_id == item.ref.class_id; });
                ASSERT_EQ(item.image, &cls.images[item.ref.image_index]);
                (part == &ep.support ? support_count : query_count)[item.label]++;
            }
        for (std::size_t k = 0; k < shape.n_way; ++k) {
            EXPECT_EQ(support_count[k], shape.k_shot);
            EXPECT_EQ(query_count[k], shape.q_queries);
        }
        const auto by_class = ep.support_by_class();
        for (const auto& imgs : by_class) EXPECT_EQ(imgs.size(), shape.k_shot);
    }
}

TEST(Episode, ClassesAreDrawnUniformly) {
    const auto ds = random_dataset(20, 6, 2, 3);
    Rng rng(3);
    std::map<std::uint32_t, std::size_t> hits;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        for (auto id : sample_episode(ds, {5, 1, 1}, rng).class_ids) hits[id]++;
    ASSERT_EQ(hits.size(), 20u);
    for (const auto& [id, count] : hits) EXPECT_NEAR(static_cast<double>(count) / n, 0.25, 0.015) << "class " << id;
}

TEST(Episode, Deterministic) {
    const auto ds = random_dataset(6, 10, 2, 4);
    Rng a(9), b(9);
    for (int i = 0; i < 10; ++i) {
        const auto x = sample_episode(ds, {3, 2, 2}, a);
        const auto y = sample_episode(ds, {3, 2, 2}, b);
        ASSERT_EQ(x.class_ids, y.class_ids);
        for (std::size_t j = 0; j < x.query.size(); ++j) ASSERT_EQ(x.query[j].ref, y.query[j].ref);
    }
}

TEST(Episode, TooFewClassesOrImages) {
    const auto ds = random_dataset(4, 10, 2, 5);
    Rng rng(5);
    try {
        sample_episode(ds, {5, 1, 1}, rng);
        FAIL();
    } catch (const SamplingError& e) {
        EXPECT_NE(std::string(e.what()).find("short by 1"), std::string::npos);
    }
    EXPECT_THROW(sample_episode(ds, {2, 5, 6}, rng), SamplingError);
    EXPECT_NO_THROW(sample_episode(ds, {2, 5, 5}, rng));
}

TEST(Mixture, DegenerateProbabilities) {
    const auto plain = random_dataset(6, 8, 2, 6, 0, Split::pretrain);
    const auto styl = with_fake_variants(plain, 3);
    Rng rng(6);
    for (int i = 0; i < 50; ++i) {
        EXPECT_EQ(sample_pretrain_episode(plain, nullptr, {0.0}, {3, 1, 1}, rng).source, EpisodeSource::unstylized);
        const auto ep = sample_pretrain_episode(plain, &styl, {1.0}, {3, 1, 1}, rng);
        ASSERT_EQ(ep.source, EpisodeSource::stylized);
        for (const auto& item : ep.query) {
            ASSERT_GE(item.ref.variant, 0);
            const auto& cls = *std::find_if(styl.classes.begin(), styl.classes.end(),
                                            [&](const ClassData& c) { return c.class_id == item.ref.class_id; });
            ASSERT_EQ(item.image, &cls.stylized[item.ref.image_index][item.ref.variant]);
        }
    }
}

TEST(Mixture, ZeroProbabilityMatchesPlainSampling) {
    const auto plain = random_dataset(6, 8, 2, 7, 0, Split::pretrain);
    Rng a(10), b(10);
    for (int i = 0; i < 20; ++i) {
        const auto x = sample_pretrain_episode(plain, nullptr, {0.0}, {3, 2, 1}, a);
        const auto y = sample_episode(plain, {3, 2, 1}, b);
        ASSERT_EQ(x.class_ids, y.class_ids);
        for (std::size_t j = 0; j < x.support.size(); ++j) ASSERT_EQ(x.support[j].ref, y.support[j].ref);
    }
}

TEST(Mixture, StylizedFractionMatchesP) {
    const auto plain = random_dataset(5, 4, 2, 8, 0, Split::pretrain);
    const auto styl = with_fake_variants(plain, 2);
    Rng rng(8);
    const int n = 10000;
    int stylized = 0;
    for (int i = 0; i < n; ++i)
        stylized += sample_pretrain_episode(plain, &styl, {0.3}, {2, 1, 1}, rng).source == EpisodeSource::stylized;
    EXPECT_NEAR(static_cast<double>(stylized) / n, 0.3, 0.02);
}

TEST(Mixture, Errors) {
    const auto plain = random_dataset(5, 4, 2, 9, 0, Split::pretrain);
    Rng rng(1);
    EXPECT_THROW(sample_pretrain_episode(plain, nullptr, {1.5}, {2, 1, 1}, rng), ConfigError);
    EXPECT_THROW(sample_pretrain_episode(plain, nullptr, {-0.1}, {2, 1, 1}, rng), ConfigError);
    EXPECT_THROW(sample_pretrain_episode(plain, nullptr, {0.5}, {2, 1, 1}, rng), ConfigError);
    auto other = with_fake_variants(random_dataset(5, 4, 2, 9, 100, Split::pretrain), 1);
    EXPECT_THROW(sample_pretrain_episode(plain, &other, {0.5}, {2, 1, 1}, rng), ContractError);
}
