#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "hccstage/error.hpp"
#include "hccstage/gbdt.hpp"
#include "oracles.hpp"

using namespace hccstage;
using namespace hccstage::gbdt;

namespace {

struct Data {
    DenseMatrix x;
    std::vector<int> y;
};

Data make_data(std::uint64_t seed, std::size_t n, std::size_t f, int classes) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    Data d{DenseMatrix(n, f), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        d.y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
        for (std::size_t j = 0; j < f; ++j) d.x(i, j) = z(rng) + (j == 0 ? 0.8 * d.y[i] : 0.0);
    }
    return d;
}

Data separable_1d() {
    Data d{DenseMatrix(20, 1), std::vector<int>(20)};
    for (std::size_t i = 0; i < 20; ++i) {
        d.x(i, 0) = static_cast<double>(i) - 9.5;
        d.y[i] = d.x(i, 0) < 0 ? 0 : 1;
    }
    return d;
}

}  // namespace

TEST(Softmax, Examples) {
    for (double p : softmax(std::vector<double>{0, 0, 0})) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
    const auto big = softmax(std::vector<double>{1000, 0, 0});
    EXPECT_NEAR(big[0], 1.0, 1e-12);
    EXPECT_TRUE(std::isfinite(big[1]));
    const auto l = softmax(std::vector<double>{std::log(1.0), std::log(2.0), std::log(3.0)});
    EXPECT_NEAR(l[0], 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(l[1], 2.0 / 6.0, 1e-15);
    EXPECT_NEAR(l[2], 3.0 / 6.0, 1e-15);
}

TEST(GradHess, Examples) {
    const auto gh = grad_hess(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0);
    EXPECT_NEAR(gh[0].g, -2.0 / 3.0, 1e-15);
    EXPECT_NEAR(gh[1].g, 1.0 / 3.0, 1e-15);
    for (const auto& v : gh) EXPECT_NEAR(v.h, 2.0 / 9.0, 1e-15);

    const auto perfect = grad_hess(std::vector<double>{1.0, 0.0, 0.0}, 0);
    for (const auto& v : perfect) {
        EXPECT_EQ(v.g, 0.0);
        EXPECT_EQ(v.h, kMinHessian);
    }
}

TEST(GradHess, GradientsSumToZero) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z(0.0, 3.0);
    for (int t = 0; t < 100; ++t) {
        const auto p = softmax(std::vector<double>{z(rng), z(rng), z(rng), z(rng)});
        const auto gh = grad_hess(p, t % 4);
        double s = 0.0;
        for (const auto& v : gh) s += v.g;
        EXPECT_NEAR(s, 0.0, 1e-15);
    }
}

TEST(BestSplit, HandExample) {
    const std::vector<double> v{0, 1}, g{-1, 1}, h{1, 1};
    const auto s = best_split(v, g, h, 1.0, 0.0, 1.0);
    ASSERT_TRUE(s.has_value());
    EXPECT_DOUBLE_EQ(s->threshold, 0.5);
    EXPECT_DOUBLE_EQ(s->gain, 0.5);
}

TEST(BestSplit, IdenticalValuesGiveNone) {
    const std::vector<double> v{2, 2, 2}, g{-1, 1, 0.5}, h{1, 1, 1};
    EXPECT_FALSE(best_split(v, g, h, 1.0, 0.0, 0.0).has_value());
}

TEST(BestSplit, GammaAndMinChildWeightPrune) {
    const std::vector<double> v{0, 1}, g{-1, 1}, h{1, 1};
    EXPECT_FALSE(best_split(v, g, h, 1.0, 0.5, 1.0).has_value());
    EXPECT_FALSE(best_split(v, g, h, 1.0, 0.0, 1.5).has_value());
}

TEST(BestSplit, MatchesExhaustiveOracle) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> len(2, 60), val(0, 12), gq(-8, 8), hq(1, 8);
    for (int t = 0; t < 300; ++t) {
        const int n = len(rng);
        std::vector<double> v(static_cast<std::size_t>(n)), g(v.size()), h(v.size());
        for (auto& x : v) x = val(rng);
        std::sort(v.begin(), v.end());
        // Quarter steps keep every partial sum exact.
        for (std::size_t i = 0; i < v.size(); ++i) {
            g[i] = gq(rng) / 4.0;
            h[i] = hq(rng) / 4.0;
        }
        const double mcw = (t % 3) * 0.5;
        const auto got = best_split(v, g, h, 1.0, 0.0, mcw);
        const auto want = oracle::exhaustive_split(v, g, h, 1.0, 0.0, mcw);
        ASSERT_EQ(got.has_value(), want.found) << t;
        if (got) {
            ASSERT_EQ(got->threshold, want.threshold) << t;
            ASSERT_NEAR(got->gain, want.gain, 1e-12) << t;
        }
    }
}

TEST(Train, SeparableDepthOne) {
    const auto d = separable_1d();
    Params p;
    p.max_depth = 1;
    p.rounds = 10;
    const auto r = train_booster(d.x, d.y, p);
    EXPECT_EQ(predict_class(r.booster, d.x), d.y);
    EXPECT_DOUBLE_EQ(r.booster.rounds[0][0].nodes[0].threshold, -0.0);
}

TEST(Train, ZeroRoundsGivesPrior) {
    Data d{DenseMatrix(4, 1), {0, 0, 0, 1}};
    Params p;
    p.rounds = 0;
    const auto r = train_booster(d.x, d.y, p);
    const auto proba = predict_proba(r.booster, d.x);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(proba(i, 0), 0.75, 1e-12);
        EXPECT_NEAR(proba(i, 1), 0.25, 1e-12);
    }
}

TEST(Train, LossNonIncreasing) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto d = make_data(seed, 90, 4, 3);
        Params p;
        p.rounds = 25;
        const auto r = train_booster(d.x, d.y, p);
        ASSERT_EQ(r.log.train_loss.size(), 25u);
        for (std::size_t i = 1; i < r.log.train_loss.size(); ++i)
            EXPECT_LE(r.log.train_loss[i], r.log.train_loss[i - 1] + 1e-12) << seed << " round " << i;
    }
}

TEST(Train, ValidationLossLogged) {
    const auto d = make_data(1, 60, 3, 3);
    const auto v = make_data(2, 30, 3, 3);
    Params p;
    p.rounds = 7;
    const ValidationSet vs{&v.x, v.y};
    const auto r = train_booster(d.x, d.y, p, &vs);
    EXPECT_EQ(r.log.valid_loss.size(), 7u);
    EXPECT_NEAR(r.log.valid_loss.back(), cross_entropy(predict_proba(r.booster, v.x), v.y), 1e-12);
}

TEST(Train, Deterministic) {
    const auto d = make_data(3, 80, 5, 3);
    EXPECT_EQ(to_json(train_booster(d.x, d.y, {}).booster), to_json(train_booster(d.x, d.y, {}).booster));
}

TEST(Train, Errors) {
    DenseMatrix x(4, 1);
    try {
        train_booster(x, std::vector<int>{1, 1, 1, 1}, {}, nullptr, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Training);
    }
    Params bad;
    bad.eta = 0.0;
    EXPECT_THROW(train_booster(x, std::vector<int>{0, 1, 0, 1}, bad), Error);
    EXPECT_THROW(train_booster(x, std::vector<int>{0, 1, 0}, {}), Error);
}

TEST(Predict, RowsOnSimplexAndBatchEqualsSingle) {
    const auto d = make_data(5, 60, 4, 3);
    const auto b = train_booster(d.x, d.y, {}).booster;
    const auto batch = predict_proba(b, d.x);
    for (std::size_t i = 0; i < batch.rows(); ++i) {
        double s = 0.0;
        for (double p : batch.row(i)) {
            EXPECT_GE(p, 0.0);
            s += p;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
        const std::size_t rows[] = {i};
        const auto one = predict_proba(b, d.x.select_rows(rows));
        for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(one(0, k), batch(i, k));
    }
}

TEST(Predict, OverfitModelRecoversTrainingLabels) {
    const auto d = make_data(6, 30, 3, 3);
    Params p;
    p.rounds = 200;
    p.min_child_weight = 0.0;
    p.lambda = 0.0;
    const auto b = train_booster(d.x, d.y, p).booster;
    EXPECT_EQ(predict_class(b, d.x), d.y);
}

TEST(Predict, DimensionMismatch) {
    const auto d = make_data(7, 30, 3, 2);
    const auto b = train_booster(d.x, d.y, {}).booster;
    try {
        predict_proba(b, DenseMatrix(2, 4));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Input);
    }
}

TEST(Importance, SingleSplitAccumulates) {
    Booster b;
    b.num_classes = 1;
    b.num_features = 5;
    b.base_score = {0.0};
    Tree t;
    t.nodes = {{3, 0.5, 1, 2, 0.5, 0.0}, {}, {}};
    b.rounds = {{t}};
    EXPECT_EQ(importance_gain(b), (std::vector<double>{0, 0, 0, 0.5, 0}));
}

TEST(Importance, InformativeFeatureDominatesAndSumsToGains) {
    const auto d = make_data(8, 150, 6, 3);
    const auto b = train_booster(d.x, d.y, {}).booster;
    const auto imp = importance_gain(b);
    EXPECT_EQ(std::max_element(imp.begin(), imp.end()) - imp.begin(), 0);
    double gains = 0.0;
    for (const auto& round : b.rounds)
        for (const auto& tree : round)
            for (const auto& n : tree.nodes)
                if (!n.is_leaf()) {
                    EXPECT_GE(n.gain, 0.0);
                    gains += n.gain;
                }
    EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), gains, 1e-9 * gains);
}

TEST(Json, RoundTripPredictsIdentically) {
    const auto d = make_data(9, 60, 4, 3);
    auto b = train_booster(d.x, d.y, {}).booster;
    b.feature_names = {"a", "b", "c", "d"};
    const auto back = booster_from_json(to_json(b));
    EXPECT_EQ(back.num_classes, 3);
    EXPECT_EQ(back.feature_names, b.feature_names);
    EXPECT_EQ(predict_proba(back, d.x), predict_proba(b, d.x));
    EXPECT_EQ(to_json(back), to_json(b));
}

TEST(Json, MalformedIsParseError) {
    try {
        booster_from_json("{not json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
}
