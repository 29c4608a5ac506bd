#include <cmath>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "hccstage/error.hpp"
#include "hccstage/select.hpp"
#include "oracles.hpp"

using namespace hccstage;
using namespace hccstage::select;

namespace {

std::vector<std::string> names_for(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("f" + std::to_string(i));
    return out;
}

// Balanced two-class data; column 0 is N(+-mu, 1).
std::pair<DenseMatrix, std::vector<int>> gaussian_pair(std::size_t n, double mu, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    DenseMatrix x(n, 1);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(i % 2);
        x(i, 0) = (y[i] ? mu : -mu) + z(rng);
    }
    return {std::move(x), std::move(y)};
}

}  // namespace

TEST(Mi, ConstantFeatureScoresZero) {
    DenseMatrix x(40, 1, 5.0);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = static_cast<int>(i % 2);
    EXPECT_EQ(mi_scores(x, y, names_for(1))[0].score, 0.0);
}

TEST(Mi, LabelCopyApproachesLabelEntropy) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0.0, 1e-3);
    DenseMatrix x(2000, 1);
    std::vector<int> y(2000);
    for (std::size_t i = 0; i < 2000; ++i) {
        y[i] = static_cast<int>(i % 2);
        x(i, 0) = y[i] + z(rng);
    }
    EXPECT_NEAR(mi_scores(x, y, names_for(1))[0].score, std::log(2.0), 0.05);
}

TEST(Mi, GaussianMixtureMatchesIntegral) {
    const auto [x, y] = gaussian_pair(2000, 1.0, 21);
    const double truth = oracle::gaussian_mixture_mi(1.0);
    EXPECT_NEAR(mi_scores(x, y, names_for(1), 3, 4)[0].score, truth, 0.05);
}

TEST(Mi, ScoresAreNonNegative) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(0.0, 1.0);
    DenseMatrix x(60, 8);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        y[i] = static_cast<int>(i % 3);
        for (std::size_t j = 0; j < 8; ++j) x(i, j) = z(rng);
    }
    for (const auto& s : mi_scores(x, y, names_for(8))) EXPECT_GE(s.score, 0.0);
}

TEST(Mi, SmallClassIsEstimationError) {
    DenseMatrix x(10, 1);
    std::vector<int> y{0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
    for (std::size_t i = 0; i < 10; ++i) x(i, 0) = static_cast<double>(i);
    try {
        mi_scores(x, y, names_for(1), 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Estimation);
        EXPECT_NE(std::string(e.what()).find("class 1"), std::string::npos) << e.what();
    }
}

TEST(Mi, MissingValuesRejected) {
    DenseMatrix x(8, 1, 1.0);
    x(3, 0) = std::nan("");
    std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
    EXPECT_THROW(mi_scores(x, y, names_for(1), 1), Error);
}

TEST(Rank, DescendingWithStableTies) {
    const MiScores s{{"a", 0.1}, {"b", 0.5}, {"c", 0.1}, {"d", 0.7}};
    EXPECT_EQ(rank_features(s), (std::vector<std::size_t>{3, 1, 0, 2}));
}

TEST(Rfecv, CandidateSizes) {
    EXPECT_EQ(candidate_sizes(3), (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(candidate_sizes(10), (std::vector<std::size_t>{5, 6, 7, 8, 9, 10}));
    const auto big = candidate_sizes(100);  // step ceil(100/40) = 3
    EXPECT_EQ(big.front(), 50u);
    EXPECT_EQ(big[1], 53u);
    EXPECT_EQ(big.back(), 100u);
    for (auto k : big) {
        EXPECT_GE(k, 50u);
        EXPECT_LE(k, 100u);
    }
}

TEST(Rfecv, SignalInTopHalfChosen) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> z(0.0, 1.0);
    const std::size_t n = 120;
    DenseMatrix x(n, 10);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(i % 3);
        for (std::size_t j = 0; j < 10; ++j) x(i, j) = j < 5 ? 4.0 * y[i] + 0.3 * z(rng) : z(rng);
    }
    const auto names = names_for(10);
    const auto scores = mi_scores(x, y, names);
    RfecvOptions opt;
    opt.seed = 5;
    opt.params.rounds = 20;
    const auto r = rfecv_select(x, y, scores, opt);

    // Oracle: the cut with the best inner accuracy, earliest on ties.
    std::size_t want = 0;
    double best = -1.0;
    for (const auto& [k, acc] : r.accuracy_by_k)
        if (acc > best) {
            best = acc;
            want = k;
        }
    EXPECT_EQ(r.k, want);
    EXPECT_EQ(r.k, 5u);
    EXPECT_EQ(std::set<std::string>(r.chosen.begin(), r.chosen.end()),
              (std::set<std::string>{"f0", "f1", "f2", "f3", "f4"}));
}

TEST(Rfecv, IdenticalCopiesTieToHalf) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.0, 1.0);
    DenseMatrix x(60, 7);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        y[i] = static_cast<int>(i % 2);
        const double v = y[i] + z(rng);
        for (std::size_t j = 0; j < 7; ++j) x(i, j) = v;
    }
    RfecvOptions opt;
    opt.params.rounds = 10;
    const auto r = rfecv_select(x, y, mi_scores(x, y, names_for(7)), opt);
    EXPECT_EQ(r.k, 4u);
}

TEST(Rfecv, SingleClassIsSelectionError) {
    DenseMatrix x(10, 2);
    const std::vector<int> y(10, 1);
    const MiScores s{{"a", 0.0}, {"b", 0.0}};
    try {
        rfecv_select(x, y, s, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Selection);
    }
}

TEST(Rfecv, TooFewFeaturesIsSelectionError) {
    DenseMatrix x(10, 1);
    std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    EXPECT_THROW(rfecv_select(x, y, MiScores{{"a", 0.0}}, {}), Error);
}

TEST(Folds, GroupsStayTogetherAndClassesSpread) {
    std::vector<int> y;
    std::vector<std::string> groups;
    for (int p = 0; p < 30; ++p)
        for (int s = 0; s < 1 + p % 3; ++s) {
            y.push_back(p % 3);
            groups.push_back("p" + std::to_string(p));
        }
    const auto fold = stratified_folds(y, groups, 5, 12);
    std::map<std::string, int> group_fold;
    std::map<std::pair<int, int>, int> class_fold;
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto [it, fresh] = group_fold.emplace(groups[i], fold[i]);
        EXPECT_EQ(it->second, fold[i]) << groups[i];
        ++class_fold[{y[i], fold[i]}];
        EXPECT_GE(fold[i], 0);
        EXPECT_LT(fold[i], 5);
    }
    for (int c = 0; c < 3; ++c)
        for (int f = 0; f < 5; ++f) EXPECT_GT((class_fold[{c, f}]), 0) << c << "/" << f;
}

TEST(Selection, JsonHasRankingAndCurve) {
    SelectionResult r;
    r.scores = {{"a", 0.2}, {"b", 0.4}};
    r.ranking = {1, 0};
    r.k = 1;
    r.chosen = {"b"};
    r.chosen_indices = {1};
    r.accuracy_by_k = {{1, 0.9}, {2, 0.8}};
    const auto j = nlohmann::json::parse(to_json(r));
    EXPECT_EQ(j.at("k"), 1);
    EXPECT_EQ(j.at("chosen")[0], "b");
    EXPECT_TRUE(j.contains("ranking"));
    ASSERT_EQ(j.at("curve").size(), 2u);
    EXPECT_EQ(j.at("ranking")[0].at("feature"), "b");
}
