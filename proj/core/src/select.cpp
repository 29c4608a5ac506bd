#include "hccstage/select.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <boost/math/special_functions/digamma.hpp>
#include <json.hpp>

#include "hccstage/error.hpp"
#include "hccstage/parallel.hpp"
#include "hccstage/seed.hpp"

namespace hccstage::select {

using boost::math::digamma;

namespace {

// Distance from sorted[pos] to its k-th nearest other element.
double kth_neighbor_distance(const std::vector<double>& sorted, std::size_t pos, int k) {
    std::ptrdiff_t left = static_cast<std::ptrdiff_t>(pos) - 1;
    std::size_t right = pos + 1;
    const double v = sorted[pos];
    double d = 0.0;
    for (int step = 0; step < k; ++step) {
        const double dl = left >= 0 ? v - sorted[static_cast<std::size_t>(left)] : INFINITY;
        const double dr = right < sorted.size() ? sorted[right] - v : INFINITY;
        if (dl <= dr) {
            d = dl;
            --left;
        } else {
            d = dr;
            ++right;
        }
    }
    return d;
}

double feature_mi(std::vector<double> values, std::span<const int> y, const std::vector<std::size_t>& class_size,
                  int k, std::uint64_t seed) {
    const std::size_t n = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (!(sd > 0.0)) return 0.0;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (auto& v : values) v += 1e-10 * sd * noise(rng);

    std::vector<double> all = values;
    std::sort(all.begin(), all.end());

    // Sorted values per class, plus each sample's position within its class.
    const std::size_t n_classes = class_size.size();
    std::vector<std::vector<std::pair<double, std::size_t>>> per_class(n_classes);
    for (std::size_t i = 0; i < n; ++i) per_class[static_cast<std::size_t>(y[i])].emplace_back(values[i], i);

    double sum_psi_m = 0.0;
    double sum_psi_nc = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto& members = per_class[c];
        if (members.empty()) continue;
        std::sort(members.begin(), members.end());
        std::vector<double> sorted(members.size());
        for (std::size_t t = 0; t < members.size(); ++t) sorted[t] = members[t].first;
        const double psi_nc = digamma(static_cast<double>(members.size()));
        for (std::size_t t = 0; t < sorted.size(); ++t) {
            const double v = sorted[t];
            const double d = kth_neighbor_distance(sorted, t, k);
            // Points with |x - v| < d, the query point included. Distances are
            // formed by the same subtraction as d; bounds like v + d can round
            // past the neighbour that defined d.
            const auto lo = std::partition_point(all.begin(), all.end(), [&](double x) { return v - x >= d; });
            const auto hi = std::partition_point(lo, all.end(), [&](double x) { return x - v < d; });
            const auto m = std::max<std::ptrdiff_t>(1, hi - lo);
            sum_psi_m += digamma(static_cast<double>(m));
            sum_psi_nc += psi_nc;
        }
    }
    const double nn = static_cast<double>(n);
    const double mi = digamma(nn) - sum_psi_nc / nn + digamma(static_cast<double>(k)) - sum_psi_m / nn;
    return std::max(0.0, mi);
}

}  // namespace

MiScores mi_scores(const DenseMatrix& x, std::span<const int> y, std::span<const std::string> names,
                   int k_neighbors, std::uint64_t seed) {
    if (y.size() != x.rows()) raise(ErrorKind::Input, "label count does not match feature rows");
    if (names.size() != x.cols()) raise(ErrorKind::Input, "feature name count does not match columns");
    if (k_neighbors < 1) raise(ErrorKind::Estimation, "k_neighbors must be at least 1");
    int max_label = -1;
    for (int v : y) {
        if (v < 0) raise(ErrorKind::Input, "negative class label");
        max_label = std::max(max_label, v);
    }
    std::vector<std::size_t> class_size(static_cast<std::size_t>(max_label + 1), 0);
    for (int v : y) ++class_size[static_cast<std::size_t>(v)];
    for (std::size_t c = 0; c < class_size.size(); ++c) {
        if (class_size[c] > 0 && class_size[c] <= static_cast<std::size_t>(k_neighbors)) {
            raise(ErrorKind::Estimation, "class " + std::to_string(c) + " has " + std::to_string(class_size[c]) +
                                             " samples; need more than k_neighbors = " + std::to_string(k_neighbors));
        }
    }
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (double v : x.row(r))
            if (!std::isfinite(v)) raise(ErrorKind::Estimation, "feature matrix contains missing values");

    MiScores out(x.cols());
    parallel_for(x.cols(), [&](std::size_t j) {
        out[j].name = names[j];
        out[j].score = feature_mi(x.column(j), y, class_size, k_neighbors, derive_seed(seed, j));
    });
    return out;
}

std::vector<std::size_t> rank_features(const MiScores& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a].score > scores[b].score; });
    return order;
}

std::vector<std::size_t> candidate_sizes(std::size_t feature_count) {
    std::vector<std::size_t> out;
    if (feature_count == 0) return out;
    const std::size_t start = (feature_count + 1) / 2;
    const std::size_t step = feature_count <= 40 ? 1 : (feature_count + 39) / 40;
    for (std::size_t k = start; k <= feature_count; k += step) out.push_back(k);
    if (out.back() != feature_count) out.push_back(feature_count);
    return out;
}

std::vector<int> stratified_folds(std::span<const int> y, std::span<const std::string> groups, int folds,
                                  std::uint64_t seed) {
    if (folds < 2) raise(ErrorKind::Selection, "need at least two folds");
    if (!groups.empty() && groups.size() != y.size()) raise(ErrorKind::Input, "group count does not match labels");

    // Group index per sample, first-appearance order.
    std::vector<std::size_t> group_of(y.size());
    std::vector<int> group_label;
    if (groups.empty()) {
        std::iota(group_of.begin(), group_of.end(), 0);
        group_label.assign(y.begin(), y.end());
    } else {
        std::map<std::string_view, std::size_t> index;
        for (std::size_t i = 0; i < y.size(); ++i) {
            auto [it, inserted] = index.emplace(groups[i], group_label.size());
            if (inserted) group_label.push_back(y[i]);
            group_of[i] = it->second;
        }
    }

    const int max_label = group_label.empty() ? -1 : *std::max_element(group_label.begin(), group_label.end());
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label + 1));
    for (std::size_t g = 0; g < group_label.size(); ++g) by_class[static_cast<std::size_t>(group_label[g])].push_back(g);

    std::mt19937_64 rng(seed);
    std::vector<int> group_fold(group_label.size(), 0);
    std::size_t dealt = 0;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (auto g : members) group_fold[g] = static_cast<int>(dealt++ % static_cast<std::size_t>(folds));
    }
    std::vector<int> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = group_fold[group_of[i]];
    return out;
}

SelectionResult rfecv_select(const DenseMatrix& x, std::span<const int> y, const MiScores& scores,
                             const RfecvOptions& options) {
    const std::size_t nf = x.cols();
    if (nf < 2) raise(ErrorKind::Selection, "RFECV needs at least two features");
    if (scores.size() != nf) raise(ErrorKind::Selection, "MI score count does not match features");
    if (options.inner_folds < 2) raise(ErrorKind::Selection, "inner_folds must be at least 2");
    if (y.size() != x.rows()) raise(ErrorKind::Input, "label count does not match feature rows");
    {
        std::vector<int> distinct(y.begin(), y.end());
        std::sort(distinct.begin(), distinct.end());
        if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
            raise(ErrorKind::Selection, "labels contain a single class");
        }
    }
    const int num_classes = *std::max_element(y.begin(), y.end()) + 1;

    std::size_t n_groups = y.size();
    if (!options.groups.empty()) {
        std::vector<std::string_view> g(options.groups.begin(), options.groups.end());
        std::sort(g.begin(), g.end());
        n_groups = static_cast<std::size_t>(std::unique(g.begin(), g.end()) - g.begin());
    }
    const int folds = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(options.inner_folds), n_groups));
    if (folds < 2) raise(ErrorKind::Selection, "fewer than two groups for inner cross-validation");
    const auto fold_of = stratified_folds(y, options.groups, folds, options.seed);

    SelectionResult result;
    result.scores = scores;
    result.ranking = rank_features(scores);
    const auto sizes = candidate_sizes(nf);

    std::vector<std::vector<std::size_t>> train_rows(static_cast<std::size_t>(folds));
    std::vector<std::vector<std::size_t>> test_rows(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (int f = 0; f < folds; ++f) {
            (fold_of[i] == f ? test_rows : train_rows)[static_cast<std::size_t>(f)].push_back(i);
        }
    }

    const std::size_t jobs = sizes.size() * static_cast<std::size_t>(folds);
    std::vector<double> fold_accuracy(jobs, 0.0);
    parallel_for(jobs, [&](std::size_t job) {
        const std::size_t k = sizes[job / static_cast<std::size_t>(folds)];
        const auto f = job % static_cast<std::size_t>(folds);
        if (test_rows[f].empty()) return;
        const std::vector<std::size_t> columns(result.ranking.begin(), result.ranking.begin() + static_cast<std::ptrdiff_t>(k));
        const auto x_train = x.select_rows(train_rows[f]).select_columns(columns);
        const auto x_test = x.select_rows(test_rows[f]).select_columns(columns);
        std::vector<int> y_train;
        for (auto r : train_rows[f]) y_train.push_back(y[r]);

        std::vector<int> predicted;
        std::vector<int> distinct = y_train;
        std::sort(distinct.begin(), distinct.end());
        if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
            predicted.assign(test_rows[f].size(), y_train.front());
        } else {
            const auto model = gbdt::train_booster(x_train, y_train, options.params, nullptr, num_classes);
            predicted = gbdt::predict_class(model.booster, x_test);
        }
        std::size_t correct = 0;
        for (std::size_t t = 0; t < predicted.size(); ++t) correct += predicted[t] == y[test_rows[f][t]] ? 1 : 0;
        fold_accuracy[job] = static_cast<double>(correct) / static_cast<double>(predicted.size());
    });

    std::size_t used_folds = 0;
    for (const auto& t : test_rows) used_folds += t.empty() ? 0 : 1;
    double best_acc = -1.0;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        double acc = 0.0;
        for (int f = 0; f < folds; ++f) acc += fold_accuracy[s * static_cast<std::size_t>(folds) + static_cast<std::size_t>(f)];
        acc /= static_cast<double>(used_folds);
        result.accuracy_by_k.emplace_back(sizes[s], acc);
        if (acc > best_acc) {
            best_acc = acc;
            result.k = sizes[s];
        }
    }
    result.chosen_indices.assign(result.ranking.begin(), result.ranking.begin() + static_cast<std::ptrdiff_t>(result.k));
    for (auto j : result.chosen_indices) result.chosen.push_back(scores[j].name);
    return result;
}

std::string to_json(const SelectionResult& result) {
    using nlohmann::json;
    json ranking = json::array();
    for (auto j : result.ranking) ranking.push_back({{"feature", result.scores[j].name}, {"mi", result.scores[j].score}});
    json curve = json::array();
    for (const auto& [k, acc] : result.accuracy_by_k) curve.push_back({{"k", k}, {"accuracy", acc}});
    json j{{"k", result.k}, {"chosen", result.chosen}, {"ranking", std::move(ranking)}, {"curve", std::move(curve)}};
    return j.dump(1);
}

}  // namespace hccstage::select
