#include "hccstage/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "hccstage/error.hpp"
#include "hccstage/hash.hpp"

namespace hccstage::gbdt {

using nlohmann::json;

void Params::validate() const {
    if (!(eta > 0.0)) raise(ErrorKind::Config, "eta must be positive");
    if (max_depth < 1) raise(ErrorKind::Config, "max_depth must be at least 1");
    if (!(lambda >= 0.0)) raise(ErrorKind::Config, "lambda must be non-negative");
    if (!(gamma >= 0.0)) raise(ErrorKind::Config, "gamma must be non-negative");
    if (rounds < 0) raise(ErrorKind::Config, "rounds must be non-negative");
    if (!(min_child_weight >= 0.0)) raise(ErrorKind::Config, "min_child_weight must be non-negative");
}

double Tree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return nodes[i].weight;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - top);
        total += out[k];
    }
    for (auto& p : out) p /= total;
    return out;
}

std::vector<GradPair> grad_hess(std::span<const double> probabilities, int label) {
    std::vector<GradPair> out(probabilities.size());
    for (std::size_t k = 0; k < probabilities.size(); ++k) {
        const double p = probabilities[k];
        out[k].g = p - (static_cast<int>(k) == label ? 1.0 : 0.0);
        out[k].h = std::max(p * (1.0 - p), kMinHessian);
    }
    return out;
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) noexcept {
    const double g = gl + gr;
    const double h = hl + hr;
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma;
}

std::optional<SplitCandidate> best_split(std::span<const double> sorted_values, std::span<const double> g,
                                         std::span<const double> h, double lambda, double gamma,
                                         double min_child_weight) {
    const std::size_t n = sorted_values.size();
    if (g.size() != n || h.size() != n) raise(ErrorKind::Input, "best_split: values, g and h differ in length");
    const double g_total = std::accumulate(g.begin(), g.end(), 0.0);
    const double h_total = std::accumulate(h.begin(), h.end(), 0.0);
    std::optional<SplitCandidate> best;
    double gl = 0.0, hl = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        gl += g[i];
        hl += h[i];
        if (!(sorted_values[i + 1] > sorted_values[i])) continue;
        const double hr = h_total - hl;
        if (hl < min_child_weight || hr < min_child_weight) continue;
        const double gain = split_gain(gl, hl, g_total - gl, hr, lambda, gamma);
        if (gain > 0.0 && (!best || gain > best->gain)) {
            best = SplitCandidate{0.5 * (sorted_values[i] + sorted_values[i + 1]), gain};
        }
    }
    return best;
}

namespace {

void check_finite(const DenseMatrix& x) {
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (double v : x.row(r))
            if (!std::isfinite(v)) raise(ErrorKind::Input, "feature matrix contains missing or non-finite values");
}

// Feature columns presorted once per training run.
struct SortedColumns {
    std::vector<std::vector<std::uint32_t>> order;
    std::vector<std::vector<double>> values;  // values[f][r] == x(order[f][r], f)

    explicit SortedColumns(const DenseMatrix& x) : order(x.cols()), values(x.cols()) {
        const std::size_t n = x.rows();
        for (std::size_t f = 0; f < x.cols(); ++f) {
            auto& idx = order[f];
            idx.resize(n);
            std::iota(idx.begin(), idx.end(), 0u);
            std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x(a, f) < x(b, f); });
            values[f].resize(n);
            for (std::size_t r = 0; r < n; ++r) values[f][r] = x(idx[r], f);
        }
    }
};

struct ScanState {
    double gl = 0.0;
    double hl = 0.0;
    double last = 0.0;
    bool started = false;
};

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
    int depth = 0;
    bool open = false;  // eligible for splitting at the current level
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
};

/// Grows one tree on (g, h). On return, `leaf_of[i]` is the node index of the
/// leaf holding sample i.
Tree grow_tree(const DenseMatrix& x, const SortedColumns& cols, std::span<const double> g, std::span<const double> h,
               const Params& params, std::vector<std::int32_t>& leaf_of) {
    const std::size_t n = x.rows();
    const std::size_t nf = x.cols();
    Tree tree;
    std::vector<NodeStats> stats(1);
    tree.nodes.emplace_back();
    for (std::size_t i = 0; i < n; ++i) {
        stats[0].g += g[i];
        stats[0].h += h[i];
    }
    leaf_of.assign(n, 0);

    std::vector<std::size_t> frontier{0};
    std::vector<ScanState> scan;
    for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
        bool any_open = false;
        for (auto& s : stats) s.open = false;
        for (auto nd : frontier) {
            auto& s = stats[nd];
            // A split needs both children at or above min_child_weight.
            s.open = s.h >= 2.0 * params.min_child_weight && s.h > 0.0;
            s.best_feature = -1;
            s.best_gain = 0.0;
            any_open = any_open || s.open;
        }
        if (!any_open) break;

        scan.assign(tree.nodes.size(), ScanState{});
        for (std::size_t f = 0; f < nf; ++f) {
            for (auto nd : frontier) scan[nd] = ScanState{};
            const auto& order = cols.order[f];
            const auto& values = cols.values[f];
            for (std::size_t r = 0; r < n; ++r) {
                const auto i = order[r];
                const auto nd = static_cast<std::size_t>(leaf_of[i]);
                auto& s = stats[nd];
                if (!s.open) continue;
                auto& st = scan[nd];
                const double v = values[r];
                if (st.started && v > st.last) {
                    const double hr = s.h - st.hl;
                    if (st.hl >= params.min_child_weight && hr >= params.min_child_weight) {
                        const double gain = split_gain(st.gl, st.hl, s.g - st.gl, hr, params.lambda, params.gamma);
                        if (gain > 0.0 && gain > s.best_gain) {
                            s.best_gain = gain;
                            s.best_feature = static_cast<int>(f);
                            s.best_threshold = 0.5 * (st.last + v);
                        }
                    }
                }
                st.gl += g[i];
                st.hl += h[i];
                st.last = v;
                st.started = true;
            }
        }

        std::vector<std::size_t> next;
        for (auto nd : frontier) {
            const auto& s = stats[nd];
            if (s.best_feature < 0) continue;
            const int left = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stats.emplace_back();
            stats.emplace_back();
            auto& node = tree.nodes[nd];
            node.feature = s.best_feature;
            node.threshold = s.best_threshold;
            node.gain = stats[nd].best_gain;
            node.left = left;
            node.right = left + 1;
            stats[static_cast<std::size_t>(left)].depth = depth + 1;
            stats[static_cast<std::size_t>(left) + 1].depth = depth + 1;
            next.push_back(static_cast<std::size_t>(left));
            next.push_back(static_cast<std::size_t>(left) + 1);
        }
        if (next.empty()) break;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& node = tree.nodes[static_cast<std::size_t>(leaf_of[i])];
            if (node.is_leaf()) continue;
            const int child = x(i, static_cast<std::size_t>(node.feature)) < node.threshold ? node.left : node.right;
            leaf_of[i] = child;
            auto& cs = stats[static_cast<std::size_t>(child)];
            cs.g += g[i];
            cs.h += h[i];
        }
        frontier = std::move(next);
    }

    for (std::size_t nd = 0; nd < tree.nodes.size(); ++nd) {
        auto& node = tree.nodes[nd];
        if (node.is_leaf()) node.weight = -stats[nd].g / (stats[nd].h + params.lambda);
    }
    return tree;
}

double mean_cross_entropy(const DenseMatrix& margin, std::span<const int> y) {
    double total = 0.0;
    for (std::size_t i = 0; i < margin.rows(); ++i) {
        const auto p = softmax(margin.row(i));
        total -= std::log(std::max(p[static_cast<std::size_t>(y[i])], std::numeric_limits<double>::min()));
    }
    return margin.rows() ? total / static_cast<double>(margin.rows()) : 0.0;
}

void check_labels(std::span<const int> y, int num_classes, std::size_t rows) {
    if (y.size() != rows) raise(ErrorKind::Input, "label count does not match feature rows");
    for (int v : y)
        if (v < 0 || v >= num_classes) raise(ErrorKind::Input, "label out of range: " + std::to_string(v));
}

std::string hash_names(const std::vector<std::string>& names) {
    std::string joined;
    for (const auto& n : names) {
        joined += n;
        joined.push_back('\n');
    }
    return sha256_hex(joined);
}

}  // namespace

TrainResult train_booster(const DenseMatrix& x, std::span<const int> y, const Params& params,
                          const ValidationSet* validation, int num_classes) {
    params.validate();
    if (x.rows() == 0) raise(ErrorKind::Training, "no training rows");
    if (num_classes == 0) num_classes = *std::max_element(y.begin(), y.end()) + 1;
    if (num_classes < 2) raise(ErrorKind::Training, "need at least two classes");
    check_labels(y, num_classes, x.rows());
    check_finite(x);

    const std::size_t n = x.rows();
    const auto k_count = static_cast<std::size_t>(num_classes);
    std::vector<double> counts(k_count, 0.0);
    for (int v : y) counts[static_cast<std::size_t>(v)] += 1.0;
    if (std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) < 2) {
        raise(ErrorKind::Training, "training labels contain a single class");
    }

    TrainResult result;
    auto& booster = result.booster;
    booster.params = params;
    booster.num_classes = num_classes;
    booster.num_features = static_cast<int>(x.cols());
    booster.base_score.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        // Absent classes get a tiny prior instead of log(0).
        booster.base_score[k] = std::log(std::max(counts[k], 1e-6) / static_cast<double>(n));
    }

    DenseMatrix margin(n, k_count);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < k_count; ++k) margin(i, k) = booster.base_score[k];

    std::optional<DenseMatrix> valid_margin;
    if (validation) {
        if (!validation->x || validation->x->cols() != x.cols()) raise(ErrorKind::Input, "validation feature count mismatch");
        check_labels(validation->y, num_classes, validation->x->rows());
        valid_margin.emplace(validation->x->rows(), k_count);
        for (std::size_t i = 0; i < validation->x->rows(); ++i)
            for (std::size_t k = 0; k < k_count; ++k) (*valid_margin)(i, k) = booster.base_score[k];
    }

    const SortedColumns cols(x);
    std::vector<double> g(n), h(n);
    std::vector<std::vector<std::int32_t>> leaf_of(k_count);
    DenseMatrix grads(n, k_count), hess(n, k_count);
    booster.rounds.reserve(static_cast<std::size_t>(params.rounds));

    for (int round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = softmax(margin.row(i));
            const auto gh = grad_hess(p, y[i]);
            for (std::size_t k = 0; k < k_count; ++k) {
                grads(i, k) = gh[k].g;
                hess(i, k) = gh[k].h;
            }
        }
        std::vector<Tree> trees;
        trees.reserve(k_count);
        for (std::size_t k = 0; k < k_count; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                g[i] = grads(i, k);
                h[i] = hess(i, k);
            }
            trees.push_back(grow_tree(x, cols, g, h, params, leaf_of[k]));
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                margin(i, k) += params.eta * trees[k].nodes[static_cast<std::size_t>(leaf_of[k][i])].weight;
            }
            if (valid_margin) {
                for (std::size_t i = 0; i < valid_margin->rows(); ++i)
                    (*valid_margin)(i, k) += params.eta * trees[k].predict(validation->x->row(i));
            }
        }
        booster.rounds.push_back(std::move(trees));
        result.log.train_loss.push_back(mean_cross_entropy(margin, y));
        if (valid_margin) result.log.valid_loss.push_back(mean_cross_entropy(*valid_margin, validation->y));
    }
    return result;
}

DenseMatrix predict_margin(const Booster& booster, const DenseMatrix& x) {
    if (static_cast<int>(x.cols()) != booster.num_features) {
        raise(ErrorKind::Input, "expected " + std::to_string(booster.num_features) + " features, got " +
                                    std::to_string(x.cols()));
    }
    check_finite(x);
    const auto k_count = static_cast<std::size_t>(booster.num_classes);
    DenseMatrix margin(x.rows(), k_count);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        for (std::size_t k = 0; k < k_count; ++k) {
            double m = booster.base_score[k];
            for (const auto& round : booster.rounds) m += booster.params.eta * round[k].predict(row);
            margin(i, k) = m;
        }
    }
    return margin;
}

DenseMatrix predict_proba(const Booster& booster, const DenseMatrix& x) {
    auto margin = predict_margin(booster, x);
    for (std::size_t i = 0; i < margin.rows(); ++i) {
        const auto p = softmax(margin.row(i));
        std::copy(p.begin(), p.end(), margin.row(i).begin());
    }
    return margin;
}

std::vector<int> predict_class(const Booster& booster, const DenseMatrix& x) {
    const auto proba = predict_proba(booster, x);
    std::vector<int> out(proba.rows());
    for (std::size_t i = 0; i < proba.rows(); ++i) {
        const auto row = proba.row(i);
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

double cross_entropy(const DenseMatrix& probabilities, std::span<const int> y) {
    if (probabilities.rows() != y.size()) raise(ErrorKind::Input, "label count does not match probability rows");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        total -= std::log(std::max(probabilities(i, static_cast<std::size_t>(y[i])), std::numeric_limits<double>::min()));
    }
    return y.empty() ? 0.0 : total / static_cast<double>(y.size());
}

std::vector<double> importance_gain(const Booster& booster) {
    std::vector<double> out(static_cast<std::size_t>(booster.num_features), 0.0);
    for (const auto& round : booster.rounds)
        for (const auto& tree : round)
            for (const auto& node : tree.nodes)
                if (!node.is_leaf()) out[static_cast<std::size_t>(node.feature)] += node.gain;
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json node_to_json(const Tree& tree, std::size_t i) {
    const auto& n = tree.nodes[i];
    if (n.is_leaf()) return json{{"leaf", n.weight}};
    return json{{"feature", n.feature},
                {"threshold", n.threshold},
                {"gain", n.gain},
                {"left", node_to_json(tree, static_cast<std::size_t>(n.left))},
                {"right", node_to_json(tree, static_cast<std::size_t>(n.right))}};
}

int node_from_json(const json& j, Tree& tree) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("leaf")) {
        tree.nodes[static_cast<std::size_t>(index)].weight = j.at("leaf").get<double>();
        return index;
    }
    TreeNode node;
    node.feature = j.at("feature").get<int>();
    node.threshold = j.at("threshold").get<double>();
    node.gain = j.at("gain").get<double>();
    if (node.feature < 0) raise(ErrorKind::Parse, "negative split feature in model");
    node.left = node_from_json(j.at("left"), tree);
    node.right = node_from_json(j.at("right"), tree);
    tree.nodes[static_cast<std::size_t>(index)] = node;
    return index;
}

}  // namespace

std::string to_json(const Booster& booster) {
    json trees = json::array();
    for (const auto& round : booster.rounds) {
        json r = json::array();
        for (const auto& tree : round) r.push_back(node_to_json(tree, 0));
        trees.push_back(std::move(r));
    }
    const auto& p = booster.params;
    json j{{"params",
            {{"eta", p.eta},
             {"max_depth", p.max_depth},
             {"lambda", p.lambda},
             {"gamma", p.gamma},
             {"rounds", p.rounds},
             {"min_child_weight", p.min_child_weight}}},
           {"num_classes", booster.num_classes},
           {"num_features", booster.num_features},
           {"base_score", booster.base_score},
           {"feature_names", booster.feature_names},
           {"manifest_hash", booster.feature_names.empty() ? booster.manifest_hash : hash_names(booster.feature_names)},
           {"trees", std::move(trees)}};
    return j.dump(1);
}

Booster booster_from_json(std::string_view text) {
    Booster b;
    try {
        const auto j = json::parse(text);
        const auto& p = j.at("params");
        b.params.eta = p.at("eta").get<double>();
        b.params.max_depth = p.at("max_depth").get<int>();
        b.params.lambda = p.at("lambda").get<double>();
        b.params.gamma = p.at("gamma").get<double>();
        b.params.rounds = p.at("rounds").get<int>();
        b.params.min_child_weight = p.at("min_child_weight").get<double>();
        b.num_classes = j.at("num_classes").get<int>();
        b.num_features = j.at("num_features").get<int>();
        b.base_score = j.at("base_score").get<std::vector<double>>();
        b.feature_names = j.value("feature_names", std::vector<std::string>{});
        b.manifest_hash = j.value("manifest_hash", std::string{});
        for (const auto& r : j.at("trees")) {
            std::vector<Tree> round;
            for (const auto& t : r) {
                Tree tree;
                node_from_json(t, tree);
                round.push_back(std::move(tree));
            }
            if (static_cast<int>(round.size()) != b.num_classes) raise(ErrorKind::Parse, "round without one tree per class");
            b.rounds.push_back(std::move(round));
        }
    } catch (const json::exception& e) {
        raise(ErrorKind::Parse, std::string("model JSON: ") + e.what());
    }
    if (static_cast<int>(b.base_score.size()) != b.num_classes) raise(ErrorKind::Parse, "base_score size mismatch");
    if (!b.feature_names.empty() && b.manifest_hash != hash_names(b.feature_names)) {
        raise(ErrorKind::Parse, "model manifest hash does not match its feature names");
    }
    return b;
}

}  // namespace hccstage::gbdt
