#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hccstage/matrix.hpp"

// Gradient-boosted regression trees for K-class softmax classification.
// Exact greedy split search, depth-wise growth, one tree per class per round.
namespace hccstage::gbdt {

struct Params {
    double eta = 0.3;
    int max_depth = 6;
    double lambda = 1.0;
    double gamma = 0.0;
    int rounds = 100;
    double min_child_weight = 1.0;

    void validate() const;
};

/// Split when `feature >= 0` (samples with x < threshold go left), leaf otherwise.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double gain = 0.0;
    double weight = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const;
};

struct Booster {
    Params params;
    int num_classes = 0;
    int num_features = 0;
    std::vector<double> base_score;        // per-class log prior
    std::vector<std::vector<Tree>> rounds;  // rounds[r][k] is class k's tree
    std::vector<std::string> feature_names;
    std::string manifest_hash;             // hash of feature_names
};

struct TrainLog {
    std::vector<double> train_loss;  // mean cross-entropy after each round
    std::vector<double> valid_loss;
};

struct ValidationSet {
    const DenseMatrix* x = nullptr;
    std::span<const int> y;
};

struct TrainResult {
    Booster booster;
    TrainLog log;
};

std::vector<double> softmax(std::span<const double> logits);

struct GradPair {
    double g = 0.0;
    double h = 0.0;
};

inline constexpr double kMinHessian = 1e-16;

/// g_k = p_k - [k == y], h_k = max(p_k (1 - p_k), 1e-16).
std::vector<GradPair> grad_hess(std::span<const double> probabilities, int label);

/// Gain = 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) noexcept;

struct SplitCandidate {
    double threshold = 0.0;
    double gain = 0.0;
};

/// Best midpoint split of ascending `sorted_values` with aligned gradients.
/// Requires gain > 0 and both children's hessian sums >= min_child_weight;
/// ties keep the smallest threshold.
std::optional<SplitCandidate> best_split(std::span<const double> sorted_values, std::span<const double> g,
                                         std::span<const double> h, double lambda, double gamma,
                                         double min_child_weight);

/// `num_classes` of 0 means max(y) + 1.
TrainResult train_booster(const DenseMatrix& x, std::span<const int> y, const Params& params,
                          const ValidationSet* validation = nullptr, int num_classes = 0);

DenseMatrix predict_margin(const Booster& booster, const DenseMatrix& x);
DenseMatrix predict_proba(const Booster& booster, const DenseMatrix& x);
std::vector<int> predict_class(const Booster& booster, const DenseMatrix& x);

/// Mean of -log p[y].
double cross_entropy(const DenseMatrix& probabilities, std::span<const int> y);

/// Sum of retained split gains per feature.
std::vector<double> importance_gain(const Booster& booster);

std::string to_json(const Booster& booster);
Booster booster_from_json(std::string_view text);

}  // namespace hccstage::gbdt
