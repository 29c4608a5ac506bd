#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hccstage/gbdt.hpp"
#include "hccstage/matrix.hpp"

namespace hccstage::select {

struct MiScore {
    std::string name;
    double score = 0.0;  // nats, clamped at 0

    friend bool operator==(const MiScore&, const MiScore&) = default;
};
using MiScores = std::vector<MiScore>;

inline constexpr int kDefaultNeighbors = 3;

/// Nearest-neighbour mutual information between each continuous feature and
/// the discrete label. Per point: d = distance to its k-th nearest same-class
/// neighbour, m = number of points (itself included) strictly closer than d;
/// MI = psi(N) - <psi(N_c)> + psi(k) - <psi(m)>, clamped at 0. Ties are
/// broken by a per-feature seeded jitter of 1e-10 * std; constant features
/// score 0.
MiScores mi_scores(const DenseMatrix& x, std::span<const int> y, std::span<const std::string> names,
                   int k_neighbors = kDefaultNeighbors, std::uint64_t seed = 0);

/// Feature indices by descending score; ties keep the lower index first.
std::vector<std::size_t> rank_features(const MiScores& scores);

/// Subset sizes RFECV evaluates: ceil(F/2) .. F, step 1 when F <= 40 and
/// ceil(F/40) otherwise; F itself is always included.
std::vector<std::size_t> candidate_sizes(std::size_t feature_count);

/// Fold id per sample. Groups (e.g. patients) never straddle folds; groups
/// are shuffled within each class and dealt round-robin. An empty `groups`
/// treats every sample as its own group.
std::vector<int> stratified_folds(std::span<const int> y, std::span<const std::string> groups, int folds,
                                  std::uint64_t seed);

struct SelectionResult {
    std::vector<std::string> chosen;          // descending score
    std::vector<std::size_t> chosen_indices;  // columns of the input matrix
    std::size_t k = 0;
    std::vector<std::pair<std::size_t, double>> accuracy_by_k;  // mean inner-CV accuracy
    std::vector<std::size_t> ranking;
    MiScores scores;
};

struct RfecvOptions {
    int inner_folds = 5;
    std::uint64_t seed = 0;
    gbdt::Params params;                  // classifier used for inner CV
    std::span<const std::string> groups;  // optional per-sample group ids
};

/// Chooses the cut point along the MI ranking that maximises mean inner-CV
/// accuracy; ties go to the smaller subset.
SelectionResult rfecv_select(const DenseMatrix& x, std::span<const int> y, const MiScores& scores,
                             const RfecvOptions& options);

std::string to_json(const SelectionResult& result);

}  // namespace hccstage::select
