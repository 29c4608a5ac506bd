#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hccstage/dataset.hpp"
#include "hccstage/gbdt.hpp"
#include "hccstage/matrix.hpp"
#include "hccstage/select.hpp"
#include "hccstage/tabular.hpp"

namespace hccstage::evaluate {

inline constexpr int kRounds = 5;
inline constexpr int kMaxSplitRetries = 100;

struct SplitPlan {
    int round = 0;
    std::vector<std::string> train;  // sorted
    std::vector<std::string> test;   // sorted
    std::uint64_t seed = 0;          // seed that produced the accepted shuffle
};

/// Seeded 4:1 patient partition; train gets ceil(0.8 P). When stratified,
/// each class contributes its largest-remainder share of the test set. A plan
/// leaving any class out of train is redrawn with seed + attempt.
SplitPlan patient_split(std::span<const std::string> patient_ids, std::span<const int> labels, int round,
                        std::uint64_t seed, bool stratified = true);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // +inf for the (0,0) corner
};

enum class AucAverage { Macro, Weighted };

struct RocResult {
    std::vector<std::optional<double>> auc;      // per class; nullopt when undefined
    std::vector<std::vector<RocPoint>> curves;   // per class; empty when undefined
    std::vector<int> undefined_classes;
    double average = 0.0;  // over defined classes; NaN when none
};

/// One-vs-rest AUC per column of `proba` with tie-aware pair counting.
RocResult roc_auc_ovr(const DenseMatrix& proba, std::span<const int> truth, AucAverage average = AucAverage::Macro);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // population
};
Summary summarize(std::span<const double> values);

enum class MetricLevel { Sample, Patient };

/// Reported to the instrumentation hook each time something is fit.
struct FitEvent {
    int round = 0;
    std::string stage;                      // "filter", "encode", "impute", "select", "train"
    std::vector<std::string> patient_ids;   // patients whose rows fed the fit
};

struct CvConfig {
    int rounds = kRounds;
    std::uint64_t seed = 0;
    bool stratified = true;
    tabular::FilterPolicy filter;
    int k_neighbors = select::kDefaultNeighbors;
    int inner_folds = 5;
    gbdt::Params params;
    AucAverage auc_average = AucAverage::Macro;
    MetricLevel metric_level = MetricLevel::Sample;
    dataset::ModalitySet modalities = dataset::ModalitySet::all();
    std::function<void(const FitEvent&)> on_fit;  // must be thread-safe when set
};

struct Prediction {
    std::string sample_id;
    std::string patient_id;
    int label = 0;
    std::vector<double> proba;
};

struct RoundReport {
    SplitPlan plan;
    double accuracy = 0.0;
    double auc = 0.0;
    RocResult roc;
    std::vector<std::string> selected;
    std::array<std::array<int, tabular::kNumStageClasses>, tabular::kNumStageClasses> confusion{};  // [true][pred]
    std::vector<std::pair<std::string, double>> importance;  // descending gain
    select::SelectionResult selection;
    std::vector<Prediction> predictions;
    std::vector<tabular::FilterRemoval> removed_columns;
};

struct CVReport {
    dataset::ModalitySet modalities;
    std::vector<RoundReport> rounds;
    Summary acc;
    Summary auc;
};

std::vector<SplitPlan> make_plans(const dataset::Dataset& data, const CvConfig& config);

std::string sample_id(const tabular::SampleStub& stub);

/// Design matrices for one cell. Tabular filtering, coding and imputation,
/// and image-block imputation, are fit on the training patients only.
struct PreparedData {
    std::vector<std::string> feature_names;
    std::vector<tabular::SampleStub> train_samples, test_samples;
    DenseMatrix x_train, x_test;
    std::vector<int> y_train, y_test;
    std::vector<std::string> train_groups;  // patient id per training sample
    std::vector<tabular::FilterRemoval> removed;
};

PreparedData prepare_features(const dataset::Dataset& data, const CvConfig& config, const dataset::ModalitySet& cell,
                              std::span<const std::string> train_patients,
                              std::span<const std::string> test_patients, int round = 0);

/// MI ranking plus RFECV cut on a prepared training set.
select::SelectionResult select_features(const PreparedData& prepared, const CvConfig& config, int round = 0);

CVReport cross_validate(const dataset::Dataset& data, const CvConfig& config);
CVReport cross_validate(const dataset::Dataset& data, const CvConfig& config, std::span<const SplitPlan> plans);

/// Table-2 order: image rows CT, MRI, CT+MRI, Null by tabular columns
/// Redcap, Lab, Redcap+Lab, Null; the Null/Null cell is omitted.
std::vector<dataset::ModalitySet> ablation_cells();

/// One report per cell, all sharing the same split plans.
std::vector<CVReport> ablation_grid(const dataset::Dataset& data, const CvConfig& config);

}  // namespace hccstage::evaluate
