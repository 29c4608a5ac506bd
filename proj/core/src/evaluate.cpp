#include "hccstage/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "hccstage/error.hpp"
#include "hccstage/parallel.hpp"
#include "hccstage/seed.hpp"

namespace hccstage::evaluate {

namespace {

constexpr int kClasses = tabular::kNumStageClasses;

// Test-set share per class: largest remainder of n_c * test / P, never
// taking a class's last patient while another class still has room.
std::vector<std::size_t> test_quotas(const std::vector<std::size_t>& class_sizes, std::size_t total,
                                     std::size_t test) {
    std::vector<std::size_t> quota(class_sizes.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        const double exact = static_cast<double>(class_sizes[c] * test) / static_cast<double>(total);
        quota[c] = std::min(static_cast<std::size_t>(std::floor(exact)), class_sizes[c] > 0 ? class_sizes[c] - 1 : 0);
        assigned += quota[c];
        remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    // First pass keeps one patient of every class in train; second pass
    // fills whatever is left.
    for (int pass = 0; pass < 2 && assigned < test; ++pass) {
        for (const auto& [rem, c] : remainders) {
            if (assigned == test) break;
            const std::size_t cap = pass == 0 ? (class_sizes[c] > 0 ? class_sizes[c] - 1 : 0) : class_sizes[c];
            if (quota[c] < cap) {
                ++quota[c];
                ++assigned;
            }
        }
    }
    return quota;
}

std::string with_prefix(const std::string& prefix, const std::string& name) { return prefix + "_" + name; }

// Table with one row per patient in `patients` order; absent patients get
// all-missing rows.
tabular::Table align_rows(const tabular::Table& table, const std::vector<std::string>& patients) {
    std::map<std::string, std::size_t> where;
    for (std::size_t r = 0; r < table.rows(); ++r) where.emplace(table.patient_ids()[r], r);
    std::vector<tabular::Column> cols;
    for (const auto& col : table.columns()) {
        if (col.kind == tabular::ColumnKind::Numeric) {
            std::vector<std::optional<double>> v(patients.size());
            for (std::size_t i = 0; i < patients.size(); ++i) {
                if (auto it = where.find(patients[i]); it != where.end()) v[i] = col.numeric[it->second];
            }
            cols.push_back(tabular::Column::make_numeric(col.name, std::move(v)));
        } else {
            std::vector<std::optional<std::string>> v(patients.size());
            for (std::size_t i = 0; i < patients.size(); ++i) {
                if (auto it = where.find(patients[i]); it != where.end()) v[i] = col.text[it->second];
            }
            cols.push_back(tabular::Column::make_categorical(col.name, std::move(v)));
        }
    }
    return tabular::Table(patients, std::move(cols));
}

std::set<std::string> row_patients(const tabular::Table& table) {
    return {table.patient_ids().begin(), table.patient_ids().end()};
}

void validate(const CvConfig& config) {
    if (config.rounds < 1) raise(ErrorKind::Config, "rounds must be >= 1");
    if (config.k_neighbors < 1) raise(ErrorKind::Config, "k_neighbors must be >= 1");
    if (config.inner_folds < 2) raise(ErrorKind::Config, "inner_folds must be >= 2");
    if (config.modalities.empty()) raise(ErrorKind::Config, "no modality selected");
    config.params.validate();
    config.filter.validate();
}

struct Context {
    const dataset::Dataset& data;
    const CvConfig& config;
    tabular::Table redcap;  // aligned to data.patients
    tabular::Table lab;
    std::set<std::string> redcap_rows;
    std::set<std::string> lab_rows;
    std::map<std::string, std::size_t> patient_index;

    Context(const dataset::Dataset& d, const CvConfig& c)
        : data(d),
          config(c),
          redcap(align_rows(d.redcap, d.patients)),
          lab(align_rows(d.lab, d.patients)),
          redcap_rows(row_patients(d.redcap)),
          lab_rows(row_patients(d.lab)) {
        for (std::size_t i = 0; i < d.patients.size(); ++i) patient_index.emplace(d.patients[i], i);
    }

    bool included(const tabular::SampleStub& s, const dataset::ModalitySet& cell) const {
        return (cell.ct && s.ct_id) || (cell.mri && s.mri_id) || (cell.redcap && redcap_rows.count(s.patient_id)) ||
               (cell.lab && lab_rows.count(s.patient_id));
    }

    void notify(int round, const char* stage, const std::vector<std::string>& patients) const {
        if (config.on_fit) config.on_fit(FitEvent{round, stage, patients});
    }
};

struct Design {
    std::vector<std::string> names;
    std::vector<tabular::FilterRemoval> removed;
};

// Per-patient tabular block fitted on training patients only.
void add_tabular_block(const Context& ctx, int round, const tabular::Table& aligned, const std::string& prefix,
                       const std::vector<std::string>& train_patients, const std::vector<std::size_t>& sample_patient,
                       std::vector<std::vector<double>>& columns, Design& design) {
    std::vector<std::size_t> train_rows;
    for (const auto& p : train_patients) train_rows.push_back(ctx.patient_index.at(p));
    const auto train_table = aligned.select_rows(train_rows);

    auto filtered = tabular::filter_columns(train_table, ctx.config.filter);
    ctx.notify(round, "filter", train_patients);
    for (auto removal : filtered.removed) {
        removal.column = with_prefix(prefix, removal.column);
        design.removed.push_back(std::move(removal));
    }
    const auto kept = filtered.table.column_names();
    if (kept.empty()) return;

    const auto coding = tabular::fit_categorical_coding(filtered.table);
    ctx.notify(round, "encode", train_patients);
    const auto coded_train = tabular::apply_categorical_coding(filtered.table, coding);
    const auto imputer = tabular::fit_mean_imputer(coded_train);
    ctx.notify(round, "impute", train_patients);

    const auto full = tabular::apply_mean_imputer(
        tabular::apply_categorical_coding(aligned.select_columns(kept), coding), imputer);
    for (const auto& col : full.columns()) {
        std::vector<double> values(sample_patient.size());
        for (std::size_t i = 0; i < sample_patient.size(); ++i) values[i] = *col.numeric[sample_patient[i]];
        columns.push_back(std::move(values));
        design.names.push_back(with_prefix(prefix, col.name));
    }
}

// Image block; samples without an image of this modality get the training mean.
void add_image_block(const Context& ctx, int round, dataset::Modality modality,
                     const std::vector<tabular::SampleStub>& samples, const std::vector<bool>& is_train,
                     const std::vector<std::string>& train_patients, std::vector<std::vector<double>>& columns,
                     Design& design) {
    const auto& table = modality == dataset::Modality::CT ? ctx.data.ct_features : ctx.data.mri_features;
    const auto names = dataset::feature_column_names(modality);
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<const std::vector<double>*> rows(samples.size(), nullptr);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& id = modality == dataset::Modality::CT ? samples[i].ct_id : samples[i].mri_id;
        if (!id) continue;
        auto it = table.find(*id);
        if (it == table.end()) raise(ErrorKind::Input, "no features for image " + *id);
        if (it->second.size() != names.size()) raise(ErrorKind::Schema, "feature width mismatch for image " + *id);
        rows[i] = &it->second;
    }
    for (std::size_t c = 0; c < names.size(); ++c) {
        std::vector<double> values(samples.size(), nan);
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!rows[i] || !std::isfinite((*rows[i])[c])) continue;
            values[i] = (*rows[i])[c];
            if (is_train[i]) {
                sum += values[i];
                ++n;
            }
        }
        const double fill = n > 0 ? sum / static_cast<double>(n) : 0.0;
        for (auto& v : values)
            if (std::isnan(v)) v = fill;
        columns.push_back(std::move(values));
        design.names.push_back(names[c]);
    }
    ctx.notify(round, "impute", train_patients);
}

int argmax(std::span<const double> row) {
    return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

PreparedData prepare(const Context& ctx, const dataset::ModalitySet& cell, std::span<const std::string> train,
                     std::span<const std::string> test, int round) {
    const std::set<std::string> train_set(train.begin(), train.end());
    const std::set<std::string> test_set(test.begin(), test.end());
    for (const auto& p : train_set) {
        if (test_set.count(p)) raise(ErrorKind::Split, "patient " + p + " is on both sides of the split");
    }
    for (const auto* side : {&train_set, &test_set}) {
        for (const auto& p : *side)
            if (!ctx.patient_index.count(p)) raise(ErrorKind::Input, "unknown or unlabelled patient " + p);
    }

    std::vector<tabular::SampleStub> samples;
    for (const auto& s : ctx.data.samples) {
        if (ctx.included(s, cell) && (train_set.count(s.patient_id) || test_set.count(s.patient_id))) samples.push_back(s);
    }
    std::vector<bool> is_train(samples.size());
    std::vector<std::size_t> sample_patient(samples.size());
    std::set<std::string> train_present;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        is_train[i] = train_set.count(samples[i].patient_id) > 0;
        sample_patient[i] = ctx.patient_index.at(samples[i].patient_id);
        if (is_train[i]) train_present.insert(samples[i].patient_id);
    }
    const std::vector<std::string> train_patients(train_present.begin(), train_present.end());
    if (train_patients.empty()) raise(ErrorKind::Input, "no training samples in cell " + cell.name());

    Design design;
    std::vector<std::vector<double>> columns;
    if (cell.ct) add_image_block(ctx, round, dataset::Modality::CT, samples, is_train, train_patients, columns, design);
    if (cell.mri) add_image_block(ctx, round, dataset::Modality::MRI, samples, is_train, train_patients, columns, design);
    if (cell.redcap) {
        add_tabular_block(ctx, round, ctx.redcap, "redcap", train_patients, sample_patient, columns, design);
    }
    if (cell.lab) add_tabular_block(ctx, round, ctx.lab, "lab", train_patients, sample_patient, columns, design);
    if (columns.empty()) raise(ErrorKind::Selection, "no usable feature columns in cell " + cell.name());

    PreparedData out;
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < samples.size(); ++i) (is_train[i] ? train_idx : test_idx).push_back(i);
    auto fill = [&](const std::vector<std::size_t>& idx, DenseMatrix& m, std::vector<int>& y,
                    std::vector<tabular::SampleStub>& stubs) {
        m = DenseMatrix(idx.size(), columns.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            for (std::size_t c = 0; c < columns.size(); ++c) m(r, c) = columns[c][idx[r]];
            y.push_back(ctx.data.labels[sample_patient[idx[r]]]);
            stubs.push_back(samples[idx[r]]);
        }
    };
    fill(train_idx, out.x_train, out.y_train, out.train_samples);
    fill(test_idx, out.x_test, out.y_test, out.test_samples);
    for (const auto& s : out.train_samples) out.train_groups.push_back(s.patient_id);
    out.feature_names = std::move(design.names);
    out.removed = std::move(design.removed);
    return out;
}

select::SelectionResult select_impl(const PreparedData& prepared, const CvConfig& config, int round) {
    const auto& names = prepared.feature_names;
    const auto scores = select::mi_scores(prepared.x_train, prepared.y_train, names, config.k_neighbors,
                                          derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(round)));
    if (names.size() >= 2) {
        select::RfecvOptions options;
        options.inner_folds = config.inner_folds;
        options.seed = derive_seed(config.seed, 2000 + static_cast<std::uint64_t>(round));
        options.params = config.params;
        options.groups = prepared.train_groups;
        return select::rfecv_select(prepared.x_train, prepared.y_train, scores, options);
    }
    select::SelectionResult result;
    result.ranking = select::rank_features(scores);
    result.chosen_indices = result.ranking;
    result.chosen = names;
    result.k = names.size();
    result.accuracy_by_k = {};
    result.scores = scores;
    return result;
}

std::vector<std::string> unique_patients(const std::vector<tabular::SampleStub>& samples) {
    std::set<std::string> ids;
    for (const auto& s : samples) ids.insert(s.patient_id);
    return {ids.begin(), ids.end()};
}

RoundReport run_round(const Context& ctx, const dataset::ModalitySet& cell, const SplitPlan& plan) {
    const auto& config = ctx.config;
    const int round = plan.round;
    const auto prepared = prepare(ctx, cell, plan.train, plan.test, round);
    const auto train_patients = unique_patients(prepared.train_samples);
    const auto& x_train = prepared.x_train;
    const auto& x_test = prepared.x_test;
    const auto& y_train = prepared.y_train;
    const auto& y_test = prepared.y_test;
    if (prepared.test_samples.empty()) raise(ErrorKind::Input, "no test samples in cell " + cell.name());

    RoundReport report;
    report.plan = plan;
    report.removed_columns = prepared.removed;
    report.selection = select_impl(prepared, config, round);
    ctx.notify(round, "select", train_patients);
    report.selected = report.selection.chosen;

    const auto& cols = report.selection.chosen_indices;
    auto trained = gbdt::train_booster(x_train.select_columns(cols), y_train, config.params, nullptr, kClasses);
    trained.booster.feature_names = report.selected;
    ctx.notify(round, "train", train_patients);

    const auto gains = gbdt::importance_gain(trained.booster);
    for (std::size_t j = 0; j < gains.size(); ++j) report.importance.emplace_back(report.selected[j], gains[j]);
    std::stable_sort(report.importance.begin(), report.importance.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    const auto proba = gbdt::predict_proba(trained.booster, x_test.select_columns(cols));
    for (std::size_t r = 0; r < prepared.test_samples.size(); ++r) {
        const auto row = proba.row(r);
        const auto& stub = prepared.test_samples[r];
        report.predictions.push_back({sample_id(stub), stub.patient_id, y_test[r], {row.begin(), row.end()}});
    }

    // Scoring units: samples, or patients with averaged probabilities.
    DenseMatrix scored;
    std::vector<int> truth;
    if (config.metric_level == MetricLevel::Sample) {
        scored = proba;
        truth = y_test;
    } else {
        std::map<std::string, std::pair<std::vector<double>, int>> acc;
        std::map<std::string, int> label;
        for (const auto& p : report.predictions) {
            auto& [sum, n] = acc[p.patient_id];
            if (sum.empty()) sum.assign(kClasses, 0.0);
            for (int k = 0; k < kClasses; ++k) sum[k] += p.proba[k];
            ++n;
            label[p.patient_id] = p.label;
        }
        scored = DenseMatrix(acc.size(), kClasses);
        std::size_t r = 0;
        for (const auto& [pid, entry] : acc) {
            for (int k = 0; k < kClasses; ++k) scored(r, k) = entry.first[k] / entry.second;
            truth.push_back(label[pid]);
            ++r;
        }
    }
    std::vector<int> predicted(truth.size());
    for (std::size_t r = 0; r < truth.size(); ++r) {
        predicted[r] = argmax(scored.row(r));
        ++report.confusion[truth[r]][predicted[r]];
    }
    report.accuracy = accuracy(predicted, truth);
    report.roc = roc_auc_ovr(scored, truth, config.auc_average);
    report.auc = report.roc.average;
    return report;
}

RoundReport run_round_tagged(const Context& ctx, const dataset::ModalitySet& cell, const SplitPlan& plan) {
    try {
        return run_round(ctx, cell, plan);
    } catch (const Error& e) {
        raise(e.kind(), "round " + std::to_string(plan.round) + ": " + e.detail());
    }
}

CVReport assemble(const dataset::ModalitySet& cell, std::vector<RoundReport> rounds) {
    CVReport report;
    report.modalities = cell;
    report.rounds = std::move(rounds);
    std::vector<double> accs, aucs;
    for (const auto& r : report.rounds) {
        accs.push_back(r.accuracy);
        aucs.push_back(r.auc);
    }
    report.acc = summarize(accs);
    report.auc = summarize(aucs);
    return report;
}

}  // namespace

SplitPlan patient_split(std::span<const std::string> patient_ids, std::span<const int> labels, int round,
                        std::uint64_t seed, bool stratified) {
    if (patient_ids.size() != labels.size()) raise(ErrorKind::Input, "patient ids and labels differ in length");
    const std::size_t total = patient_ids.size();
    if (total < 5) raise(ErrorKind::Split, "need at least 5 labelled patients, got " + std::to_string(total));
    {
        std::set<std::string> unique(patient_ids.begin(), patient_ids.end());
        if (unique.size() != total) raise(ErrorKind::Input, "duplicate patient id in split input");
    }

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return patient_ids[a] < patient_ids[b]; });
    int classes = 0;
    for (int label : labels) {
        if (label < 0) raise(ErrorKind::Input, "negative class label");
        classes = std::max(classes, label + 1);
    }
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
    for (auto i : order) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

    const std::size_t train_size = (4 * total + 4) / 5;
    const std::size_t test_size = total - train_size;

    for (int attempt = 0; attempt < kMaxSplitRetries; ++attempt) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
        std::mt19937_64 rng(s);
        std::vector<std::size_t> test;
        if (stratified) {
            std::vector<std::size_t> sizes;
            for (const auto& members : by_class) sizes.push_back(members.size());
            const auto quota = test_quotas(sizes, total, test_size);
            for (std::size_t c = 0; c < by_class.size(); ++c) {
                auto members = by_class[c];
                std::shuffle(members.begin(), members.end(), rng);
                test.insert(test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]));
            }
        } else {
            auto all = order;
            std::shuffle(all.begin(), all.end(), rng);
            test.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(test_size));
        }
        std::vector<bool> in_test(total, false);
        for (auto i : test) in_test[i] = true;

        SplitPlan plan;
        plan.round = round;
        plan.seed = s;
        std::vector<bool> class_in_train(by_class.size(), false);
        for (auto i : order) {
            if (in_test[i]) {
                plan.test.push_back(patient_ids[i]);
            } else {
                plan.train.push_back(patient_ids[i]);
                class_in_train[static_cast<std::size_t>(labels[i])] = true;
            }
        }
        bool complete = true;
        for (std::size_t c = 0; c < by_class.size(); ++c) complete = complete && (by_class[c].empty() || class_in_train[c]);
        if (complete) return plan;
    }
    raise(ErrorKind::Split, "no split keeps every class in train after " + std::to_string(kMaxSplitRetries) +
                                " attempts");
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) raise(ErrorKind::Input, "accuracy: length mismatch");
    if (truth.empty()) raise(ErrorKind::Input, "accuracy: no samples");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

RocResult roc_auc_ovr(const DenseMatrix& proba, std::span<const int> truth, AucAverage average) {
    if (proba.rows() != truth.size()) raise(ErrorKind::Input, "roc: row count differs from label count");
    const std::size_t classes = proba.cols();
    for (int t : truth) {
        if (t < 0 || static_cast<std::size_t>(t) >= classes) raise(ErrorKind::Input, "roc: label out of range");
    }
    for (std::size_t r = 0; r < proba.rows(); ++r)
        for (double v : proba.row(r))
            if (!std::isfinite(v)) raise(ErrorKind::Input, "roc: non-finite probability");

    RocResult out;
    out.auc.resize(classes);
    out.curves.resize(classes);
    std::vector<std::size_t> order(truth.size());
    double weighted_sum = 0.0, weight_total = 0.0, plain_sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        std::uint64_t pos = 0, neg = 0;
        for (int t : truth) (static_cast<std::size_t>(t) == k ? pos : neg) += 1;
        if (pos == 0 || neg == 0) {
            out.undefined_classes.push_back(static_cast<int>(k));
            continue;
        }
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return proba(a, k) > proba(b, k); });

        // Descending sweep over tie groups. Every positive in a group beats the
        // negatives seen later and ties the negatives inside the group.
        std::uint64_t tp = 0, fp = 0, twice_concordant = 0;
        auto& curve = out.curves[k];
        curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
        for (std::size_t i = 0; i < order.size();) {
            const double score = proba(order[i], k);
            std::uint64_t gp = 0, gn = 0;
            for (; i < order.size() && proba(order[i], k) == score; ++i) {
                (static_cast<std::size_t>(truth[order[i]]) == k ? gp : gn) += 1;
            }
            // Pairs (positive in group, negative strictly below or tied).
            twice_concordant += gp * (2 * (neg - fp - gn) + gn);
            tp += gp;
            fp += gn;
            curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                             static_cast<double>(tp) / static_cast<double>(pos), score});
        }
        const double auc = static_cast<double>(twice_concordant) / static_cast<double>(2 * pos * neg);
        out.auc[k] = auc;
        plain_sum += auc;
        weighted_sum += auc * static_cast<double>(pos);
        weight_total += static_cast<double>(pos);
        ++defined;
    }
    if (defined == 0) {
        out.average = std::numeric_limits<double>::quiet_NaN();
    } else if (average == AucAverage::Macro) {
        out.average = plain_sum / static_cast<double>(defined);
    } else {
        out.average = weighted_sum / weight_total;
    }
    return out;
}

Summary summarize(std::span<const double> values) {
    if (values.empty()) raise(ErrorKind::Input, "summarize: no values");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n)};
}

std::string sample_id(const tabular::SampleStub& stub) {
    return stub.patient_id + "/" + stub.ct_id.value_or("-") + "/" + stub.mri_id.value_or("-");
}

PreparedData prepare_features(const dataset::Dataset& data, const CvConfig& config, const dataset::ModalitySet& cell,
                              std::span<const std::string> train_patients,
                              std::span<const std::string> test_patients, int round) {
    validate(config);
    const Context ctx(data, config);
    return prepare(ctx, cell, train_patients, test_patients, round);
}

select::SelectionResult select_features(const PreparedData& prepared, const CvConfig& config, int round) {
    if (prepared.feature_names.empty()) raise(ErrorKind::Selection, "no features to select from");
    return select_impl(prepared, config, round);
}

std::vector<SplitPlan> make_plans(const dataset::Dataset& data, const CvConfig& config) {
    validate(config);
    std::vector<SplitPlan> plans;
    for (int r = 0; r < config.rounds; ++r) {
        plans.push_back(patient_split(data.patients, data.labels, r, derive_seed(config.seed, static_cast<std::uint64_t>(r)),
                                      config.stratified));
    }
    return plans;
}

CVReport cross_validate(const dataset::Dataset& data, const CvConfig& config) {
    const auto plans = make_plans(data, config);
    return cross_validate(data, config, plans);
}

CVReport cross_validate(const dataset::Dataset& data, const CvConfig& config, std::span<const SplitPlan> plans) {
    validate(config);
    const Context ctx(data, config);
    std::vector<RoundReport> rounds(plans.size());
    parallel_for(plans.size(), [&](std::size_t r) { rounds[r] = run_round_tagged(ctx, config.modalities, plans[r]); });
    return assemble(config.modalities, std::move(rounds));
}

std::vector<dataset::ModalitySet> ablation_cells() {
    const std::pair<bool, bool> images[] = {{true, false}, {false, true}, {true, true}, {false, false}};
    const std::pair<bool, bool> tabs[] = {{true, false}, {false, true}, {true, true}, {false, false}};
    std::vector<dataset::ModalitySet> cells;
    for (auto [ct, mri] : images) {
        for (auto [redcap, lab] : tabs) {
            dataset::ModalitySet m{ct, mri, redcap, lab};
            if (!m.empty()) cells.push_back(m);
        }
    }
    return cells;
}

std::vector<CVReport> ablation_grid(const dataset::Dataset& data, const CvConfig& config) {
    validate(config);
    const auto plans = make_plans(data, config);
    const auto cells = ablation_cells();
    const Context ctx(data, config);
    const std::size_t per_cell = plans.size();
    std::vector<RoundReport> flat(cells.size() * per_cell);
    parallel_for(flat.size(), [&](std::size_t i) {
        flat[i] = run_round_tagged(ctx, cells[i / per_cell], plans[i % per_cell]);
    });
    std::vector<CVReport> out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<RoundReport> rounds(std::make_move_iterator(flat.begin() + static_cast<std::ptrdiff_t>(c * per_cell)),
                                        std::make_move_iterator(flat.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_cell)));
        out.push_back(assemble(cells[c], std::move(rounds)));
    }
    return out;
}

}  // namespace hccstage::evaluate
