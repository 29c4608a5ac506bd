#include "hccstage/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "hccstage/csv.hpp"
#include "hccstage/error.hpp"

namespace hccstage::tabular {

// ---------------------------------------------------------------------------
// Column / Table

Column Column::make_numeric(std::string name, std::vector<std::optional<double>> values) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Numeric;
    c.numeric = std::move(values);
    return c;
}

Column Column::make_categorical(std::string name, std::vector<std::optional<std::string>> values) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Categorical;
    c.text = std::move(values);
    return c;
}

std::size_t Column::size() const noexcept {
    return kind == ColumnKind::Numeric ? numeric.size() : text.size();
}

bool Column::is_missing(std::size_t row) const {
    return kind == ColumnKind::Numeric ? !numeric.at(row).has_value() : !text.at(row).has_value();
}

std::size_t Column::missing_count() const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < size(); ++r) n += is_missing(r) ? 1 : 0;
    return n;
}

Table::Table(std::vector<std::string> patient_ids, std::vector<Column> columns)
    : patient_ids_(std::move(patient_ids)), columns_(std::move(columns)) {
    for (std::size_t r = 0; r < patient_ids_.size(); ++r) {
        if (patient_ids_[r].empty()) raise(ErrorKind::Schema, "empty patient_id in row " + std::to_string(r + 1));
    }
    std::set<std::string_view> seen;
    for (const auto& c : columns_) {
        if (c.name.empty()) raise(ErrorKind::Schema, "empty column name");
        if (c.name == "patient_id") raise(ErrorKind::Schema, "patient_id used as a data column");
        if (!seen.insert(c.name).second) raise(ErrorKind::Schema, "duplicate column name '" + c.name + "'");
        if (c.size() != patient_ids_.size()) {
            raise(ErrorKind::Schema, "column '" + c.name + "' has " + std::to_string(c.size()) + " values for " +
                                         std::to_string(patient_ids_.size()) + " rows");
        }
        if (c.kind == ColumnKind::Numeric) {
            for (const auto& v : c.numeric) {
                if (v && !std::isfinite(*v)) raise(ErrorKind::Schema, "non-finite value in column '" + c.name + "'");
            }
        }
    }
}

std::optional<std::size_t> Table::find(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) return i;
    }
    return std::nullopt;
}

const Column& Table::column(std::string_view name) const {
    auto idx = find(name);
    if (!idx) raise(ErrorKind::Schema, "no column named '" + std::string(name) + "'");
    return columns_[*idx];
}

std::vector<std::string> Table::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const auto& c : columns_) names.push_back(c.name);
    return names;
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (auto r : rows) ids.push_back(patient_ids_.at(r));
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_) {
        Column out;
        out.name = c.name;
        out.kind = c.kind;
        if (c.kind == ColumnKind::Numeric) {
            out.numeric.reserve(rows.size());
            for (auto r : rows) out.numeric.push_back(c.numeric.at(r));
        } else {
            out.text.reserve(rows.size());
            for (auto r : rows) out.text.push_back(c.text.at(r));
        }
        cols.push_back(std::move(out));
    }
    return Table(std::move(ids), std::move(cols));
}

Table Table::select_columns(std::span<const std::string> names) const {
    std::vector<Column> cols;
    cols.reserve(names.size());
    for (const auto& n : names) cols.push_back(column(n));
    return Table(patient_ids_, std::move(cols));
}

// ---------------------------------------------------------------------------
// LabSchema

bool ReferenceRange::contains(double value) const noexcept {
    if (low && value < *low) return false;
    if (high && value > *high) return false;
    return true;
}

const LabVariable* LabSchema::find(std::string_view name) const noexcept {
    for (const auto& v : variables) {
        if (v.name == name) return &v;
    }
    return nullptr;
}

const LabSchema& LabSchema::standard() {
    static const LabSchema schema{{
        {"Hemoglobin", "Oxygen-transport protein of erythrocytes", {13.2, 16.7, "g/dL"}},
        {"Hematocrit", "Erythrocyte volume fraction of whole blood", {33.4, 46.2, "%"}},
        {"Creatinine", "Muscle metabolite cleared by the kidneys; renal marker", {0.7, 1.3, "mg/dL"}},
        {"Sodium", "Main extracellular cation", {136.0, 145.0, "mmol/L"}},
        {"ALT", "Alanine aminotransferase; hepatocellular injury marker", {7.0, 40.0, "U/L"}},
        {"GGT", "Gamma-glutamyl transferase; hepatobiliary enzyme", {0.0, 73.0, "U/L"}},
        {"CRP", "C-reactive protein; acute-phase inflammation marker", {0.0, 5.0, "mg/dL"}},
        {"TotalBilirubin", "Total heme breakdown pigment in serum", {0.2, 1.0, "mg/dL"}},
        {"ALP", "Alkaline phosphatase; cholestasis and bone marker", {40.0, 130.0, "U/L"}},
        {"AST", "Aspartate aminotransferase; liver and muscle injury marker", {13.0, 40.0, "U/L"}},
        {"INR", "Prothrombin time normalised to a reference; coagulation", {0.9, 1.15, "ratio"}},
        {"Albumin", "Dominant plasma protein; hepatic synthetic function", {35.0, 48.0, "g/L"}},
        {"Cholesterol", "Serum total cholesterol", {std::nullopt, 200.0, "mg/dL"}},
        {"Triglycerides", "Serum triglyceride lipids", {std::nullopt, 150.0, "mg/dL"}},
        // Non-diabetic band; 5.7-6.4 is pre-diabetic and >6.5 diabetic.
        {"HbA1c", "Glycated haemoglobin; long-term glycaemia", {4.0, 5.6, "%"}},
        {"AFP", "Alpha-fetoprotein; tumour marker in liver cancer", {0.0, 8.1, "ng/mL"}},
        {"DirectBilirubin", "Conjugated bilirubin fraction", {0.0, 0.3, "mg/dL"}},
        {"Ferritin", "Iron storage protein", {26.0, 388.0, "ng/mL"}},
    }};
    return schema;
}

// ---------------------------------------------------------------------------
// Loading

Table parse_table(std::string_view csv_text, const LabSchema* schema, std::string_view source_name) {
    auto doc = csv::parse(csv_text, source_name);
    const std::string source(source_name);
    if (doc.header.empty() || doc.header.front() != "patient_id") {
        raise(ErrorKind::Schema, source + ": first column must be 'patient_id'");
    }
    {
        std::set<std::string_view> seen;
        for (const auto& h : doc.header) {
            if (!seen.insert(h).second) raise(ErrorKind::Schema, source + ": duplicate column name '" + h + "'");
        }
    }

    std::vector<std::string> ids;
    ids.reserve(doc.rows.size());
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        if (doc.rows[r].front().empty()) {
            raise(ErrorKind::Schema, source + ": empty patient_id in row " + std::to_string(r + 1));
        }
        ids.push_back(doc.rows[r].front());
    }

    std::vector<Column> columns;
    for (std::size_t c = 1; c < doc.header.size(); ++c) {
        const auto& name = doc.header[c];
        bool numeric = true;
        std::vector<std::optional<double>> nums(doc.rows.size());
        for (std::size_t r = 0; r < doc.rows.size() && numeric; ++r) {
            const auto& cell = doc.rows[r][c];
            if (cell.empty()) continue;
            double v = 0.0;
            if (csv::parse_double(cell, v)) {
                nums[r] = v;
            } else {
                numeric = false;
            }
        }

        const LabVariable* lab = schema ? schema->find(name) : nullptr;
        if (lab) {
            if (!numeric) raise(ErrorKind::Schema, source + ": lab variable '" + name + "' is not numeric");
            for (std::size_t r = 0; r < nums.size(); ++r) {
                if (nums[r] && *nums[r] < 0.0) {
                    raise(ErrorKind::Schema, source + ": negative " + name + " (" + lab->range.unit + ") in row " +
                                                 std::to_string(r + 1));
                }
            }
        }

        if (numeric) {
            columns.push_back(Column::make_numeric(name, std::move(nums)));
        } else {
            std::vector<std::optional<std::string>> text(doc.rows.size());
            for (std::size_t r = 0; r < doc.rows.size(); ++r) {
                if (!doc.rows[r][c].empty()) text[r] = doc.rows[r][c];
            }
            columns.push_back(Column::make_categorical(name, std::move(text)));
        }
    }
    return Table(std::move(ids), std::move(columns));
}

Table load_table(const std::filesystem::path& path, const LabSchema* schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_table(text, schema, path.string());
}

void write_table(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
    csv::Row header{"patient_id"};
    for (const auto& c : table.columns()) header.push_back(c.name);
    csv::write_row(out, header);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        csv::Row row{table.patient_ids()[r]};
        for (const auto& c : table.columns()) {
            if (c.kind == ColumnKind::Numeric) {
                row.push_back(c.numeric[r] ? csv::format_double(*c.numeric[r]) : std::string{});
            } else {
                row.push_back(c.text[r].value_or(std::string{}));
            }
        }
        csv::write_row(out, row);
    }
}

// ---------------------------------------------------------------------------
// Filtering

void FilterPolicy::validate() const {
    auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!in_unit(coverage_min)) raise(ErrorKind::Config, "coverage_min must lie in (0, 1]");
    if (!in_unit(near_constant_max)) raise(ErrorKind::Config, "near_constant_max must lie in (0, 1]");
}

std::string_view to_string(FilterReason reason) noexcept {
    switch (reason) {
        case FilterReason::Excluded: return "excluded";
        case FilterReason::Coverage: return "coverage";
        case FilterReason::Constant: return "constant";
        case FilterReason::NearConstant: return "near_constant";
    }
    return "unknown";
}

namespace {

bool name_matches(std::string_view name, std::string_view pattern) {
    if (!pattern.empty() && pattern.back() == '*') {
        pattern.remove_suffix(1);
        return name.substr(0, pattern.size()) == pattern;
    }
    return name == pattern;
}

// Count of the most frequent non-missing value and of distinct values.
std::pair<std::size_t, std::size_t> modal_stats(const Column& c) {
    std::size_t best = 0;
    std::size_t distinct = 0;
    if (c.kind == ColumnKind::Numeric) {
        std::map<double, std::size_t> counts;
        for (const auto& v : c.numeric) {
            if (v) best = std::max(best, ++counts[*v]);
        }
        distinct = counts.size();
    } else {
        std::map<std::string_view, std::size_t> counts;
        for (const auto& v : c.text) {
            if (v) best = std::max(best, ++counts[*v]);
        }
        distinct = counts.size();
    }
    return {best, distinct};
}

}  // namespace

FilterResult filter_columns(const Table& table, const FilterPolicy& policy) {
    policy.validate();
    FilterResult result;
    std::vector<std::string> kept;
    const double rows = static_cast<double>(table.rows());

    for (const auto& c : table.columns()) {
        auto matches = [&](const std::vector<std::string>& patterns) {
            return std::any_of(patterns.begin(), patterns.end(),
                               [&](const std::string& p) { return name_matches(c.name, p); });
        };
        if (matches(policy.exclude_names)) {
            result.removed.push_back({c.name, FilterReason::Excluded});
            continue;
        }
        const std::size_t present = c.size() - c.missing_count();
        if (table.rows() == 0 || static_cast<double>(present) / rows < policy.coverage_min) {
            result.removed.push_back({c.name, FilterReason::Coverage});
            continue;
        }
        auto [modal, distinct] = modal_stats(c);
        if (distinct <= 1) {
            result.removed.push_back({c.name, FilterReason::Constant});
            continue;
        }
        if (static_cast<double>(modal) / static_cast<double>(present) > policy.near_constant_max &&
            !matches(policy.whitelist)) {
            result.removed.push_back({c.name, FilterReason::NearConstant});
            continue;
        }
        kept.push_back(c.name);
    }
    result.table = table.select_columns(kept);
    return result;
}

// ---------------------------------------------------------------------------
// Categorical coding

const std::vector<std::string>* CategoryCoding::find(std::string_view column) const noexcept {
    for (const auto& [name, values] : levels) {
        if (name == column) return &values;
    }
    return nullptr;
}

CategoryCoding fit_categorical_coding(const Table& table) {
    CategoryCoding coding;
    for (const auto& c : table.columns()) {
        if (c.kind != ColumnKind::Categorical) continue;
        std::vector<std::string> order;
        std::set<std::string_view> seen;
        for (const auto& v : c.text) {
            if (v && seen.insert(*v).second) order.push_back(*v);
        }
        coding.levels.emplace_back(c.name, std::move(order));
    }
    return coding;
}

Table apply_categorical_coding(const Table& table, const CategoryCoding& coding) {
    std::vector<Column> cols;
    cols.reserve(table.cols());
    for (const auto& c : table.columns()) {
        if (c.kind == ColumnKind::Numeric) {
            cols.push_back(c);
            continue;
        }
        std::unordered_map<std::string_view, double> codes;
        if (const auto* levels = coding.find(c.name)) {
            for (std::size_t i = 0; i < levels->size(); ++i) codes.emplace((*levels)[i], static_cast<double>(i));
        }
        std::vector<std::optional<double>> values(c.text.size());
        for (std::size_t r = 0; r < c.text.size(); ++r) {
            if (!c.text[r]) continue;
            if (auto it = codes.find(*c.text[r]); it != codes.end()) values[r] = it->second;
        }
        cols.push_back(Column::make_numeric(c.name, std::move(values)));
    }
    return Table(table.patient_ids(), std::move(cols));
}

EncodedTable encode_categoricals(const Table& table) {
    auto coding = fit_categorical_coding(table);
    auto encoded = apply_categorical_coding(table, coding);
    return {std::move(encoded), std::move(coding)};
}

// ---------------------------------------------------------------------------
// Imputation

ImputeReport fit_mean_imputer(const Table& table) {
    ImputeReport report;
    for (const auto& c : table.columns()) {
        if (c.kind != ColumnKind::Numeric) {
            raise(ErrorKind::Input, "impute_mean needs numeric columns; encode '" + c.name + "' first");
        }
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& v : c.numeric) {
            if (v) {
                sum += *v;
                ++n;
            }
        }
        if (n == 0) {
            report.means.emplace_back(c.name, 0.0);
            report.all_missing.push_back(c.name);
        } else {
            report.means.emplace_back(c.name, sum / static_cast<double>(n));
        }
    }
    return report;
}

Table apply_mean_imputer(const Table& table, const ImputeReport& report) {
    std::vector<Column> cols;
    cols.reserve(table.cols());
    for (const auto& c : table.columns()) {
        if (c.kind != ColumnKind::Numeric) {
            raise(ErrorKind::Input, "impute_mean needs numeric columns; encode '" + c.name + "' first");
        }
        auto it = std::find_if(report.means.begin(), report.means.end(),
                               [&](const auto& m) { return m.first == c.name; });
        if (it == report.means.end()) raise(ErrorKind::Input, "no imputation statistic for '" + c.name + "'");
        Column out = c;
        for (auto& v : out.numeric) {
            if (!v) v = it->second;
        }
        cols.push_back(std::move(out));
    }
    return Table(table.patient_ids(), std::move(cols));
}

ImputedTable impute_mean(const Table& table) {
    auto report = fit_mean_imputer(table);
    auto filled = apply_mean_imputer(table, report);
    return {std::move(filled), std::move(report)};
}

// ---------------------------------------------------------------------------
// Labels

RawTnmLabel parse_tnm_label(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (text == "T0") return RawTnmLabel::T0;
    if (text == "T1") return RawTnmLabel::T1;
    if (text == "T2") return RawTnmLabel::T2;
    if (text == "T3") return RawTnmLabel::T3;
    if (text == "T4") return RawTnmLabel::T4;
    if (text == "TX" || text == "Tx") return RawTnmLabel::TX;
    if (text.empty() || text == "Null" || text == "NULL" || text == "NA") return RawTnmLabel::Null;
    raise(ErrorKind::Parse, "unknown T-stage label '" + std::string(text) + "'");
}

std::string_view to_string(RawTnmLabel label) noexcept {
    switch (label) {
        case RawTnmLabel::T0: return "T0";
        case RawTnmLabel::T1: return "T1";
        case RawTnmLabel::T2: return "T2";
        case RawTnmLabel::T3: return "T3";
        case RawTnmLabel::T4: return "T4";
        case RawTnmLabel::TX: return "TX";
        case RawTnmLabel::Null: return "Null";
    }
    return "Null";
}

std::string_view to_string(StageClass stage) noexcept {
    switch (stage) {
        case StageClass::TxT0T1: return "TX/T0/T1";
        case StageClass::T2: return "T2";
        case StageClass::T3T4: return "T3/T4";
    }
    return "?";
}

std::optional<StageClass> merge_tnm_label(RawTnmLabel label) noexcept {
    switch (label) {
        case RawTnmLabel::T0:
        case RawTnmLabel::T1:
        case RawTnmLabel::TX: return StageClass::TxT0T1;
        case RawTnmLabel::T2: return StageClass::T2;
        case RawTnmLabel::T3:
        case RawTnmLabel::T4: return StageClass::T3T4;
        case RawTnmLabel::Null: return std::nullopt;
    }
    return std::nullopt;
}

std::vector<std::optional<StageClass>> merge_tnm_labels(std::span<const RawTnmLabel> labels) {
    std::vector<std::optional<StageClass>> out;
    out.reserve(labels.size());
    for (auto l : labels) out.push_back(merge_tnm_label(l));
    return out;
}

// ---------------------------------------------------------------------------
// Augmentation

std::vector<SampleStub> augment_pairs(std::span<const PatientImages> patients) {
    std::vector<SampleStub> out;
    for (const auto& p : patients) {
        std::vector<std::optional<std::string>> cts(p.ct_ids.begin(), p.ct_ids.end());
        std::vector<std::optional<std::string>> mris(p.mri_ids.begin(), p.mri_ids.end());
        if (cts.empty()) cts.emplace_back();
        if (mris.empty()) mris.emplace_back();
        for (const auto& ct : cts) {
            for (const auto& mri : mris) out.push_back({p.patient_id, ct, mri});
        }
    }
    return out;
}

}  // namespace hccstage::tabular
