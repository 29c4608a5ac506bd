#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hccstage::tabular {

enum class ColumnKind { Numeric, Categorical };

/// One named variable. Exactly one of `numeric` / `text` is populated,
/// according to `kind`; `std::nullopt` marks a missing cell.
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    std::vector<std::optional<double>> numeric;
    std::vector<std::optional<std::string>> text;

    static Column make_numeric(std::string name, std::vector<std::optional<double>> values);
    static Column make_categorical(std::string name, std::vector<std::optional<std::string>> values);

    std::size_t size() const noexcept;
    bool is_missing(std::size_t row) const;
    std::size_t missing_count() const;
};

/// Column-oriented table keyed by patient id. Immutable once constructed;
/// the constructor enforces equal column lengths, non-empty patient ids and
/// unique column names.
class Table {
public:
    Table() = default;
    Table(std::vector<std::string> patient_ids, std::vector<Column> columns);

    const std::vector<std::string>& patient_ids() const noexcept { return patient_ids_; }
    const std::vector<Column>& columns() const noexcept { return columns_; }
    std::size_t rows() const noexcept { return patient_ids_.size(); }
    std::size_t cols() const noexcept { return columns_.size(); }

    std::optional<std::size_t> find(std::string_view name) const;
    const Column& column(std::string_view name) const;
    std::vector<std::string> column_names() const;

    Table select_rows(std::span<const std::size_t> rows) const;
    Table select_columns(std::span<const std::string> names) const;

private:
    std::vector<std::string> patient_ids_;
    std::vector<Column> columns_;
};

// ---------------------------------------------------------------------------
// Lab variable schema

struct ReferenceRange {
    std::optional<double> low;   // nullopt: open below
    std::optional<double> high;  // nullopt: open above
    std::string unit;

    bool contains(double value) const noexcept;
};

struct LabVariable {
    std::string name;  // CSV column name
    std::string definition;
    ReferenceRange range;
};

struct LabSchema {
    std::vector<LabVariable> variables;

    const LabVariable* find(std::string_view name) const noexcept;

    /// The 18 selected laboratory variables with their adult reference ranges.
    static const LabSchema& standard();
};

// ---------------------------------------------------------------------------
// Loading

/// Parses CSV text whose first column is `patient_id`. Empty cells are
/// missing; a column is numeric when every non-empty cell parses as a number.
/// With a schema, every schema variable present must be numeric and
/// non-negative.
Table parse_table(std::string_view csv_text, const LabSchema* schema = nullptr,
                  std::string_view source_name = "<memory>");
Table load_table(const std::filesystem::path& path, const LabSchema* schema = nullptr);

void write_table(const std::filesystem::path& path, const Table& table);

// ---------------------------------------------------------------------------
// Column filtering

struct FilterPolicy {
    double coverage_min = 0.80;       // drop when non-missing fraction < coverage_min
    double near_constant_max = 0.95;  // drop when modal frequency > near_constant_max
    std::vector<std::string> exclude_names;  // exact names, or prefixes ending in '*'
    std::vector<std::string> whitelist;      // exempt from the near-constant rule

    void validate() const;
};

enum class FilterReason { Excluded, Coverage, Constant, NearConstant };
std::string_view to_string(FilterReason reason) noexcept;

struct FilterRemoval {
    std::string column;
    FilterReason reason;
};

struct FilterResult {
    Table table;
    std::vector<FilterRemoval> removed;
};

FilterResult filter_columns(const Table& table, const FilterPolicy& policy);

// ---------------------------------------------------------------------------
// Categorical coding

/// Per categorical column, the distinct raw values in first-appearance order;
/// a value's code is its index.
struct CategoryCoding {
    std::vector<std::pair<std::string, std::vector<std::string>>> levels;

    const std::vector<std::string>* find(std::string_view column) const noexcept;
};

CategoryCoding fit_categorical_coding(const Table& table);
/// Values absent from the coding become missing.
Table apply_categorical_coding(const Table& table, const CategoryCoding& coding);

struct EncodedTable {
    Table table;
    CategoryCoding coding;
};
EncodedTable encode_categoricals(const Table& table);

// ---------------------------------------------------------------------------
// Mean imputation

struct ImputeReport {
    std::vector<std::pair<std::string, double>> means;  // value used per column
    std::vector<std::string> all_missing;               // columns filled with zeros
};

ImputeReport fit_mean_imputer(const Table& table);
Table apply_mean_imputer(const Table& table, const ImputeReport& report);

struct ImputedTable {
    Table table;
    ImputeReport report;
};
ImputedTable impute_mean(const Table& table);

// ---------------------------------------------------------------------------
// Stage labels

enum class RawTnmLabel { T0, T1, T2, T3, T4, TX, Null };

enum class StageClass : int { TxT0T1 = 0, T2 = 1, T3T4 = 2 };
inline constexpr int kNumStageClasses = 3;

RawTnmLabel parse_tnm_label(std::string_view text);
std::string_view to_string(RawTnmLabel label) noexcept;
std::string_view to_string(StageClass stage) noexcept;

std::optional<StageClass> merge_tnm_label(RawTnmLabel label) noexcept;
std::vector<std::optional<StageClass>> merge_tnm_labels(std::span<const RawTnmLabel> labels);

// ---------------------------------------------------------------------------
// Multimodal sample augmentation

struct PatientImages {
    std::string patient_id;
    std::vector<std::string> ct_ids;
    std::vector<std::string> mri_ids;
};

/// One CT x MRI pairing for a patient; an absent side means the patient has
/// no image of that modality.
struct SampleStub {
    std::string patient_id;
    std::optional<std::string> ct_id;
    std::optional<std::string> mri_id;
};

std::vector<SampleStub> augment_pairs(std::span<const PatientImages> patients);

struct MultimodalSample {
    std::string patient_id;
    std::optional<std::vector<double>> ct_features;
    std::optional<std::vector<double>> mri_features;
    std::vector<double> tabular_features;
    StageClass label = StageClass::TxT0T1;
};

}  // namespace hccstage::tabular
