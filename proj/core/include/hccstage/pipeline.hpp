#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hccstage/cohortgen.hpp"
#include "hccstage/dataset.hpp"
#include "hccstage/evaluate.hpp"
#include "hccstage/radiomics.hpp"

namespace hccstage::pipeline {

struct Paths {
    std::filesystem::path images;  // image manifest CSV (volume + mask per image)
    std::filesystem::path redcap;
    std::filesystem::path lab;
    std::filesystem::path labels;
    std::filesystem::path output;
};

/// Everything a run needs. Relative paths in the JSON resolve against the
/// config file's directory.
struct RunConfig {
    Paths paths;
    std::uint64_t seed = 0;
    radiomics::ExtractionParams extraction;
    std::string phase;  // empty: all phases
    evaluate::CvConfig cv;  // cv.modalities holds the use_* flags; cv.seed mirrors seed
    unsigned threads = 0;

    /// Inputs must exist; parameters must be valid. Throws Config errors.
    void validate() const;
};

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical JSON with absolute paths; archived into the output directory.
std::string to_json(const RunConfig& config);

struct ExtractionFailure {
    std::string image_id;
    std::string message;
};

struct ExtractReport {
    std::size_t images = 0;
    std::size_t extracted = 0;
    std::vector<ExtractionFailure> failures;
    std::filesystem::path ct_features, mri_features, failure_report;
};

/// volumes + radiomics over every listed image; failures are recorded and
/// the remaining images still run.
ExtractReport run_extract(const RunConfig& config);

/// Reads tables, labels and the feature CSVs written by run_extract.
dataset::Dataset load_dataset(const RunConfig& config);

/// Whole-cohort selection for the configured modalities (selection.json).
select::SelectionResult run_select(const RunConfig& config);

/// Whole-cohort model on the selected features (model.json).
gbdt::Booster run_train(const RunConfig& config);

struct EvaluateResult {
    std::vector<evaluate::CVReport> reports;  // one, or the 15 grid cells
};

/// Cross-validation (or the ablation grid) with all report files written.
EvaluateResult run_evaluate(const RunConfig& config, bool grid);

struct PipelineResult {
    ExtractReport extract;
    EvaluateResult evaluate;
};

PipelineResult run_pipeline(const RunConfig& config, bool grid);

/// Directory name used for a grid cell, e.g. "ct+mri_redcap+lab".
std::string cell_slug(const dataset::ModalitySet& cell);

/// Image rows x tabular columns, "acc ± std / auc ± std" per filled cell.
std::string summary_table(const std::vector<evaluate::CVReport>& reports);

/// metrics.json body for a set of reports.
std::string metrics_json(const std::vector<evaluate::CVReport>& reports, const RunConfig& config);

/// Hashes every file under the output directory into run_manifest.json.
std::filesystem::path write_run_manifest(const RunConfig& config);

/// Cohort spec from JSON; keys mirror CohortSpec fields, all optional.
cohortgen::CohortSpec parse_cohort_spec(std::string_view json_text);

/// Run config pointing at a generated cohort, output in `<root>/run`.
std::filesystem::path write_cohort_run_config(const cohortgen::GeneratedCohort& cohort, std::uint64_t seed);

}  // namespace hccstage::pipeline
