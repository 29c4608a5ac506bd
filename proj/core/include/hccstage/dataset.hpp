#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hccstage/radiomics.hpp"
#include "hccstage/tabular.hpp"

namespace hccstage::dataset {

/// Which data blocks feed a model.
struct ModalitySet {
    bool ct = false;
    bool mri = false;
    bool redcap = false;
    bool lab = false;

    bool any_image() const noexcept { return ct || mri; }
    bool any_tabular() const noexcept { return redcap || lab; }
    bool empty() const noexcept { return !any_image() && !any_tabular(); }

    /// e.g. "ct+mri|redcap+lab"; "null" for an absent side.
    std::string name() const;
    std::string image_name() const;    // "CT", "MRI", "CT+MRI", "Null"
    std::string tabular_name() const;  // "Redcap", "Lab", "Redcap+Lab", "Null"

    static ModalitySet all() noexcept { return {true, true, true, true}; }
    /// Comma-separated subset of {ct, mri, redcap, lab}.
    static ModalitySet parse(std::string_view list);

    friend bool operator==(const ModalitySet&, const ModalitySet&) = default;
};

enum class Modality { CT, MRI };
std::string_view to_string(Modality m) noexcept;

/// One row of the image manifest CSV.
struct ImageRecord {
    std::string image_id;
    std::string patient_id;
    Modality modality = Modality::CT;
    std::string phase;
    std::filesystem::path volume_header, volume_raw, mask_header, mask_raw;
};

/// Columns: image_id,patient_id,modality,phase,volume_header,volume_raw,mask_header,mask_raw.
/// Relative paths resolve against the manifest's directory.
std::vector<ImageRecord> load_image_manifest(const std::filesystem::path& path);
void write_image_manifest(const std::filesystem::path& path, const std::vector<ImageRecord>& images);

/// Columns: patient_id,t_stage with raw labels (T0..T4, TX, Null).
std::vector<std::pair<std::string, tabular::RawTnmLabel>> load_labels(const std::filesystem::path& path);

/// Radiomics table: sample_id + one column per manifest feature, prefixed.
using FeatureTable = std::map<std::string, std::vector<double>>;
void write_feature_csv(const std::filesystem::path& path, Modality modality,
                       const std::vector<radiomics::FeatureVector>& vectors);
FeatureTable load_feature_csv(const std::filesystem::path& path, Modality modality);
std::vector<std::string> feature_column_names(Modality modality);

/// Everything a cross-validation run needs, restricted to labelled patients.
struct Dataset {
    std::vector<std::string> patients;  // labelled, sorted
    std::vector<int> labels;            // StageClass codes, aligned with patients
    tabular::Table redcap;              // rows may be missing for some patients
    tabular::Table lab;
    std::vector<tabular::SampleStub> samples;  // CT x MRI augmentation
    FeatureTable ct_features;                  // by image id
    FeatureTable mri_features;

    int label_of(std::string_view patient_id) const;
};

Dataset build_dataset(const std::vector<std::pair<std::string, tabular::RawTnmLabel>>& labels,
                      tabular::Table redcap, tabular::Table lab, const std::vector<ImageRecord>& images,
                      FeatureTable ct_features, FeatureTable mri_features);

}  // namespace hccstage::dataset
