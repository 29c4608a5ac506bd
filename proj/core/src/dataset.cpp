#include "hccstage/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "hccstage/csv.hpp"
#include "hccstage/error.hpp"

namespace hccstage::dataset {

namespace fs = std::filesystem;

std::string ModalitySet::image_name() const {
    if (ct && mri) return "CT+MRI";
    if (ct) return "CT";
    if (mri) return "MRI";
    return "Null";
}

std::string ModalitySet::tabular_name() const {
    if (redcap && lab) return "Redcap+Lab";
    if (redcap) return "Redcap";
    if (lab) return "Lab";
    return "Null";
}

std::string ModalitySet::name() const {
    std::string img = ct && mri ? "ct+mri" : ct ? "ct" : mri ? "mri" : "null";
    std::string tab = redcap && lab ? "redcap+lab" : redcap ? "redcap" : lab ? "lab" : "null";
    return img + "|" + tab;
}

ModalitySet ModalitySet::parse(std::string_view list) {
    ModalitySet m;
    std::size_t start = 0;
    while (start <= list.size()) {
        auto end = list.find(',', start);
        if (end == std::string_view::npos) end = list.size();
        auto item = list.substr(start, end - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (item == "ct") {
            m.ct = true;
        } else if (item == "mri") {
            m.mri = true;
        } else if (item == "redcap") {
            m.redcap = true;
        } else if (item == "lab") {
            m.lab = true;
        } else if (!item.empty()) {
            raise(ErrorKind::Config, "unknown modality '" + std::string(item) + "'");
        }
        start = end + 1;
    }
    if (m.empty()) raise(ErrorKind::Config, "modality list selects nothing");
    return m;
}

std::string_view to_string(Modality m) noexcept { return m == Modality::CT ? "ct" : "mri"; }

namespace {

std::size_t column_index(const csv::Document& doc, std::string_view name, const fs::path& path) {
    auto it = std::find(doc.header.begin(), doc.header.end(), name);
    if (it == doc.header.end()) raise(ErrorKind::Schema, path.string() + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - doc.header.begin());
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

std::vector<ImageRecord> load_image_manifest(const fs::path& path) {
    const auto doc = csv::read_file(path);
    const auto base = path.parent_path();
    const auto c_id = column_index(doc, "image_id", path);
    const auto c_pid = column_index(doc, "patient_id", path);
    const auto c_mod = column_index(doc, "modality", path);
    const auto c_phase = column_index(doc, "phase", path);
    const auto c_vh = column_index(doc, "volume_header", path);
    const auto c_vr = column_index(doc, "volume_raw", path);
    const auto c_mh = column_index(doc, "mask_header", path);
    const auto c_mr = column_index(doc, "mask_raw", path);
    std::vector<ImageRecord> out;
    std::set<std::string> ids;
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        const auto& row = doc.rows[r];
        ImageRecord rec;
        rec.image_id = row[c_id];
        rec.patient_id = row[c_pid];
        if (rec.image_id.empty() || rec.patient_id.empty()) {
            raise(ErrorKind::Schema, path.string() + ": empty id in row " + std::to_string(r + 1));
        }
        if (!ids.insert(rec.image_id).second) raise(ErrorKind::Schema, path.string() + ": duplicate image_id " + rec.image_id);
        if (row[c_mod] == "ct") {
            rec.modality = Modality::CT;
        } else if (row[c_mod] == "mri") {
            rec.modality = Modality::MRI;
        } else {
            raise(ErrorKind::Schema, path.string() + ": unknown modality '" + row[c_mod] + "'");
        }
        rec.phase = row[c_phase];
        rec.volume_header = resolve(base, row[c_vh]);
        rec.volume_raw = resolve(base, row[c_vr]);
        rec.mask_header = resolve(base, row[c_mh]);
        rec.mask_raw = resolve(base, row[c_mr]);
        out.push_back(std::move(rec));
    }
    return out;
}

void write_image_manifest(const fs::path& path, const std::vector<ImageRecord>& images) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
    const auto base = path.parent_path();
    auto rel = [&](const fs::path& p) { return p.lexically_relative(base).generic_string(); };
    csv::write_row(out, {"image_id", "patient_id", "modality", "phase", "volume_header", "volume_raw", "mask_header",
                         "mask_raw"});
    for (const auto& im : images) {
        csv::write_row(out, {im.image_id, im.patient_id, std::string(to_string(im.modality)), im.phase,
                             rel(im.volume_header), rel(im.volume_raw), rel(im.mask_header), rel(im.mask_raw)});
    }
}

std::vector<std::pair<std::string, tabular::RawTnmLabel>> load_labels(const fs::path& path) {
    const auto doc = csv::read_file(path);
    const auto c_pid = column_index(doc, "patient_id", path);
    const auto c_stage = column_index(doc, "t_stage", path);
    std::vector<std::pair<std::string, tabular::RawTnmLabel>> out;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        const auto& pid = doc.rows[r][c_pid];
        if (pid.empty()) raise(ErrorKind::Schema, path.string() + ": empty patient_id in row " + std::to_string(r + 1));
        if (!seen.insert(pid).second) raise(ErrorKind::Schema, path.string() + ": duplicate patient " + pid);
        out.emplace_back(pid, tabular::parse_tnm_label(doc.rows[r][c_stage]));
    }
    return out;
}

std::vector<std::string> feature_column_names(Modality modality) {
    std::vector<std::string> out;
    for (const auto& f : radiomics::feature_manifest()) out.push_back(std::string(to_string(modality)) + "_" + f.name);
    return out;
}

void write_feature_csv(const fs::path& path, Modality modality, const std::vector<radiomics::FeatureVector>& vectors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
    csv::Row header{"sample_id"};
    for (auto& n : feature_column_names(modality)) header.push_back(std::move(n));
    csv::write_row(out, header);
    for (const auto& v : vectors) {
        csv::Row row{v.sample_id};
        for (double x : v.values) row.push_back(csv::format_double(x));
        csv::write_row(out, row);
    }
}

FeatureTable load_feature_csv(const fs::path& path, Modality modality) {
    const auto doc = csv::read_file(path);
    const auto expected = feature_column_names(modality);
    if (doc.header.size() != expected.size() + 1 || doc.header.front() != "sample_id" ||
        !std::equal(expected.begin(), expected.end(), doc.header.begin() + 1)) {
        raise(ErrorKind::Schema, path.string() + ": columns do not match the feature manifest");
    }
    FeatureTable out;
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        std::vector<double> values(expected.size());
        for (std::size_t c = 0; c < expected.size(); ++c) {
            if (!csv::parse_double(doc.rows[r][c + 1], values[c])) {
                raise(ErrorKind::Parse, path.string() + ": bad number in row " + std::to_string(r + 1));
            }
        }
        if (!out.emplace(doc.rows[r][0], std::move(values)).second) {
            raise(ErrorKind::Schema, path.string() + ": duplicate sample_id " + doc.rows[r][0]);
        }
    }
    return out;
}

int Dataset::label_of(std::string_view patient_id) const {
    auto it = std::lower_bound(patients.begin(), patients.end(), patient_id);
    if (it == patients.end() || *it != patient_id) raise(ErrorKind::Input, "unknown patient " + std::string(patient_id));
    return labels[static_cast<std::size_t>(it - patients.begin())];
}

Dataset build_dataset(const std::vector<std::pair<std::string, tabular::RawTnmLabel>>& labels, tabular::Table redcap,
                      tabular::Table lab, const std::vector<ImageRecord>& images, FeatureTable ct_features,
                      FeatureTable mri_features) {
    Dataset ds;
    std::vector<std::pair<std::string, int>> labelled;
    for (const auto& [pid, raw] : labels) {
        if (auto stage = tabular::merge_tnm_label(raw)) labelled.emplace_back(pid, static_cast<int>(*stage));
    }
    std::sort(labelled.begin(), labelled.end());
    for (auto& [pid, y] : labelled) {
        ds.patients.push_back(pid);
        ds.labels.push_back(y);
    }

    std::map<std::string, tabular::PatientImages> by_patient;
    for (const auto& pid : ds.patients) by_patient[pid].patient_id = pid;
    for (const auto& im : images) {
        auto it = by_patient.find(im.patient_id);
        if (it == by_patient.end()) continue;
        if (im.modality == Modality::CT && ct_features.count(im.image_id)) it->second.ct_ids.push_back(im.image_id);
        if (im.modality == Modality::MRI && mri_features.count(im.image_id)) it->second.mri_ids.push_back(im.image_id);
    }
    std::vector<tabular::PatientImages> patients;
    for (auto& [pid, p] : by_patient) patients.push_back(std::move(p));
    ds.samples = tabular::augment_pairs(patients);

    ds.redcap = std::move(redcap);
    ds.lab = std::move(lab);
    ds.ct_features = std::move(ct_features);
    ds.mri_features = std::move(mri_features);
    return ds;
}

}  // namespace hccstage::dataset
