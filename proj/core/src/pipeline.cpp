#include "hccstage/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <cctype>
#include <cmath>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "hccstage/csv.hpp"
#include "hccstage/error.hpp"
#include "hccstage/hash.hpp"
#include "hccstage/parallel.hpp"
#include "hccstage/volumes.hpp"

namespace hccstage::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kMetricsFile = "metrics.json";
const char* kRunManifestFile = "run_manifest.json";

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) raise(ErrorKind::Config, where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
            raise(ErrorKind::Config, "unknown key '" + key + "' in " + where);
        }
    }
}

template <class T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        raise(ErrorKind::Config, where + "." + key + " has the wrong type");
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::string rel_to(const fs::path& p, const fs::path& base) {
    if (p.empty()) return {};
    auto r = fs::absolute(p).lexically_normal().lexically_relative(fs::absolute(base).lexically_normal());
    return r.empty() ? p.generic_string() : r.generic_string();
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<dataset::ImageRecord> phase_images(const RunConfig& config) {
    auto images = dataset::load_image_manifest(config.paths.images);
    if (!config.phase.empty()) {
        std::erase_if(images, [&](const dataset::ImageRecord& r) { return r.phase != config.phase; });
    }
    return images;
}

fs::path ct_features_path(const RunConfig& c) { return c.paths.output / "features_ct.csv"; }
fs::path mri_features_path(const RunConfig& c) { return c.paths.output / "features_mri.csv"; }

json summary_json(const evaluate::Summary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

json modality_list(const dataset::ModalitySet& m) {
    json out = json::array();
    if (m.ct) out.push_back("ct");
    if (m.mri) out.push_back("mri");
    if (m.redcap) out.push_back("redcap");
    if (m.lab) out.push_back("lab");
    return out;
}

std::string fixed2(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::size_t display_width(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

void write_round_files(const fs::path& dir, const evaluate::RoundReport& r) {
    const auto round = std::to_string(r.plan.round);
    for (std::size_t k = 0; k < r.roc.curves.size(); ++k) {
        if (!r.roc.auc[k]) continue;
        auto out = open_out(dir / ("roc_class" + std::to_string(k) + "_round" + round + ".csv"));
        csv::write_row(out, {"fpr", "tpr", "threshold"});
        for (const auto& p : r.roc.curves[k]) {
            csv::write_row(out, {csv::format_double(p.fpr), csv::format_double(p.tpr), csv::format_double(p.threshold)});
        }
    }
    {
        auto out = open_out(dir / ("proba_round" + round + ".csv"));
        csv::Row header{"sample_id", "patient_id", "label"};
        const std::size_t classes = r.predictions.empty() ? 0 : r.predictions.front().proba.size();
        for (std::size_t k = 0; k < classes; ++k) header.push_back("p" + std::to_string(k));
        header.push_back("predicted");
        csv::write_row(out, header);
        for (const auto& p : r.predictions) {
            csv::Row row{p.sample_id, p.patient_id, std::to_string(p.label)};
            for (double v : p.proba) row.push_back(csv::format_double(v));
            row.push_back(std::to_string(std::max_element(p.proba.begin(), p.proba.end()) - p.proba.begin()));
            csv::write_row(out, row);
        }
    }
    {
        auto out = open_out(dir / ("importance_round" + round + ".csv"));
        csv::write_row(out, {"feature", "gain"});
        for (const auto& [name, gain] : r.importance) csv::write_row(out, {name, csv::format_double(gain)});
    }
    write_text(dir / ("selection_round" + round + ".json"), select::to_json(r.selection) + "\n");
    {
        auto out = open_out(dir / ("split_round" + round + ".csv"));
        csv::write_row(out, {"patient_id", "side"});
        for (const auto& p : r.plan.train) csv::write_row(out, {p, "train"});
        for (const auto& p : r.plan.test) csv::write_row(out, {p, "test"});
    }
}

}  // namespace

void RunConfig::validate() const {
    if (paths.output.empty()) raise(ErrorKind::Config, "paths.output is required");
    const std::pair<const char*, const fs::path*> inputs[] = {
        {"paths.images", &paths.images}, {"paths.redcap", &paths.redcap}, {"paths.lab", &paths.lab},
        {"paths.labels", &paths.labels}};
    for (const auto& [name, path] : inputs) {
        if (path->empty()) raise(ErrorKind::Config, std::string(name) + " is required");
        if (!fs::exists(*path)) raise(ErrorKind::Config, std::string(name) + " does not exist: " + path->string());
    }
    if (extraction.ng < 1) raise(ErrorKind::Config, "extraction.bin_count must be >= 1");
    if (extraction.gldm_alpha < 0) raise(ErrorKind::Config, "extraction.gldm_alpha must be >= 0");
    if (cv.modalities.empty()) raise(ErrorKind::Config, "no modality enabled");
    if (cv.rounds < 1) raise(ErrorKind::Config, "evaluation.rounds must be >= 1");
    if (cv.k_neighbors < 1) raise(ErrorKind::Config, "selection.k_neighbors must be >= 1");
    if (cv.inner_folds < 2) raise(ErrorKind::Config, "selection.inner_folds must be >= 2");
    try {
        cv.params.validate();
        cv.filter.validate();
    } catch (const Error& e) {
        raise(ErrorKind::Config, e.detail());
    }
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        raise(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, {"seed", "paths", "modalities", "extraction", "filter", "selection", "boost", "evaluation", "threads"},
               "config");
    RunConfig c;
    if (!j.contains("seed")) raise(ErrorKind::Config, "config.seed is required");
    read_opt(j, "seed", c.seed, "config");
    read_opt(j, "threads", c.threads, "config");

    if (j.contains("paths")) {
        const auto& p = j["paths"];
        check_keys(p, {"images", "redcap", "lab", "labels", "output"}, "paths");
        std::string images, redcap, lab, labels, output;
        read_opt(p, "images", images, "paths");
        read_opt(p, "redcap", redcap, "paths");
        read_opt(p, "lab", lab, "paths");
        read_opt(p, "labels", labels, "paths");
        read_opt(p, "output", output, "paths");
        c.paths = {resolve(base_dir, images), resolve(base_dir, redcap), resolve(base_dir, lab),
                   resolve(base_dir, labels), resolve(base_dir, output)};
    }
    if (j.contains("modalities")) {
        const auto& m = j["modalities"];
        check_keys(m, {"use_ct", "use_mri", "use_redcap", "use_lab"}, "modalities");
        read_opt(m, "use_ct", c.cv.modalities.ct, "modalities");
        read_opt(m, "use_mri", c.cv.modalities.mri, "modalities");
        read_opt(m, "use_redcap", c.cv.modalities.redcap, "modalities");
        read_opt(m, "use_lab", c.cv.modalities.lab, "modalities");
    }
    if (j.contains("extraction")) {
        const auto& e = j["extraction"];
        check_keys(e, {"bin_count", "gldm_alpha", "phase"}, "extraction");
        read_opt(e, "bin_count", c.extraction.ng, "extraction");
        read_opt(e, "gldm_alpha", c.extraction.gldm_alpha, "extraction");
        read_opt(e, "phase", c.phase, "extraction");
    }
    if (j.contains("filter")) {
        const auto& f = j["filter"];
        check_keys(f, {"coverage_min", "near_constant_max", "exclude", "whitelist"}, "filter");
        read_opt(f, "coverage_min", c.cv.filter.coverage_min, "filter");
        read_opt(f, "near_constant_max", c.cv.filter.near_constant_max, "filter");
        read_opt(f, "exclude", c.cv.filter.exclude_names, "filter");
        read_opt(f, "whitelist", c.cv.filter.whitelist, "filter");
    }
    if (j.contains("selection")) {
        const auto& s = j["selection"];
        check_keys(s, {"k_neighbors", "inner_folds"}, "selection");
        read_opt(s, "k_neighbors", c.cv.k_neighbors, "selection");
        read_opt(s, "inner_folds", c.cv.inner_folds, "selection");
    }
    if (j.contains("boost")) {
        const auto& b = j["boost"];
        check_keys(b, {"eta", "max_depth", "lambda", "gamma", "rounds", "min_child_weight"}, "boost");
        read_opt(b, "eta", c.cv.params.eta, "boost");
        read_opt(b, "max_depth", c.cv.params.max_depth, "boost");
        read_opt(b, "lambda", c.cv.params.lambda, "boost");
        read_opt(b, "gamma", c.cv.params.gamma, "boost");
        read_opt(b, "rounds", c.cv.params.rounds, "boost");
        read_opt(b, "min_child_weight", c.cv.params.min_child_weight, "boost");
    }
    if (j.contains("evaluation")) {
        const auto& e = j["evaluation"];
        check_keys(e, {"rounds", "stratified", "auc_average", "metric_level"}, "evaluation");
        read_opt(e, "rounds", c.cv.rounds, "evaluation");
        read_opt(e, "stratified", c.cv.stratified, "evaluation");
        std::string average = "macro", level = "sample";
        read_opt(e, "auc_average", average, "evaluation");
        read_opt(e, "metric_level", level, "evaluation");
        if (average == "macro") {
            c.cv.auc_average = evaluate::AucAverage::Macro;
        } else if (average == "weighted") {
            c.cv.auc_average = evaluate::AucAverage::Weighted;
        } else {
            raise(ErrorKind::Config, "evaluation.auc_average must be 'macro' or 'weighted'");
        }
        if (level == "sample") {
            c.cv.metric_level = evaluate::MetricLevel::Sample;
        } else if (level == "patient") {
            c.cv.metric_level = evaluate::MetricLevel::Patient;
        } else {
            raise(ErrorKind::Config, "evaluation.metric_level must be 'sample' or 'patient'");
        }
    }
    c.cv.seed = c.seed;
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Config, "cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), fs::absolute(path).parent_path());
}

std::string to_json(const RunConfig& c) {
    // Paths relative to the output directory, so the archived copy loads in place.
    const auto& base = c.paths.output;
    json j;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["paths"] = {{"images", rel_to(c.paths.images, base)},
                  {"redcap", rel_to(c.paths.redcap, base)},
                  {"lab", rel_to(c.paths.lab, base)},
                  {"labels", rel_to(c.paths.labels, base)},
                  {"output", "."}};
    j["modalities"] = {{"use_ct", c.cv.modalities.ct},
                       {"use_mri", c.cv.modalities.mri},
                       {"use_redcap", c.cv.modalities.redcap},
                       {"use_lab", c.cv.modalities.lab}};
    j["extraction"] = {{"bin_count", c.extraction.ng}, {"gldm_alpha", c.extraction.gldm_alpha}, {"phase", c.phase}};
    j["filter"] = {{"coverage_min", c.cv.filter.coverage_min},
                   {"near_constant_max", c.cv.filter.near_constant_max},
                   {"exclude", c.cv.filter.exclude_names},
                   {"whitelist", c.cv.filter.whitelist}};
    j["selection"] = {{"k_neighbors", c.cv.k_neighbors}, {"inner_folds", c.cv.inner_folds}};
    j["boost"] = {{"eta", c.cv.params.eta},
                  {"max_depth", c.cv.params.max_depth},
                  {"lambda", c.cv.params.lambda},
                  {"gamma", c.cv.params.gamma},
                  {"rounds", c.cv.params.rounds},
                  {"min_child_weight", c.cv.params.min_child_weight}};
    j["evaluation"] = {{"rounds", c.cv.rounds},
                       {"stratified", c.cv.stratified},
                       {"auc_average", c.cv.auc_average == evaluate::AucAverage::Macro ? "macro" : "weighted"},
                       {"metric_level", c.cv.metric_level == evaluate::MetricLevel::Sample ? "sample" : "patient"}};
    return j.dump(2) + "\n";
}

ExtractReport run_extract(const RunConfig& config) {
    config.validate();
    const auto images = phase_images(config);
    ExtractReport report;
    report.images = images.size();

    std::vector<std::optional<radiomics::FeatureVector>> vectors(images.size());
    std::vector<std::string> errors(images.size());
    parallel_for(images.size(), [&](std::size_t i) {
        const auto& rec = images[i];
        try {
            const auto volume = volumes::load_volume(rec.volume_header, rec.volume_raw);
            const auto mask = volumes::load_mask(rec.mask_header, rec.mask_raw);
            vectors[i] = radiomics::extract_feature_vector(volume, mask, config.extraction, rec.image_id);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    std::vector<radiomics::FeatureVector> ct, mri;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!vectors[i]) {
            report.failures.push_back({images[i].image_id, errors[i]});
            continue;
        }
        ++report.extracted;
        (images[i].modality == dataset::Modality::CT ? ct : mri).push_back(std::move(*vectors[i]));
    }

    fs::create_directories(config.paths.output);
    report.ct_features = ct_features_path(config);
    report.mri_features = mri_features_path(config);
    report.failure_report = config.paths.output / "extraction_failures.csv";
    dataset::write_feature_csv(report.ct_features, dataset::Modality::CT, ct);
    dataset::write_feature_csv(report.mri_features, dataset::Modality::MRI, mri);
    auto out = open_out(report.failure_report);
    csv::write_row(out, {"image_id", "error"});
    for (const auto& f : report.failures) csv::write_row(out, {f.image_id, f.message});
    return report;
}

dataset::Dataset load_dataset(const RunConfig& config) {
    config.validate();
    const auto labels = dataset::load_labels(config.paths.labels);
    auto redcap = tabular::load_table(config.paths.redcap);
    auto lab = tabular::load_table(config.paths.lab, &tabular::LabSchema::standard());
    const auto images = phase_images(config);
    for (const auto& p : {ct_features_path(config), mri_features_path(config)}) {
        if (!fs::exists(p)) raise(ErrorKind::Io, "missing " + p.string() + "; run extract first");
    }
    auto ct = dataset::load_feature_csv(ct_features_path(config), dataset::Modality::CT);
    auto mri = dataset::load_feature_csv(mri_features_path(config), dataset::Modality::MRI);
    return dataset::build_dataset(labels, std::move(redcap), std::move(lab), images, std::move(ct), std::move(mri));
}

namespace {

struct WholeCohort {
    evaluate::PreparedData prepared;
    select::SelectionResult selection;
};

WholeCohort whole_cohort_selection(const RunConfig& config) {
    const auto data = load_dataset(config);
    WholeCohort w;
    w.prepared = evaluate::prepare_features(data, config.cv, config.cv.modalities, data.patients, {}, 0);
    w.selection = evaluate::select_features(w.prepared, config.cv, 0);
    return w;
}

}  // namespace

select::SelectionResult run_select(const RunConfig& config) {
    auto w = whole_cohort_selection(config);
    write_text(config.paths.output / "selection.json", select::to_json(w.selection) + "\n");
    return std::move(w.selection);
}

gbdt::Booster run_train(const RunConfig& config) {
    const auto w = whole_cohort_selection(config);
    auto trained = gbdt::train_booster(w.prepared.x_train.select_columns(w.selection.chosen_indices),
                                       w.prepared.y_train, config.cv.params, nullptr, tabular::kNumStageClasses);
    trained.booster.feature_names = w.selection.chosen;
    write_text(config.paths.output / "selection.json", select::to_json(w.selection) + "\n");
    write_text(config.paths.output / "model.json", gbdt::to_json(trained.booster) + "\n");
    return std::move(trained.booster);
}

std::string cell_slug(const dataset::ModalitySet& cell) {
    return lower(cell.image_name()) + "_" + lower(cell.tabular_name());
}

std::string metrics_json(const std::vector<evaluate::CVReport>& reports, const RunConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["rounds"] = config.cv.rounds;
    j["stratified"] = config.cv.stratified;
    j["auc_average"] = config.cv.auc_average == evaluate::AucAverage::Macro ? "macro" : "weighted";
    j["metric_level"] = config.cv.metric_level == evaluate::MetricLevel::Sample ? "sample" : "patient";
    json cells = json::array();
    for (const auto& rep : reports) {
        json cell;
        cell["image"] = rep.modalities.image_name();
        cell["tabular"] = rep.modalities.tabular_name();
        cell["modalities"] = modality_list(rep.modalities);
        cell["acc"] = summary_json(rep.acc);
        cell["auc"] = summary_json(rep.auc);
        json rounds = json::array();
        for (const auto& r : rep.rounds) {
            json per_class = json::array();
            for (const auto& a : r.roc.auc) per_class.push_back(a ? json(*a) : json(nullptr));
            rounds.push_back({{"round", r.plan.round},
                              {"acc", r.accuracy},
                              {"auc", r.auc},
                              {"auc_per_class", per_class},
                              {"undefined_classes", r.roc.undefined_classes},
                              {"confusion", r.confusion},
                              {"train_patients", r.plan.train.size()},
                              {"test_patients", r.plan.test.size()},
                              {"test_samples", r.predictions.size()},
                              {"selected_features", r.selected.size()}});
        }
        cell["rounds"] = rounds;
        cells.push_back(cell);
    }
    j["cells"] = cells;
    return j.dump(2) + "\n";
}

std::string summary_table(const std::vector<evaluate::CVReport>& reports) {
    const char* rows[] = {"CT", "MRI", "CT+MRI", "Null"};
    const char* cols[] = {"Redcap", "Lab", "Redcap+Lab", "Null"};
    std::vector<std::vector<std::string>> grid(5, std::vector<std::string>(5));
    grid[0][0] = "ACC / AUC";
    for (int c = 0; c < 4; ++c) grid[0][c + 1] = cols[c];
    for (int r = 0; r < 4; ++r) {
        grid[r + 1][0] = rows[r];
        for (int c = 0; c < 4; ++c) grid[r + 1][c + 1] = "-";
    }
    for (const auto& rep : reports) {
        const auto img = rep.modalities.image_name();
        const auto tab = rep.modalities.tabular_name();
        const auto r = std::find(std::begin(rows), std::end(rows), img) - std::begin(rows);
        const auto c = std::find(std::begin(cols), std::end(cols), tab) - std::begin(cols);
        grid[static_cast<std::size_t>(r) + 1][static_cast<std::size_t>(c) + 1] =
            fixed2(rep.acc.mean) + " ± " + fixed2(rep.acc.std) + " / " + fixed2(rep.auc.mean) + " ± " +
            fixed2(rep.auc.std);
    }
    std::vector<std::size_t> width(5, 0);
    for (const auto& row : grid)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
    std::string out;
    for (const auto& row : grid) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            line += (c ? " | " : "") + row[c];
            if (c + 1 < row.size()) line += std::string(width[c] - display_width(row[c]), ' ');
        }
        out += line + "\n";
    }
    return out;
}

EvaluateResult run_evaluate(const RunConfig& config, bool grid) {
    const auto data = load_dataset(config);
    EvaluateResult result;
    if (grid) {
        result.reports = evaluate::ablation_grid(data, config.cv);
    } else {
        result.reports.push_back(evaluate::cross_validate(data, config.cv));
    }
    const auto& out = config.paths.output;
    fs::create_directories(out);
    for (const auto& rep : result.reports) {
        const auto dir = grid ? out / "cells" / cell_slug(rep.modalities) : out;
        for (const auto& r : rep.rounds) write_round_files(dir, r);
    }
    write_text(out / kMetricsFile, metrics_json(result.reports, config));
    write_text(out / "summary.txt", summary_table(result.reports));
    write_text(out / "config.json", to_json(config));
    return result;
}

PipelineResult run_pipeline(const RunConfig& config, bool grid) {
    PipelineResult result;
    result.extract = run_extract(config);
    result.evaluate = run_evaluate(config, grid);
    write_run_manifest(config);
    return result;
}

fs::path write_run_manifest(const RunConfig& config) {
    const auto& root = config.paths.output;
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        auto rel = entry.path().lexically_relative(root).generic_string();
        if (rel != kRunManifestFile) files.push_back(std::move(rel));
    }
    std::sort(files.begin(), files.end());
    json outputs = json::array();
    for (const auto& f : files) outputs.push_back({{"path", f}, {"sha256", sha256_file(root / f)}});
    json inputs = json::array();
    for (const auto& p : {config.paths.images, config.paths.redcap, config.paths.lab, config.paths.labels}) {
        inputs.push_back({{"path", rel_to(p, root)}, {"sha256", sha256_file(p)}});
    }
    json j{{"outputs", outputs}, {"inputs", inputs}};
    const auto path = root / kRunManifestFile;
    write_text(path, j.dump(2) + "\n");
    return path;
}

cohortgen::CohortSpec parse_cohort_spec(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        raise(ErrorKind::Config, std::string("cohort spec is not valid JSON: ") + e.what());
    }
    check_keys(j,
               {"n_patients", "n_unlabeled", "priors", "target_bayes_accuracy", "ct_count_probs", "mri_count_probs",
                "satellite_prob", "dims", "spacing", "radius_mm_base", "radius_mm_per_unit", "radius_mm_min",
                "redcap_signal", "redcap_noise", "lab_signal", "missing_rate", "signal_delta", "seed"},
               "cohort spec");
    cohortgen::CohortSpec s;
    const std::string w = "cohort spec";
    read_opt(j, "n_patients", s.n_patients, w);
    read_opt(j, "n_unlabeled", s.n_unlabeled, w);
    read_opt(j, "priors", s.priors, w);
    read_opt(j, "target_bayes_accuracy", s.target_bayes_accuracy, w);
    read_opt(j, "ct_count_probs", s.ct_count_probs, w);
    read_opt(j, "mri_count_probs", s.mri_count_probs, w);
    read_opt(j, "satellite_prob", s.satellite_prob, w);
    read_opt(j, "dims", s.dims, w);
    read_opt(j, "spacing", s.spacing, w);
    read_opt(j, "radius_mm_base", s.radius_mm_base, w);
    read_opt(j, "radius_mm_per_unit", s.radius_mm_per_unit, w);
    read_opt(j, "radius_mm_min", s.radius_mm_min, w);
    read_opt(j, "redcap_signal", s.redcap_signal, w);
    read_opt(j, "redcap_noise", s.redcap_noise, w);
    read_opt(j, "lab_signal", s.lab_signal, w);
    read_opt(j, "missing_rate", s.missing_rate, w);
    read_opt(j, "signal_delta", s.signal_delta, w);
    read_opt(j, "seed", s.seed, w);
    return s;
}

fs::path write_cohort_run_config(const cohortgen::GeneratedCohort& cohort, std::uint64_t seed) {
    const auto& root = cohort.root;
    json j{{"seed", seed},
           {"paths",
            {{"images", rel_to(cohort.images, root)},
             {"redcap", rel_to(cohort.redcap, root)},
             {"lab", rel_to(cohort.lab, root)},
             {"labels", rel_to(cohort.labels, root)},
             {"output", "run"}}},
           {"modalities", {{"use_ct", true}, {"use_mri", true}, {"use_redcap", true}, {"use_lab", true}}},
           {"filter", {{"exclude", {"exam_*"}}}}};
    const auto path = root / "run_config.json";
    write_text(path, j.dump(2) + "\n");
    return path;
}

}  // namespace hccstage::pipeline
