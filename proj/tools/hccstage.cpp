// hccstage: synthetic cohorts, radiomics extraction, selection, training and
// cross-validated evaluation from a single JSON run config.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hccstage/cohortgen.hpp"
#include "hccstage/error.hpp"
#include "hccstage/parallel.hpp"
#include "hccstage/pipeline.hpp"

namespace {

using namespace hccstage;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

struct StageOptions {
    std::string config;
    std::uint64_t seed = 0;
    std::string modalities;
    std::string out;
    bool grid = false;
    CLI::Option* seed_opt = nullptr;
};

void add_stage_options(CLI::App* cmd, StageOptions& o, bool with_grid) {
    cmd->add_option("--config", o.config, "run config JSON")->required();
    o.seed_opt = cmd->add_option("--seed", o.seed, "override the master seed");
    cmd->add_option("--modalities", o.modalities, "comma list of ct,mri,redcap,lab");
    cmd->add_option("--out", o.out, "override the output directory");
    if (with_grid) cmd->add_flag("--grid", o.grid, "run all 15 modality combinations");
}

pipeline::RunConfig resolve_config(const StageOptions& o) {
    auto config = pipeline::load_run_config(o.config);
    if (o.seed_opt && o.seed_opt->count()) {
        config.seed = o.seed;
        config.cv.seed = o.seed;
    }
    if (!o.modalities.empty()) config.cv.modalities = dataset::ModalitySet::parse(o.modalities);
    if (!o.out.empty()) config.paths.output = std::filesystem::absolute(o.out);
    config.validate();
    set_default_threads(config.threads);
    return config;
}

int report_extract(const pipeline::ExtractReport& r) {
    std::cout << "extracted " << r.extracted << " of " << r.images << " images\n"
              << "  " << r.ct_features.string() << "\n  " << r.mri_features.string() << "\n";
    if (r.failures.empty()) return kExitOk;
    std::cerr << r.failures.size() << " image(s) failed, see " << r.failure_report.string() << "\n";
    for (const auto& f : r.failures) std::cerr << "  " << f.image_id << ": " << f.message << "\n";
    return kExitData;
}

int run_synth(const std::string& spec_path, const std::string& out, const CLI::Option* seed_opt, std::uint64_t seed,
              const CLI::Option* patients_opt, int patients, const std::vector<double>& priors) {
    cohortgen::CohortSpec spec;
    if (!spec_path.empty()) {
        std::ifstream in(spec_path, std::ios::binary);
        if (!in) raise(ErrorKind::Config, "cannot read cohort spec " + spec_path);
        std::stringstream buf;
        buf << in.rdbuf();
        spec = pipeline::parse_cohort_spec(buf.str());
    }
    if (seed_opt->count()) spec.seed = seed;
    if (patients_opt->count()) spec.n_patients = patients;
    if (!priors.empty()) {
        if (priors.size() != 3) raise(ErrorKind::Config, "--priors takes exactly three values");
        spec.priors = {priors[0], priors[1], priors[2]};
    }
    spec.validate();
    const auto cohort = cohortgen::generate_cohort(spec, std::filesystem::absolute(out));
    const auto run_config = pipeline::write_cohort_run_config(cohort, spec.seed);
    std::cout << cohort.manifest.string() << "\n";
    std::cerr << spec.n_patients << " patients, " << cohort.image_count << " images; run config "
              << run_config.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HCC T-stage classification from radiomics and tabular data"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    std::string synth_out, synth_spec;
    std::uint64_t synth_seed = 0;
    int synth_patients = 0;
    std::vector<double> synth_priors;
    synth->add_option("--out", synth_out, "cohort directory")->required();
    synth->add_option("--config", synth_spec, "cohort spec JSON");
    auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "generator seed");
    auto* synth_patients_opt = synth->add_option("--patients", synth_patients, "labelled patient count");
    synth->add_option("--priors", synth_priors, "class priors, three values")->delimiter(',');

    StageOptions extract_o, select_o, train_o, evaluate_o, pipeline_o;
    auto* extract = app.add_subcommand("extract", "radiomics features for every image");
    add_stage_options(extract, extract_o, false);
    auto* selectc = app.add_subcommand("select", "whole-cohort feature selection");
    add_stage_options(selectc, select_o, false);
    auto* train = app.add_subcommand("train", "whole-cohort model on the selected features");
    add_stage_options(train, train_o, false);
    auto* evaluatec = app.add_subcommand("evaluate", "cross-validation on extracted features");
    add_stage_options(evaluatec, evaluate_o, true);
    auto* pipelinec = app.add_subcommand("pipeline", "extract and evaluate, with run manifest");
    add_stage_options(pipelinec, pipeline_o, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (synth->parsed()) {
            return run_synth(synth_spec, synth_out, synth_seed_opt, synth_seed, synth_patients_opt, synth_patients,
                             synth_priors);
        }
        if (extract->parsed()) return report_extract(pipeline::run_extract(resolve_config(extract_o)));
        if (selectc->parsed()) {
            const auto config = resolve_config(select_o);
            const auto sel = pipeline::run_select(config);
            std::cout << "selected " << sel.k << " of " << sel.ranking.size() << " features\n";
            for (const auto& name : sel.chosen) std::cout << "  " << name << "\n";
            return kExitOk;
        }
        if (train->parsed()) {
            const auto config = resolve_config(train_o);
            const auto booster = pipeline::run_train(config);
            std::cout << "trained " << booster.rounds.size() << " rounds on " << booster.num_features
                      << " features -> " << (config.paths.output / "model.json").string() << "\n";
            return kExitOk;
        }
        if (evaluatec->parsed()) {
            const auto config = resolve_config(evaluate_o);
            const auto result = pipeline::run_evaluate(config, evaluate_o.grid);
            pipeline::write_run_manifest(config);
            std::cout << pipeline::summary_table(result.reports);
            return kExitOk;
        }
        if (pipelinec->parsed()) {
            const auto config = resolve_config(pipeline_o);
            const auto result = pipeline::run_pipeline(config, pipeline_o.grid);
            std::cout << pipeline::summary_table(result.evaluate.reports);
            return result.extract.failures.empty() ? kExitOk : report_extract(result.extract);
        }
    } catch (const Error& e) {
        std::cerr << "hccstage: " << e.what() << "\n";
        return e.kind() == ErrorKind::Config ? kExitConfig : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "hccstage: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
