#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hccstage::cohortgen {

/// Synthetic cohort parameters. Each patient has a latent class c and two
/// latent scores u ~ N(c*s, 1) (drives lesion size) and v ~ N(c*s, 1)
/// (drives the tabular signal columns); s is calibrated so that the Bayes
/// accuracy of (u, v) equals `target_bayes_accuracy`.
struct CohortSpec {
    int n_patients = 95;
    int n_unlabeled = 0;  // extra patients whose label file entry is Null
    std::array<double, 3> priors{55.0 / 95.0, 22.0 / 95.0, 18.0 / 95.0};
    double target_bayes_accuracy = 0.95;

    // P(k images) for k = 0, 1, 2, ...
    std::vector<double> ct_count_probs{0.03, 0.62, 0.35};
    std::vector<double> mri_count_probs{0.0, 0.12, 0.88};
    double satellite_prob = 0.3;  // second, smaller lesion component

    std::array<int, 3> dims{40, 40, 28};
    std::array<double, 3> spacing{1.0, 1.0, 1.25};
    double radius_mm_base = 6.0;      // equivalent-sphere radius at u = 0
    double radius_mm_per_unit = 0.75;  // radius change per unit of u
    double radius_mm_min = 2.5;

    int redcap_signal = 2;  // columns driven by v (the first one noise-free)
    int redcap_noise = 4;
    int lab_signal = 2;     // lab variables driven by v, with extra noise
    double missing_rate = 0.05;
    double signal_delta = 1.0;  // minimum standardized class separation of signal columns

    std::uint64_t seed = 0;

    /// Throws Config errors on invalid values.
    void validate() const;
};

/// Exact Bayes accuracy of the latent mixture with per-dimension class
/// spacing `s` observed through `dims` latent scores.
double bayes_accuracy(const std::array<double, 3>& priors, double s, int dims);

/// Spacing s whose two-score Bayes accuracy equals the target (bisection).
double calibrate_separation(const std::array<double, 3>& priors, double target);

/// Accuracy of the closed-form posterior argmax on `draws` fresh samples.
double monte_carlo_bayes_accuracy(const std::array<double, 3>& priors, double s, int draws, std::uint64_t seed);

struct GeneratedCohort {
    std::filesystem::path root;
    std::filesystem::path manifest;  // manifest.json
    std::filesystem::path labels;    // labels.csv
    std::filesystem::path redcap;    // redcap.csv
    std::filesystem::path lab;       // lab.csv
    std::filesystem::path images;    // images.csv
    double separation = 0.0;
    std::vector<int> classes;  // latent class per generated patient, labelled ones first
    std::size_t image_count = 0;
};

/// Writes the cohort under `out_dir`; identical spec gives an identical tree.
GeneratedCohort generate_cohort(const CohortSpec& spec, const std::filesystem::path& out_dir);

}  // namespace hccstage::cohortgen
