#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "hccstage/cohortgen.hpp"
#include "hccstage/dataset.hpp"
#include "hccstage/error.hpp"
#include "hccstage/tabular.hpp"

using namespace hccstage;
using namespace hccstage::cohortgen;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[e.path().lexically_relative(root).generic_string()] = fixtures::read_file(e.path());
    return out;
}

// Tabular-only cohort: no images, so large patient counts stay cheap.
CohortSpec tabular_spec(int patients, std::uint64_t seed) {
    auto spec = fixtures::small_spec(patients, seed);
    spec.ct_count_probs = {1.0};
    spec.mri_count_probs = {1.0};
    return spec;
}

struct ClassStats {
    std::array<double, 3> mean{};
    std::array<double, 3> var{};
    std::array<double, 3> n{};
};

ClassStats by_class(const tabular::Column& col, const std::vector<int>& cls, bool log_scale) {
    ClassStats s;
    for (std::size_t i = 0; i < cls.size(); ++i) {
        if (!col.numeric[i]) continue;
        const double v = log_scale ? std::log(*col.numeric[i]) : *col.numeric[i];
        const auto c = static_cast<std::size_t>(cls[i]);
        s.n[c] += 1;
        s.mean[c] += v;
        s.var[c] += v * v;
    }
    for (std::size_t c = 0; c < 3; ++c) {
        if (s.n[c] == 0) continue;
        s.mean[c] /= s.n[c];
        s.var[c] = s.var[c] / s.n[c] - s.mean[c] * s.mean[c];
    }
    return s;
}

}  // namespace

TEST(Bayes, CalibrationHitsTarget) {
    const CohortSpec spec;
    const double s = calibrate_separation(spec.priors, 0.95);
    EXPECT_NEAR(bayes_accuracy(spec.priors, s, 2), 0.95, 1e-9);
    EXPECT_NEAR(s, 2.4104, 1e-3);
    EXPECT_LT(bayes_accuracy(spec.priors, s, 1), 0.95);
}

TEST(Bayes, MonteCarloAgreesWithClosedForm) {
    const CohortSpec spec;
    const double s = calibrate_separation(spec.priors, spec.target_bayes_accuracy);
    EXPECT_NEAR(monte_carlo_bayes_accuracy(spec.priors, s, 10000, 1), spec.target_bayes_accuracy, 0.01);
}

TEST(Bayes, ZeroSeparationIsMajorityRate) {
    const std::array<double, 3> p{0.5, 0.3, 0.2};
    EXPECT_NEAR(bayes_accuracy(p, 0.0, 2), 0.5, 1e-9);
    EXPECT_EQ(calibrate_separation(p, 0.4), 0.0);
}

TEST(Spec, ValidationRejectsBadPriors) {
    CohortSpec spec;
    spec.priors = {0.5, 0.3, 0.3};
    try {
        spec.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
    }
    spec.priors = {1.0, 0.0, 0.0};
    EXPECT_NO_THROW(spec.validate());
    spec.n_patients = 0;
    EXPECT_THROW(spec.validate(), Error);
}

TEST(Spec, DefaultImageCountsMimicCohort) {
    const CohortSpec spec;
    double ct = 0.0, mri = 0.0;
    for (std::size_t k = 0; k < spec.ct_count_probs.size(); ++k) ct += static_cast<double>(k) * spec.ct_count_probs[k];
    for (std::size_t k = 0; k < spec.mri_count_probs.size(); ++k) mri += static_cast<double>(k) * spec.mri_count_probs[k];
    EXPECT_NEAR(95 * ct, 127, 5);
    EXPECT_NEAR(95 * mri, 179, 5);
}

TEST(Generate, DegeneratePriorGivesClassZero) {
    fixtures::TempDir dir("cg");
    auto spec = tabular_spec(20, 3);
    spec.priors = {1.0, 0.0, 0.0};
    const auto c = generate_cohort(spec, dir.path());
    for (const auto& [pid, raw] : dataset::load_labels(c.labels))
        EXPECT_EQ(tabular::merge_tnm_label(raw), tabular::StageClass::TxT0T1) << pid;
}

TEST(Generate, SameSeedSameBytes) {
    fixtures::TempDir a("cg"), b("cg"), c("cg");
    const auto spec = fixtures::small_spec(6, 11);
    generate_cohort(spec, a.path());
    generate_cohort(spec, b.path());
    auto other = spec;
    other.seed = 12;
    generate_cohort(other, c.path());
    const auto ta = tree_contents(a.path());
    EXPECT_EQ(ta, tree_contents(b.path()));
    EXPECT_NE(ta.at("labels.csv") + ta.at("redcap.csv"),
              tree_contents(c.path()).at("labels.csv") + tree_contents(c.path()).at("redcap.csv"));
}

TEST(Generate, ManifestListsFilesAndModel) {
    fixtures::TempDir dir("cg");
    const auto c = generate_cohort(fixtures::small_spec(5, 2), dir.path());
    const auto m = nlohmann::json::parse(fixtures::read_file(c.manifest));
    EXPECT_EQ(m.at("spec").at("n_patients"), 5);
    EXPECT_NEAR(m.at("model").at("separation").get<double>(), c.separation, 1e-12);
    std::set<std::string> listed;
    for (const auto& f : m.at("files")) {
        listed.insert(f.at("path").get<std::string>());
        EXPECT_EQ(f.at("sha256").get<std::string>().size(), 64u);
    }
    EXPECT_TRUE(listed.count("labels.csv"));
    EXPECT_TRUE(listed.count("images.csv"));
    EXPECT_EQ(listed.size(), 4 + 4 * c.image_count);
}

TEST(Generate, MasksNonEmptyAndInBounds) {
    fixtures::TempDir dir("cg");
    const auto spec = fixtures::small_spec(12, 5);
    const auto c = generate_cohort(spec, dir.path());
    const auto images = dataset::load_image_manifest(c.images);
    ASSERT_EQ(images.size(), c.image_count);
    for (const auto& rec : images) {
        const auto mask = volumes::load_mask(rec.mask_header, rec.mask_raw);
        const auto vol = volumes::load_volume(rec.volume_header, rec.volume_raw);
        EXPECT_EQ(mask.dims(), (volumes::Dims{spec.dims[0], spec.dims[1], spec.dims[2]}));
        EXPECT_EQ(vol.dims(), mask.dims());
        EXPECT_GT(mask.nonzero_count(), 0u) << rec.image_id;
    }
}

TEST(Generate, AugmentCountMatchesBruteForce) {
    fixtures::TempDir dir("cg");
    const auto c = generate_cohort(fixtures::small_spec(15, 8), dir.path());
    std::map<std::string, tabular::PatientImages> by_patient;
    for (const auto& rec : dataset::load_image_manifest(c.images)) {
        auto& p = by_patient[rec.patient_id];
        p.patient_id = rec.patient_id;
        (rec.modality == dataset::Modality::CT ? p.ct_ids : p.mri_ids).push_back(rec.image_id);
    }
    std::vector<tabular::PatientImages> list;
    std::size_t expected = 0;
    for (const auto& [id, p] : by_patient) {
        list.push_back(p);
        expected += std::max<std::size_t>(1, p.ct_ids.size()) * std::max<std::size_t>(1, p.mri_ids.size());
    }
    EXPECT_EQ(tabular::augment_pairs(list).size(), expected);
}

TEST(Generate, UnlabelledPatientsGetNull) {
    fixtures::TempDir dir("cg");
    auto spec = tabular_spec(8, 1);
    spec.n_unlabeled = 3;
    const auto c = generate_cohort(spec, dir.path());
    const auto labels = dataset::load_labels(c.labels);
    ASSERT_EQ(labels.size(), 11u);
    int nulls = 0;
    for (const auto& [id, raw] : labels) nulls += raw == tabular::RawTnmLabel::Null;
    EXPECT_EQ(nulls, 3);
}

TEST(Generate, TablesMatchSchema) {
    fixtures::TempDir dir("cg");
    const auto c = generate_cohort(tabular_spec(30, 4), dir.path());
    const auto lab = tabular::load_table(c.lab, &tabular::LabSchema::standard());
    EXPECT_EQ(lab.cols(), 18u);
    const auto redcap = tabular::load_table(c.redcap);
    EXPECT_EQ(redcap.column("sex").kind, tabular::ColumnKind::Categorical);
    EXPECT_EQ(redcap.column("tumor_burden_score").kind, tabular::ColumnKind::Numeric);
    EXPECT_GT(redcap.column("followup_score").missing_count(), 5u);
}

TEST(Generate, SignalColumnsSeparateClasses) {
    fixtures::TempDir dir("cg");
    const auto spec = tabular_spec(400, 21);
    const auto c = generate_cohort(spec, dir.path());
    const auto redcap = tabular::load_table(c.redcap);
    const auto lab = tabular::load_table(c.lab, &tabular::LabSchema::standard());
    struct Check {
        const tabular::Column* col;
        bool log_scale;
    };
    for (const auto& [col, log_scale] : {Check{&redcap.column("tumor_burden_score"), false},
                                         Check{&redcap.column("vascular_invasion_index"), false},
                                         Check{&lab.column("AFP"), true}, Check{&lab.column("CRP"), true}}) {
        const auto s = by_class(*col, c.classes, log_scale);
        for (std::size_t k = 0; k + 1 < 3; ++k) {
            const double pooled = std::sqrt(0.5 * (s.var[k] + s.var[k + 1]));
            EXPECT_GE((s.mean[k + 1] - s.mean[k]) / pooled, spec.signal_delta) << col->name << " " << k;
        }
    }
}

TEST(Generate, NoiseColumnsRejectRarely) {
    // Two-sample z-test of class 0 vs class 2 means at alpha = 0.01.
    int tests = 0, rejections = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        fixtures::TempDir dir("cg");
        const auto c = generate_cohort(tabular_spec(300, 100 + seed), dir.path());
        const auto redcap = tabular::load_table(c.redcap);
        for (const char* name : {"bmi", "systolic_bp", "smoking_years", "alcohol_units", "age"}) {
            const auto s = by_class(redcap.column(name), c.classes, false);
            const double se = std::sqrt(s.var[0] / s.n[0] + s.var[2] / s.n[2]);
            ++tests;
            rejections += std::abs(s.mean[0] - s.mean[2]) / se > 2.576;
        }
    }
    // 50 tests at 1%: P(more than 4 rejections) is about 0.2%.
    EXPECT_LE(rejections, 4) << rejections << " of " << tests;
}
