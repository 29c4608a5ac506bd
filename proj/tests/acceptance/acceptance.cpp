// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Heavy criteria (7-9) share one generated cohort.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "hccstage/cohortgen.hpp"
#include "hccstage/evaluate.hpp"
#include "hccstage/gbdt.hpp"
#include "hccstage/pipeline.hpp"
#include "hccstage/radiomics.hpp"
#include "hccstage/select.hpp"
#include "hccstage/texture.hpp"
#include "hccstage/volumes.hpp"

using namespace hccstage;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::ostringstream note;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) note << "first failure: " << what << "; ";
        pass = pass && ok;
    }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
    Outcome o;
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.note << "exception: " << e.what();
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << title << "  -- " << o.note.str() << std::endl;
}

bool same_counts(const radiomics::LevelMatrix& a, const radiomics::LevelMatrix& b) {
    if (a.rows() != b.rows()) return false;
    const std::size_t cols = std::max(a.cols(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double va = c < a.cols() ? a(r, c) : 0.0;
            const double vb = c < b.cols() ? b(r, c) : 0.0;
            if (va != vb) return false;
        }
    return true;
}

oracle::Coord dir(std::size_t d) {
    const auto& o = volumes::kDirections13[d];
    return {o[0], o[1], o[2]};
}

void texture_oracles(Outcome& o) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> ng_pick(2, 8);
    std::uniform_real_distribution<double> density(0.1, 1.0);
    std::size_t voxels = 0;
    for (int t = 0; t < 200; ++t) {
        const auto r = oracle::random_roi(rng, 12, density(rng));
        const auto roi = volumes::discretize(r.volume, r.mask, ng_pick(rng));
        const auto map = oracle::level_map(roi);
        voxels += roi.voxel_count();
        const std::string at = "roi " + std::to_string(t);

        const auto glcm = radiomics::glcm_counts(roi);
        for (std::size_t d = 0; d < 13; ++d) {
            o.require(same_counts(glcm[d], oracle::glcm(map, roi.ng, dir(d))), at + " glcm");
            const auto& m = glcm[d];
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) o.require(m(i, j) == m(j, i), at + " glcm symmetry");
            if (const double total = m.sum(); total > 0.0) {
                double s = 0.0;
                for (std::size_t i = 0; i < m.rows(); ++i)
                    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) / total;
                o.require(std::abs(s - 1.0) <= 1e-9, at + " glcm normalization");
            }
            o.require(same_counts(radiomics::glrlm_counts(roi, d), oracle::glrlm(map, roi.ng, dir(d))), at + " glrlm");
        }
        o.require(same_counts(radiomics::glszm_counts(roi), oracle::glszm(map, roi.ng)), at + " glszm");
        for (int alpha : {0, 1})
            o.require(same_counts(radiomics::gldm_counts(roi, alpha), oracle::gldm(map, roi.ng, alpha)), at + " gldm");
        const auto got = radiomics::ngtdm_stats(roi);
        const auto want = oracle::ngtdm(map, roi.ng);
        o.require(got.n == want.n && got.s == want.s, at + " ngtdm");
    }
    const double secs = seconds_since(t0);
    o.require(secs < 30.0, "runtime");
    o.note << "200 ROIs, " << voxels << " voxels, " << secs << " s";
}

void degenerate_cases(Outcome& o) {
    const auto c = radiomics::first_order(std::vector<double>(50, 42.0), 32);
    o.require(c.get("variance") == 0.0 && c.get("entropy") == 0.0 && c.get("uniformity") == 1.0, "constant ROI");

    std::vector<std::uint8_t> one(27, 0);
    one[13] = 1;
    const auto s = radiomics::shape3d(volumes::Mask({3, 3, 3}, one), {});
    o.require(s.get("volume") == 1.0 && s.get("surface_area") == 6.0, "single voxel");

    const volumes::Dims d{25, 25, 25};
    std::vector<std::uint8_t> ball(d.count(), 0);
    for (int z = 0; z < 25; ++z)
        for (int y = 0; y < 25; ++y)
            for (int x = 0; x < 25; ++x)
                if ((x - 12) * (x - 12) + (y - 12) * (y - 12) + (z - 12) * (z - 12) <= 100) ball[d.index(x, y, z)] = 1;
    const double sph = radiomics::shape3d(volumes::Mask(d, ball), {}).get("sphericity");
    o.require(sph >= 0.7 && sph <= 1.05, "ball sphericity");
    o.note << "V=" << s.get("volume") << " A=" << s.get("surface_area") << " ball r=10 sphericity=" << sph;
}

void mi_accuracy(Outcome& o) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> z(0.0, 1.0);
    const std::size_t n = 2000;
    DenseMatrix x(n, 3);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(i % 2);
        x(i, 0) = z(rng) + (y[i] ? 1.0 : -1.0);
        x(i, 1) = 5.0;
        x(i, 2) = 3.0 * x(i, 0) + 11.0;
    }
    const std::vector<std::string> names{"gauss", "constant", "affine"};
    const auto s = select::mi_scores(x, y, names, 3, 0);
    const double truth = oracle::gaussian_mixture_mi(1.0);
    const double err = std::abs(s[0].score - truth);
    o.require(err <= 0.05, "gaussian estimate");
    o.require(s[1].score == 0.0, "constant feature");

    // Invariance compares each feature with its own transform under the same jitter seed.
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        DenseMatrix a(300, 1), b(300, 1);
        std::vector<int> ya(300);
        for (std::size_t i = 0; i < 300; ++i) {
            ya[i] = static_cast<int>(i % 3);
            a(i, 0) = z(rng) + ya[i];
            b(i, 0) = 0.37 * a(i, 0) + 1e4;
        }
        const std::vector<std::string> one{"f"};
        worst = std::max(worst, std::abs(select::mi_scores(a, ya, one, 3, seed)[0].score -
                                         select::mi_scores(b, ya, one, 3, seed)[0].score));
    }
    o.require(worst <= 1e-6, "affine invariance");
    o.note << "estimate " << s[0].score << " vs integral " << truth << " (err " << err << "), constant "
           << s[1].score << ", max invariance gap " << worst;
}

void booster_checks(Outcome& o) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> len(2, 100), val(0, 20), gq(-8, 8), hq(1, 8);
    for (int t = 0; t < 1000; ++t) {
        const int n = len(rng);
        std::vector<double> v(static_cast<std::size_t>(n)), g(v.size()), h(v.size());
        for (auto& x : v) x = val(rng);
        std::sort(v.begin(), v.end());
        for (std::size_t i = 0; i < v.size(); ++i) {
            g[i] = gq(rng) / 4.0;
            h[i] = hq(rng) / 4.0;
        }
        const double lambda = 0.5 + (t % 4) * 0.5, gamma = (t % 5) * 0.25, mcw = (t % 3) * 0.5;
        const auto got = gbdt::best_split(v, g, h, lambda, gamma, mcw);
        const auto want = oracle::exhaustive_split(v, g, h, lambda, gamma, mcw);
        bool ok = got.has_value() == want.found;
        if (ok && got) ok = got->threshold == want.threshold && std::abs(got->gain - want.gain) <= 1e-12;
        o.require(ok, "best_split instance " + std::to_string(t));
    }

    DenseMatrix sx(20, 1);
    std::vector<int> sy(20);
    for (std::size_t i = 0; i < 20; ++i) {
        sx(i, 0) = static_cast<double>(i) - 9.5;
        sy[i] = sx(i, 0) < 0 ? 0 : 1;
    }
    gbdt::Params stump;
    stump.max_depth = 1;
    stump.rounds = 10;
    const auto sb = gbdt::train_booster(sx, sy, stump).booster;
    const double sep_acc = evaluate::accuracy(gbdt::predict_class(sb, sx), sy);
    o.require(sep_acc == 1.0, "separable depth-1");

    int increases = 0;
    double worst_row = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 r(seed);
        std::normal_distribution<double> z(0.0, 1.0);
        DenseMatrix x(90, 4);
        std::vector<int> y(90);
        for (std::size_t i = 0; i < 90; ++i) {
            y[i] = static_cast<int>(i % 3);
            for (std::size_t j = 0; j < 4; ++j) x(i, j) = z(r) + (j == 0 ? y[i] : 0.0);
        }
        gbdt::Params p;
        p.rounds = 30;
        const auto res = gbdt::train_booster(x, y, p);
        for (std::size_t k = 1; k < res.log.train_loss.size(); ++k)
            if (res.log.train_loss[k] > res.log.train_loss[k - 1]) ++increases;
        const auto proba = gbdt::predict_proba(res.booster, x);
        for (std::size_t i = 0; i < proba.rows(); ++i) {
            const auto row = proba.row(i);
            worst_row = std::max(worst_row, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
        }
    }
    o.require(increases == 0, "cross-entropy non-increasing");
    o.require(worst_row <= 1e-12, "probability rows");
    o.note << "1000 split oracles, separable acc " << sep_acc << ", CE increases " << increases
           << ", max |row sum - 1| " << worst_row;
}

void auc_checks(Outcome& o) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> size(6, 80), cls(0, 2), levels(1, 12);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = static_cast<std::size_t>(size(rng));
        const int lv = levels(rng);
        std::uniform_int_distribution<int> level(0, lv);
        DenseMatrix p(n, 3);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i < 3 ? static_cast<int>(i) : cls(rng);
            for (std::size_t k = 0; k < 3; ++k) p(i, k) = static_cast<double>(level(rng)) / lv;
        }
        const auto r = evaluate::roc_auc_ovr(p, y);
        for (std::size_t k = 0; k < 3; ++k) {
            std::vector<int> pos(n);
            for (std::size_t i = 0; i < n; ++i) pos[i] = y[i] == static_cast<int>(k);
            o.require(r.auc[k].has_value() && *r.auc[k] == oracle::pairwise_auc(p.column(k), pos),
                      "instance " + std::to_string(t));
        }
    }
    DenseMatrix tied(12, 3, 1.0 / 3.0);
    std::vector<int> y(12);
    for (std::size_t i = 0; i < 12; ++i) y[i] = static_cast<int>(i % 3);
    const double auc = evaluate::roc_auc_ovr(tied, y).average;
    o.require(auc == 0.5, "all-tied");
    o.note << "500 instances exact, all-tied AUC " << auc;
}

void cv_hygiene(Outcome& o) {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (int i = 0; i < 95; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "p%03d", i);
        ids.emplace_back(buf);
        labels.push_back(i < 55 ? 0 : i < 77 ? 1 : 2);
    }
    int leaks = 0, bad_sizes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto plan = evaluate::patient_split(ids, labels, static_cast<int>(seed % 5), seed);
        if (plan.train.size() != 76 || plan.test.size() != 19) ++bad_sizes;
        std::vector<std::string> both;
        std::set_intersection(plan.train.begin(), plan.train.end(), plan.test.begin(), plan.test.end(),
                              std::back_inserter(both));
        leaks += static_cast<int>(both.size());
    }
    o.require(bad_sizes == 0, "76/19 sizes");
    o.require(leaks == 0, "plan leakage");

    const auto data = fixtures::toy_dataset(95, 2.0, 1.0, 6);
    evaluate::CvConfig cfg;
    cfg.seed = 6;
    cfg.params.rounds = 10;
    cfg.params.max_depth = 3;
    cfg.inner_folds = 3;
    std::mutex mu;
    std::vector<evaluate::FitEvent> events;
    cfg.on_fit = [&](const evaluate::FitEvent& e) {
        std::lock_guard lock(mu);
        events.push_back(e);
    };
    const auto report = evaluate::cross_validate(data, cfg);
    int hook_leaks = 0;
    std::set<std::string> stages;
    for (const auto& e : events) {
        stages.insert(e.stage);
        const auto& test = report.rounds[static_cast<std::size_t>(e.round)].plan.test;
        for (const auto& p : e.patient_ids) hook_leaks += std::binary_search(test.begin(), test.end(), p);
    }
    o.require(hook_leaks == 0, "fit saw test patients");
    o.require(stages.count("select") && stages.count("impute") && stages.count("train"), "hook coverage");
    o.note << "100 plans 76/19, leaks " << leaks << "; " << events.size() << " fit events, " << hook_leaks
           << " test-patient sightings";
}

std::string fmt(const evaluate::Summary& s) {
    std::ostringstream out;
    out.precision(3);
    out << s.mean << "+-" << s.std;
    return out.str();
}

// Shared by criteria 7-9.
struct EndToEnd {
    fixtures::TempDir dir{"accept"};
    pipeline::RunConfig config;
    pipeline::PipelineResult first;
    double first_seconds = 0.0;
};

void end_to_end(EndToEnd& run, Outcome& o) {
    const auto t0 = Clock::now();
    cohortgen::CohortSpec spec;  // defaults: 95 patients, seed 0
    const auto cohort = cohortgen::generate_cohort(spec, run.dir / "cohort");
    run.config = pipeline::load_run_config(pipeline::write_cohort_run_config(cohort, spec.seed));
    run.first = pipeline::run_pipeline(run.config, true);
    run.first_seconds = seconds_since(t0);

    const evaluate::CVReport* combined = nullptr;
    for (const auto& r : run.first.evaluate.reports)
        if (r.modalities == dataset::ModalitySet::all()) combined = &r;
    o.require(combined != nullptr, "combined cell present");
    if (!combined) return;
    o.require(run.first.extract.failures.empty(), "extraction failures");
    o.require(combined->acc.mean >= 0.85, "ACC >= 0.85");
    o.require(combined->auc.mean >= 0.90, "AUC >= 0.90");
    o.note << "cohort separation " << cohort.separation << "; combined ACC " << fmt(combined->acc) << " AUC "
           << fmt(combined->auc) << ";";
    for (const auto& r : run.first.evaluate.reports) {
        const bool has_image = r.modalities.ct || r.modalities.mri;
        const bool has_tab = r.modalities.redcap || r.modalities.lab;
        if (has_image == has_tab) continue;
        const bool under = r.acc.mean < combined->acc.mean;
        o.require(under, r.modalities.image_name() + "/" + r.modalities.tabular_name() + " not below combined");
        o.note << " " << r.modalities.image_name() << "/" << r.modalities.tabular_name() << " " << fmt(r.acc);
    }
    o.require(run.first_seconds < 120.0, "runtime");
    o.note << "; " << run.first_seconds << " s for cohort + extraction + 15-cell grid";
}

void determinism(EndToEnd& run, Outcome& o) {
    auto second = run.config;
    second.paths.output = run.dir / "second";
    pipeline::run_pipeline(second, true);
    const auto a = fixtures::read_file(run.config.paths.output / "metrics.json");
    const auto b = fixtures::read_file(second.paths.output / "metrics.json");
    o.require(a == b, "metrics.json bytes");
    const auto ma = nlohmann::json::parse(fixtures::read_file(run.config.paths.output / "run_manifest.json"));
    const auto mb = nlohmann::json::parse(fixtures::read_file(second.paths.output / "run_manifest.json"));
    // config.json and the manifest's own output path carry the output directory; everything else must match.
    std::size_t compared = 0, differing = 0;
    for (const auto& fa : ma.at("outputs")) {
        const auto path = fa.at("path").get<std::string>();
        if (path == "config.json") continue;
        bool found = false;
        for (const auto& fb : mb.at("outputs"))
            if (fb.at("path") == path) {
                found = true;
                differing += fb.at("sha256") != fa.at("sha256");
            }
        o.require(found, path + " missing from second run");
        ++compared;
    }
    o.require(ma.at("outputs").size() == mb.at("outputs").size(), "output count");
    o.require(differing == 0, "output hashes");
    o.note << "metrics.json identical (" << a.size() << " bytes); " << compared << " output hashes compared, "
           << differing << " differ";
}

void importance(EndToEnd& run, Outcome& o) {
    const auto booster = pipeline::run_train(run.config);
    const auto gain = gbdt::importance_gain(booster);
    std::vector<std::size_t> order(gain.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return gain[a] > gain[b]; });
    bool found = false;
    o.note << "top 5 by gain:";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i) {
        const auto& name = booster.feature_names[order[i]];
        found = found || name.find("shape_") != std::string::npos;
        o.note << " " << name;
    }
    o.require(found, "no shape feature in top 5");
}

}  // namespace

int main() {
    report(1, "texture matrices match brute-force oracles", texture_oracles);
    report(2, "first-order and shape degenerate cases", degenerate_cases);
    report(3, "kNN mutual information accuracy and invariance", mi_accuracy);
    report(4, "booster split oracle, convergence and simplex", booster_checks);
    report(5, "one-vs-rest AUC matches pairwise counting", auc_checks);
    report(6, "patient-level split hygiene", cv_hygiene);

    EndToEnd run;
    bool ran = false;
    report(7, "synthetic end-to-end pipeline and ablation ordering", [&](Outcome& o) {
        end_to_end(run, o);
        ran = true;
    });
    report(8, "repeat pipeline runs are byte-identical", [&](Outcome& o) {
        o.require(ran, "criterion 7 did not complete");
        if (ran) determinism(run, o);
    });
    report(9, "lesion size/shape feature among top-5 by gain", [&](Outcome& o) {
        o.require(ran, "criterion 7 did not complete");
        if (ran) importance(run, o);
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion/criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
