#include "hccstage/cohortgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "hccstage/csv.hpp"
#include "hccstage/dataset.hpp"
#include "hccstage/error.hpp"
#include "hccstage/hash.hpp"
#include "hccstage/seed.hpp"
#include "hccstage/tabular.hpp"
#include "hccstage/volumes.hpp"

namespace hccstage::cohortgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

void validate_probs(const std::vector<double>& p, const char* what) {
    if (p.empty()) raise(ErrorKind::Config, std::string(what) + " must not be empty");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) raise(ErrorKind::Config, std::string(what) + " has a negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) raise(ErrorKind::Config, std::string(what) + " must sum to 1");
}

template <class Rng>
std::size_t draw_index(Rng& rng, std::span<const double> probs) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    // Rounding slack: last entry with non-zero mass.
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return i;
    return 0;
}

double round_to(double x, int digits) {
    const double f = std::pow(10.0, digits);
    return std::round(x * f) / f;
}

std::string patient_name(int index, int total) {
    const int width = std::max(3, static_cast<int>(std::to_string(total).size()));
    auto digits = std::to_string(index + 1);
    return "P" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

struct Lesion {
    std::array<double, 3> center;  // voxel coordinates
    std::array<double, 3> semi;    // semi-axes in mm
};

bool inside(const Lesion& l, const std::array<double, 3>& spacing, int x, int y, int z) {
    const double dx = (x - l.center[0]) * spacing[0] / l.semi[0];
    const double dy = (y - l.center[1]) * spacing[1] / l.semi[1];
    const double dz = (z - l.center[2]) * spacing[2] / l.semi[2];
    return dx * dx + dy * dy + dz * dz <= 1.0;
}

struct PatientDraw {
    int cls = 0;
    double u = 0.0;
    double v = 0.0;
    int ct_count = 0;
    int mri_count = 0;
};

struct ImageDraw {
    std::vector<double> voxels;
    std::vector<std::uint8_t> mask;
};

ImageDraw draw_image(const CohortSpec& spec, double u, dataset::Modality modality, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto [nx, ny, nz] = spec.dims;
    const auto& sp = spec.spacing;

    const double radius =
        std::max(spec.radius_mm_min, spec.radius_mm_base + spec.radius_mm_per_unit * u) * std::exp(0.03 * n01(rng));
    const double e1 = std::exp(0.12 * n01(rng));
    const double e2 = std::exp(0.12 * n01(rng));
    const double e3 = 1.0 / (e1 * e2);
    Lesion main{{nx / 2.0 + (unit(rng) - 0.5) * 3.0, ny / 2.0 + (unit(rng) - 0.5) * 3.0, nz / 2.0 + (unit(rng) - 0.5) * 2.0},
                {radius * e1, radius * e2, radius * e3}};
    // Keep the ellipsoid two voxels clear of the border.
    for (int a = 0; a < 3; ++a) {
        const double room = (std::min(main.center[a], spec.dims[a] - 1 - main.center[a]) - 2.0) * sp[a];
        main.semi[a] = std::max(0.5 * sp[a], std::min(main.semi[a], room));
    }

    std::vector<Lesion> lesions{main};
    if (unit(rng) < spec.satellite_prob) {
        const double r = std::max(1.5, 0.35 * radius);
        const std::array<double, 3> c{2.0 + r / sp[0], 2.0 + r / sp[1], 2.0 + r / sp[2]};
        double dist = 0.0;
        for (int a = 0; a < 3; ++a) dist += std::pow((c[a] - main.center[a]) * sp[a], 2);
        const double reach = *std::max_element(main.semi.begin(), main.semi.end()) + r + 2.0;
        if (std::sqrt(dist) > reach) lesions.push_back({c, {r, r, r}});
    }

    const double background = modality == dataset::Modality::CT ? 60.0 : 200.0;
    const double lesion_level = modality == dataset::Modality::CT ? 110.0 : 320.0;
    const double noise = modality == dataset::Modality::CT ? 10.0 : 25.0;

    ImageDraw out;
    const std::size_t count = static_cast<std::size_t>(nx) * ny * nz;
    out.voxels.resize(count);
    out.mask.assign(count, 0);
    std::size_t i = 0;
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x, ++i) {
                bool in = false;
                for (const auto& l : lesions) in = in || inside(l, sp, x, y, z);
                out.mask[i] = in ? 1 : 0;
                out.voxels[i] = round_to((in ? lesion_level : background) + noise * n01(rng), 2);
            }
        }
    }
    return out;
}

const char* kRedcapSignalNames[] = {"tumor_burden_score", "vascular_invasion_index", "child_pugh_points"};
const char* kRedcapNoiseNames[] = {"bmi", "systolic_bp", "smoking_years", "alcohol_units", "height_cm", "heart_rate"};

std::string indexed_name(const char* const* pool, std::size_t pool_size, int j, const char* fallback) {
    if (static_cast<std::size_t>(j) < pool_size) return pool[j];
    return std::string(fallback) + "_" + std::to_string(j + 1);
}

double range_midpoint(const tabular::ReferenceRange& r) {
    if (r.low && r.high) return 0.5 * (*r.low + *r.high);
    if (r.high) return 0.5 * *r.high;
    if (r.low) return 1.5 * *r.low;
    return 1.0;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

}  // namespace

void CohortSpec::validate() const {
    if (n_patients < 1) raise(ErrorKind::Config, "n_patients must be >= 1");
    if (n_unlabeled < 0) raise(ErrorKind::Config, "n_unlabeled must be >= 0");
    validate_probs({priors.begin(), priors.end()}, "priors");
    validate_probs(ct_count_probs, "ct_count_probs");
    validate_probs(mri_count_probs, "mri_count_probs");
    if (!(target_bayes_accuracy > 0.0 && target_bayes_accuracy < 1.0)) {
        raise(ErrorKind::Config, "target_bayes_accuracy must lie in (0, 1)");
    }
    if (!(satellite_prob >= 0.0 && satellite_prob <= 1.0)) raise(ErrorKind::Config, "satellite_prob must lie in [0, 1]");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) raise(ErrorKind::Config, "missing_rate must lie in [0, 1)");
    for (int d : dims)
        if (d < 8) raise(ErrorKind::Config, "volume dims must be >= 8");
    for (double s : spacing)
        if (!(s > 0.0)) raise(ErrorKind::Config, "spacing must be positive");
    if (!(radius_mm_base > 0.0) || !(radius_mm_min > 0.0) || !std::isfinite(radius_mm_per_unit)) {
        raise(ErrorKind::Config, "lesion radii must be positive");
    }
    if (redcap_signal < 0 || redcap_noise < 0 || lab_signal < 0) raise(ErrorKind::Config, "column counts must be >= 0");
    if (lab_signal > static_cast<int>(tabular::LabSchema::standard().variables.size())) {
        raise(ErrorKind::Config, "lab_signal exceeds the number of lab variables");
    }
    if (!(signal_delta >= 0.0)) raise(ErrorKind::Config, "signal_delta must be >= 0");
}

double bayes_accuracy(const std::array<double, 3>& priors, double s, int dims) {
    // Projection onto the class-mean direction is sufficient: t ~ N(c*d, 1).
    const double d = s * std::sqrt(static_cast<double>(dims));
    const double lo = -12.0, hi = 2.0 * d + 12.0;
    constexpr int n = 40000;  // even, Simpson's rule
    const double h = (hi - lo) / n;
    auto f = [&](double t) {
        double best = 0.0;
        for (int c = 0; c < 3; ++c) best = std::max(best, priors[c] * normal_pdf(t - c * d));
        return best;
    };
    double sum = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return sum * h / 3.0;
}

double calibrate_separation(const std::array<double, 3>& priors, double target) {
    if (bayes_accuracy(priors, 0.0, 2) >= target) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (bayes_accuracy(priors, hi, 2) < target) {
        hi *= 2.0;
        if (hi > 1e3) raise(ErrorKind::Config, "target Bayes accuracy is unreachable");
    }
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (bayes_accuracy(priors, mid, 2) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double monte_carlo_bayes_accuracy(const std::array<double, 3>& priors, double s, int draws, std::uint64_t seed) {
    if (draws < 1) raise(ErrorKind::Input, "draws must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    int correct = 0;
    for (int i = 0; i < draws; ++i) {
        const int c = static_cast<int>(draw_index(rng, priors));
        const double u = c * s + n01(rng);
        const double v = c * s + n01(rng);
        int best = 0;
        double best_log = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            if (priors[k] <= 0.0) continue;
            const double lp = std::log(priors[k]) - 0.5 * ((u - k * s) * (u - k * s) + (v - k * s) * (v - k * s));
            if (lp > best_log) {
                best_log = lp;
                best = k;
            }
        }
        correct += best == c;
    }
    return static_cast<double>(correct) / draws;
}

GeneratedCohort generate_cohort(const CohortSpec& spec, const fs::path& out_dir) {
    spec.validate();
    const double s = calibrate_separation(spec.priors, spec.target_bayes_accuracy);

    GeneratedCohort out;
    out.root = out_dir;
    out.separation = s;
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    if (ec) raise(ErrorKind::Io, "cannot create " + (out_dir / "images").string() + ": " + ec.message());

    const int total = spec.n_patients + spec.n_unlabeled;
    const volumes::Dims dims{spec.dims[0], spec.dims[1], spec.dims[2]};
    const volumes::Spacing spacing{spec.spacing[0], spec.spacing[1], spec.spacing[2]};
    const auto& lab_schema = tabular::LabSchema::standard();

    // Lab variables carrying signal: AFP and CRP first, then schema order.
    std::vector<std::size_t> lab_order;
    for (const char* preferred : {"AFP", "CRP"}) {
        for (std::size_t j = 0; j < lab_schema.variables.size(); ++j)
            if (lab_schema.variables[j].name == preferred) lab_order.push_back(j);
    }
    for (std::size_t j = 0; j < lab_schema.variables.size(); ++j)
        if (std::find(lab_order.begin(), lab_order.end(), j) == lab_order.end()) lab_order.push_back(j);
    std::vector<bool> lab_is_signal(lab_schema.variables.size(), false);
    for (int j = 0; j < spec.lab_signal; ++j) lab_is_signal[lab_order[static_cast<std::size_t>(j)]] = true;

    out.labels = out_dir / "labels.csv";
    out.redcap = out_dir / "redcap.csv";
    out.lab = out_dir / "lab.csv";
    out.images = out_dir / "images.csv";
    auto labels_out = open_out(out.labels);
    auto redcap_out = open_out(out.redcap);
    auto lab_out = open_out(out.lab);
    csv::write_row(labels_out, {"patient_id", "t_stage"});

    csv::Row redcap_header{"patient_id", "age", "sex", "hbv_status"};
    for (int j = 0; j < spec.redcap_signal; ++j)
        redcap_header.push_back(indexed_name(kRedcapSignalNames, std::size(kRedcapSignalNames), j, "signal_marker"));
    for (int j = 0; j < spec.redcap_noise; ++j)
        redcap_header.push_back(indexed_name(kRedcapNoiseNames, std::size(kRedcapNoiseNames), j, "noise_marker"));
    for (const char* extra : {"followup_score", "site_code", "consent_flag", "exam_date"}) redcap_header.push_back(extra);
    csv::write_row(redcap_out, redcap_header);

    csv::Row lab_header{"patient_id"};
    for (const auto& v : lab_schema.variables) lab_header.push_back(v.name);
    csv::write_row(lab_out, lab_header);

    std::vector<dataset::ImageRecord> records;
    for (int p = 0; p < total; ++p) {
        std::mt19937_64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(p)));
        std::normal_distribution<double> n01(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const auto pid = patient_name(p, total);

        PatientDraw d;
        d.cls = static_cast<int>(draw_index(rng, spec.priors));
        d.u = d.cls * s + n01(rng);
        d.v = d.cls * s + n01(rng);
        d.ct_count = static_cast<int>(draw_index(rng, spec.ct_count_probs));
        d.mri_count = static_cast<int>(draw_index(rng, spec.mri_count_probs));
        out.classes.push_back(d.cls);

        // Raw T label consistent with the class, in the cohort's proportions.
        std::string stage = "Null";
        if (p < spec.n_patients) {
            static constexpr double class0[] = {1.0 / 55.0, 53.0 / 55.0, 1.0 / 55.0};
            static constexpr const char* class0_names[] = {"T0", "T1", "TX"};
            static constexpr double class2[] = {13.0 / 18.0, 5.0 / 18.0};
            static constexpr const char* class2_names[] = {"T3", "T4"};
            if (d.cls == 0) {
                stage = class0_names[draw_index(rng, class0)];
            } else if (d.cls == 1) {
                stage = "T2";
            } else {
                stage = class2_names[draw_index(rng, class2)];
            }
        }
        csv::write_row(labels_out, {pid, stage});

        auto maybe = [&](std::string value) { return unit(rng) < spec.missing_rate ? std::string() : value; };
        csv::Row redcap_row{pid};
        redcap_row.push_back(maybe(csv::format_double(round_to(58.0 + 10.0 * n01(rng), 0))));
        redcap_row.push_back(maybe(unit(rng) < 0.8 ? "M" : "F"));
        redcap_row.push_back(maybe(unit(rng) < 0.7 ? "positive" : "negative"));
        for (int j = 0; j < spec.redcap_signal; ++j) {
            const double noise = j == 0 ? 0.0 : 0.5 * n01(rng);
            redcap_row.push_back(maybe(csv::format_double(round_to(10.0 + 2.0 * (d.v + noise), 4))));
        }
        for (int j = 0; j < spec.redcap_noise; ++j) {
            redcap_row.push_back(maybe(csv::format_double(round_to(20.0 + 5.0 * n01(rng), 3))));
        }
        const double followup = round_to(50.0 + 10.0 * n01(rng), 2);
        redcap_row.push_back(unit(rng) < 0.6 ? std::string() : csv::format_double(followup));
        redcap_row.push_back("QH1");
        redcap_row.push_back(unit(rng) < 0.98 ? "yes" : "no");
        {
            const int month = 1 + static_cast<int>(unit(rng) * 12.0) % 12;
            const int day = 1 + static_cast<int>(unit(rng) * 28.0) % 28;
            char buf[16];
            std::snprintf(buf, sizeof buf, "2019-%02d-%02d", month, day);
            redcap_row.push_back(buf);
        }
        csv::write_row(redcap_out, redcap_row);

        csv::Row lab_row{pid};
        for (std::size_t j = 0; j < lab_schema.variables.size(); ++j) {
            const double mid = range_midpoint(lab_schema.variables[j].range);
            double value;
            if (lab_is_signal[j]) {
                value = mid * std::exp(0.35 * (d.v - s + 0.7 * n01(rng)));
            } else {
                value = mid * std::exp(0.2 * n01(rng));
            }
            lab_row.push_back(maybe(csv::format_double(round_to(value, 3))));
        }
        csv::write_row(lab_out, lab_row);

        for (auto modality : {dataset::Modality::CT, dataset::Modality::MRI}) {
            const int count = modality == dataset::Modality::CT ? d.ct_count : d.mri_count;
            for (int k = 0; k < count; ++k) {
                dataset::ImageRecord rec;
                rec.image_id = pid + "_" + std::string(dataset::to_string(modality)) + std::to_string(k);
                rec.patient_id = pid;
                rec.modality = modality;
                rec.phase = k % 2 == 0 ? "arterial" : "venous";
                rec.volume_header = out_dir / "images" / (rec.image_id + "_vol.json");
                rec.volume_raw = out_dir / "images" / (rec.image_id + "_vol.raw");
                rec.mask_header = out_dir / "images" / (rec.image_id + "_mask.json");
                rec.mask_raw = out_dir / "images" / (rec.image_id + "_mask.raw");
                auto img = draw_image(spec, d.u, modality, rng);
                volumes::save_volume(volumes::Volume3D(dims, spacing, std::move(img.voxels)), rec.volume_header,
                                     rec.volume_raw);
                volumes::save_mask(volumes::Mask(dims, std::move(img.mask)), spacing, rec.mask_header, rec.mask_raw);
                records.push_back(std::move(rec));
            }
        }
    }
    labels_out.close();
    redcap_out.close();
    lab_out.close();
    dataset::write_image_manifest(out.images, records);
    out.image_count = records.size();

    json manifest;
    manifest["generator"] = "hccstage-cohortgen";
    manifest["spec"] = {
        {"n_patients", spec.n_patients},
        {"n_unlabeled", spec.n_unlabeled},
        {"priors", spec.priors},
        {"target_bayes_accuracy", spec.target_bayes_accuracy},
        {"ct_count_probs", spec.ct_count_probs},
        {"mri_count_probs", spec.mri_count_probs},
        {"satellite_prob", spec.satellite_prob},
        {"dims", spec.dims},
        {"spacing", spec.spacing},
        {"radius_mm_base", spec.radius_mm_base},
        {"radius_mm_per_unit", spec.radius_mm_per_unit},
        {"radius_mm_min", spec.radius_mm_min},
        {"redcap_signal", spec.redcap_signal},
        {"redcap_noise", spec.redcap_noise},
        {"lab_signal", spec.lab_signal},
        {"missing_rate", spec.missing_rate},
        {"signal_delta", spec.signal_delta},
        {"seed", spec.seed},
    };
    json lesion_means = json::array();
    for (int c = 0; c < 3; ++c) lesion_means.push_back(spec.radius_mm_base + spec.radius_mm_per_unit * c * s);
    json signal_lab = json::array();
    for (int j = 0; j < spec.lab_signal; ++j) signal_lab.push_back(lab_schema.variables[lab_order[j]].name);
    json signal_redcap = json::array();
    for (int j = 0; j < spec.redcap_signal; ++j) signal_redcap.push_back(redcap_header[4 + static_cast<std::size_t>(j)]);
    manifest["model"] = {
        {"separation", s},
        {"bayes_accuracy", bayes_accuracy(spec.priors, s, 2)},
        {"bayes_accuracy_single_block", bayes_accuracy(spec.priors, s, 1)},
        {"lesion_radius_mm_mean_by_class", lesion_means},
        {"signal_columns", {{"redcap", signal_redcap}, {"lab", signal_lab}}},
    };

    std::vector<fs::path> files{out.labels, out.redcap, out.lab, out.images};
    for (const auto& r : records) {
        files.insert(files.end(), {r.volume_header, r.volume_raw, r.mask_header, r.mask_raw});
    }
    json listed = json::array();
    for (const auto& f : files) {
        listed.push_back({{"path", f.lexically_relative(out_dir).generic_string()}, {"sha256", sha256_file(f)}});
    }
    manifest["files"] = listed;

    out.manifest = out_dir / "manifest.json";
    auto mout = open_out(out.manifest);
    mout << manifest.dump(2) << '\n';
    return out;
}

}  // namespace hccstage::cohortgen
