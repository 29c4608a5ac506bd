#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace fixtures {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("hccstage_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

hccstage::volumes::DiscretizedRoi make_roi(int nx, int ny, int nz, const std::vector<int>& levels, int ng) {
    hccstage::volumes::DiscretizedRoi roi;
    roi.dims = {nx + 2, ny + 2, nz + 2};
    roi.ng = ng;
    roi.levels.assign(roi.dims.count(), 0);
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const int l = levels[static_cast<std::size_t>(x + nx * (y + ny * z))];
                roi.levels[roi.dims.index(x + 1, y + 1, z + 1)] = l;
            }
    for (std::size_t i = 0; i < roi.levels.size(); ++i) {
        if (roi.levels[i] == 0) continue;
        roi.roi_coords.push_back(roi.dims.coords(i));
        roi.intensities.push_back(roi.levels[i]);
    }
    return roi;
}

hccstage::cohortgen::CohortSpec small_spec(int patients, std::uint64_t seed) {
    hccstage::cohortgen::CohortSpec spec;
    spec.n_patients = patients;
    spec.seed = seed;
    spec.dims = {24, 24, 16};
    spec.spacing = {1.0, 1.0, 1.5};
    spec.radius_mm_base = 4.0;
    spec.radius_mm_per_unit = 0.5;
    spec.radius_mm_min = 2.0;
    spec.ct_count_probs = {0.0, 0.7, 0.3};
    spec.mri_count_probs = {0.0, 0.6, 0.4};
    return spec;
}

hccstage::dataset::Dataset toy_dataset(int patients, double image_signal, double tabular_signal,
                                       std::uint64_t seed) {
    using namespace hccstage;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    dataset::Dataset d;
    std::vector<tabular::PatientImages> images;
    std::vector<std::optional<double>> signal, noise, afp, alb;
    std::vector<std::optional<std::string>> sex;
    std::vector<std::string> lab_ids;
    for (int i = 0; i < patients; ++i) {
        std::ostringstream id;
        id << "p" << std::setw(3) << std::setfill('0') << i;
        const int label = i % 3;
        d.patients.push_back(id.str());
        d.labels.push_back(label);

        tabular::PatientImages img{id.str(), {}, {}};
        const int ct_count = i % 4 == 0 ? 2 : 1;
        const int mri_count = i % 5 == 0 ? 0 : 1 + i % 2;
        for (int c = 0; c < ct_count + mri_count; ++c) {
            std::vector<double> f(radiomics::kFeatureCount);
            for (auto& v : f) v = z(rng);
            f[0] += image_signal * label;
            const auto image_id = id.str() + (c < ct_count ? "_ct" : "_mr") + std::to_string(c);
            if (c < ct_count) {
                img.ct_ids.push_back(image_id);
                d.ct_features[image_id] = std::move(f);
            } else {
                img.mri_ids.push_back(image_id);
                d.mri_features[image_id] = std::move(f);
            }
        }
        images.push_back(img);

        signal.push_back(i % 11 == 5 ? std::nullopt : std::optional<double>(tabular_signal * label + z(rng)));
        noise.push_back(z(rng));
        sex.push_back(i % 2 ? "male" : "female");
        if (i != 1) {
            lab_ids.push_back(id.str());
            afp.push_back(std::exp(0.5 * tabular_signal * label + 0.5 * z(rng)));
            alb.push_back(i % 9 == 4 ? std::nullopt : std::optional<double>(40.0 + z(rng)));
        }
    }
    d.redcap = tabular::Table(d.patients, {tabular::Column::make_numeric("signal", signal),
                                           tabular::Column::make_numeric("noise", noise),
                                           tabular::Column::make_categorical("sex", sex)});
    d.lab = tabular::Table(lab_ids, {tabular::Column::make_numeric("AFP", afp),
                                     tabular::Column::make_numeric("Albumin", alb)});
    d.samples = tabular::augment_pairs(images);
    return d;
}

}  // namespace fixtures
