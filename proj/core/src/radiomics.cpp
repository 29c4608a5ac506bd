#include "hccstage/radiomics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "hccstage/error.hpp"

namespace hccstage::radiomics {

using volumes::DiscretizedRoi;

namespace {

constexpr std::array<std::string_view, 16> kFirstOrderNames{
    "energy", "entropy", "minimum", "maximum", "mean", "median", "range", "variance",
    "skewness", "kurtosis", "rms", "uniformity", "p10", "p90", "iqr", "mad"};
constexpr std::array<std::string_view, 10> kShapeNames{
    "volume", "surface_area", "surface_volume_ratio", "sphericity", "maximum_3d_diameter",
    "major_axis_length", "minor_axis_length", "least_axis_length", "elongation", "flatness"};
constexpr std::array<std::string_view, 10> kGlcmNames{
    "energy", "contrast", "correlation", "joint_entropy", "homogeneity",
    "dissimilarity", "cluster_shade", "cluster_prominence", "sum_average", "maximum_probability"};
constexpr std::array<std::string_view, 7> kGlrlmNames{"sre", "lre", "gln", "rln", "rp", "lglre", "hglre"};
constexpr std::array<std::string_view, 7> kGlszmNames{"sae", "lae", "gln", "szn", "zp", "lglze", "hglze"};
constexpr std::array<std::string_view, 6> kGldmNames{"sde", "lde", "gln", "dn", "lgle", "hgle"};
constexpr std::array<std::string_view, 5> kNgtdmNames{"coarseness", "contrast", "busyness", "complexity", "strength"};

constexpr std::array<FeatureClass, 7> kClassOrder{FeatureClass::FirstOrder, FeatureClass::Shape, FeatureClass::GLCM,
                                                   FeatureClass::GLRLM,      FeatureClass::GLSZM, FeatureClass::GLDM,
                                                   FeatureClass::NGTDM};

std::string_view prefix(FeatureClass cls) noexcept {
    switch (cls) {
        case FeatureClass::FirstOrder: return "firstorder";
        case FeatureClass::Shape: return "shape";
        case FeatureClass::GLCM: return "glcm";
        case FeatureClass::GLRLM: return "glrlm";
        case FeatureClass::GLSZM: return "glszm";
        case FeatureClass::GLDM: return "gldm";
        case FeatureClass::NGTDM: return "ngtdm";
    }
    return "";
}

// Linear-interpolated percentile of sorted data (q in [0, 100]).
double percentile(const std::vector<double>& sorted, double q) {
    const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Occupancy of a padded grid: true inside the ROI.
struct Occupancy {
    volumes::Dims dims;
    std::vector<unsigned char> inside;
    std::vector<std::array<int, 3>> coords;
    bool at(int x, int y, int z) const {
        return dims.contains(x, y, z) && inside[dims.index(x, y, z)] != 0;
    }
};

Occupancy occupancy_from_roi(const DiscretizedRoi& roi) {
    Occupancy occ;
    occ.dims = roi.dims;
    occ.inside.resize(roi.levels.size());
    for (std::size_t i = 0; i < roi.levels.size(); ++i) occ.inside[i] = roi.levels[i] > 0 ? 1 : 0;
    occ.coords = roi.roi_coords;
    return occ;
}

FeatureSet shape_from_occupancy(const Occupancy& occ, const volumes::Spacing& sp) {
    if (occ.coords.empty()) raise(ErrorKind::NoLesion, "ROI is empty");
    const double n = static_cast<double>(occ.coords.size());
    const double volume = n * sp.sx * sp.sy * sp.sz;
    const std::array<double, 3> face_area{sp.sy * sp.sz, sp.sx * sp.sz, sp.sx * sp.sy};
    const std::array<double, 3> step{sp.sx, sp.sy, sp.sz};

    auto value = [&](int x, int y, int z) { return occ.at(x, y, z) ? 1.0 : 0.0; };
    auto gradient = [&](int x, int y, int z) {
        return std::array<double, 3>{(value(x + 1, y, z) - value(x - 1, y, z)) / (2.0 * step[0]),
                                     (value(x, y + 1, z) - value(x, y - 1, z)) / (2.0 * step[1]),
                                     (value(x, y, z + 1) - value(x, y, z - 1)) / (2.0 * step[2])};
    };

    double area = 0.0;
    double weighted_area = 0.0;
    std::vector<std::array<int, 3>> boundary;
    for (const auto& c : occ.coords) {
        bool on_boundary = false;
        for (int axis = 0; axis < 3; ++axis) {
            for (int sign : {-1, 1}) {
                std::array<int, 3> q = c;
                q[axis] += sign;
                if (occ.at(q[0], q[1], q[2])) continue;
                on_boundary = true;
                area += face_area[axis];
                // Each exposed face projects a patch of true surface with unit
                // normal n onto the axis planes; the faces of that patch sum
                // to |n|_1 times its area, so weight by |n|_2 / |n|_1.
                const auto g0 = gradient(c[0], c[1], c[2]);
                const auto g1 = gradient(q[0], q[1], q[2]);
                const std::array<double, 3> g{g0[0] + g1[0], g0[1] + g1[1], g0[2] + g1[2]};
                const double l1 = std::abs(g[0]) + std::abs(g[1]) + std::abs(g[2]);
                const double l2 = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
                weighted_area += face_area[axis] * (l1 > 0.0 ? l2 / l1 : 1.0);
            }
        }
        if (on_boundary) boundary.push_back(c);
    }

    double max_d2 = 0.0;
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        for (std::size_t j = i + 1; j < boundary.size(); ++j) {
            const double dx = (boundary[i][0] - boundary[j][0]) * sp.sx;
            const double dy = (boundary[i][1] - boundary[j][1]) * sp.sy;
            const double dz = (boundary[i][2] - boundary[j][2]) * sp.sz;
            max_d2 = std::max(max_d2, dx * dx + dy * dy + dz * dz);
        }
    }

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& c : occ.coords) mean += Eigen::Vector3d(c[0] * sp.sx, c[1] * sp.sy, c[2] * sp.sz);
    mean /= n;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& c : occ.coords) {
        const Eigen::Vector3d v = Eigen::Vector3d(c[0] * sp.sx, c[1] * sp.sy, c[2] * sp.sz) - mean;
        cov += v * v.transpose();
    }
    cov /= n;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov, Eigen::EigenvaluesOnly);
    std::array<double, 3> lambda{};
    for (int i = 0; i < 3; ++i) lambda[static_cast<std::size_t>(i)] = std::max(0.0, solver.eigenvalues()[2 - i]);

    const double sphericity =
        std::cbrt(std::numbers::pi) * std::pow(6.0 * volume, 2.0 / 3.0) / weighted_area;
    FeatureSet out{FeatureClass::Shape, {}};
    out.values = {volume,
                  area,
                  area / volume,
                  sphericity,
                  std::sqrt(max_d2),
                  4.0 * std::sqrt(lambda[0]),
                  4.0 * std::sqrt(lambda[1]),
                  4.0 * std::sqrt(lambda[2]),
                  lambda[0] > 0.0 ? std::sqrt(lambda[1] / lambda[0]) : 0.0,
                  lambda[0] > 0.0 ? std::sqrt(lambda[2] / lambda[0]) : 0.0};
    return out;
}

}  // namespace

std::string_view to_string(FeatureClass cls) noexcept {
    switch (cls) {
        case FeatureClass::FirstOrder: return "FirstOrder";
        case FeatureClass::Shape: return "Shape";
        case FeatureClass::GLCM: return "GLCM";
        case FeatureClass::GLRLM: return "GLRLM";
        case FeatureClass::GLSZM: return "GLSZM";
        case FeatureClass::GLDM: return "GLDM";
        case FeatureClass::NGTDM: return "NGTDM";
    }
    return "";
}

std::span<const std::string_view> class_feature_names(FeatureClass cls) noexcept {
    switch (cls) {
        case FeatureClass::FirstOrder: return kFirstOrderNames;
        case FeatureClass::Shape: return kShapeNames;
        case FeatureClass::GLCM: return kGlcmNames;
        case FeatureClass::GLRLM: return kGlrlmNames;
        case FeatureClass::GLSZM: return kGlszmNames;
        case FeatureClass::GLDM: return kGldmNames;
        case FeatureClass::NGTDM: return kNgtdmNames;
    }
    return {};
}

const std::vector<FeatureId>& feature_manifest() {
    static const std::vector<FeatureId> manifest = [] {
        std::vector<FeatureId> out;
        for (auto cls : kClassOrder) {
            for (auto name : class_feature_names(cls)) {
                out.push_back({cls, std::string(prefix(cls)) + "_" + std::string(name)});
            }
        }
        return out;
    }();
    return manifest;
}

double FeatureSet::get(std::string_view name) const {
    const auto names = class_feature_names(cls);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return values.at(i);
    }
    raise(ErrorKind::Input, "no feature '" + std::string(name) + "' in class " + std::string(to_string(cls)));
}

// ---------------------------------------------------------------------------

FeatureSet first_order(std::span<const double> intensities, int ng) {
    if (intensities.empty()) raise(ErrorKind::NoLesion, "ROI is empty");
    const double n = static_cast<double>(intensities.size());
    std::vector<double> sorted(intensities.begin(), intensities.end());
    std::sort(sorted.begin(), sorted.end());

    double energy = 0.0;
    double sum = 0.0;
    for (double x : intensities) {
        energy += x * x;
        sum += x;
    }
    const double mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
    for (double x : intensities) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;
    const double skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;

    const auto levels = volumes::bin_values(intensities, ng);
    std::vector<double> hist(static_cast<std::size_t>(ng), 0.0);
    for (int l : levels) hist[static_cast<std::size_t>(l - 1)] += 1.0;
    double entropy = 0.0, uniformity = 0.0;
    for (double c : hist) {
        if (c <= 0.0) continue;
        const double p = c / n;
        entropy -= p * std::log2(p);
        uniformity += p * p;
    }

    FeatureSet out{FeatureClass::FirstOrder, {}};
    out.values = {energy,
                  entropy,
                  sorted.front(),
                  sorted.back(),
                  mean,
                  percentile(sorted, 50.0),
                  sorted.back() - sorted.front(),
                  m2,
                  skewness,
                  kurtosis,
                  std::sqrt(energy / n),
                  uniformity,
                  percentile(sorted, 10.0),
                  percentile(sorted, 90.0),
                  percentile(sorted, 75.0) - percentile(sorted, 25.0),
                  mad};
    return out;
}

FeatureSet shape3d(const volumes::Mask& roi, volumes::Spacing spacing) {
    const auto& d = roi.dims();
    Occupancy occ;
    occ.dims = d;
    occ.inside.resize(d.count());
    const auto labels = roi.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        occ.inside[i] = labels[i] != 0 ? 1 : 0;
        if (labels[i] != 0) occ.coords.push_back(d.coords(i));
    }
    return shape_from_occupancy(occ, spacing);
}

FeatureSet shape3d(const DiscretizedRoi& roi, volumes::Spacing spacing) {
    return shape_from_occupancy(occupancy_from_roi(roi), spacing);
}

FeatureSet glcm_features(const DiscretizedRoi& roi) {
    const auto counts = glcm_counts(roi);
    const std::size_t ng = static_cast<std::size_t>(roi.ng);
    std::vector<double> acc(kGlcmNames.size(), 0.0);
    int used = 0;
    for (const auto& c : counts) {
        const double total = c.sum();
        if (total <= 0.0) continue;
        ++used;
        double mu_i = 0.0, mu_j = 0.0;
        for (std::size_t i = 0; i < ng; ++i)
            for (std::size_t j = 0; j < ng; ++j) {
                const double p = c(i, j) / total;
                mu_i += static_cast<double>(i + 1) * p;
                mu_j += static_cast<double>(j + 1) * p;
            }
        double var_i = 0.0, var_j = 0.0, cross = 0.0;
        double energy = 0.0, contrast = 0.0, entropy = 0.0, homogeneity = 0.0, dissimilarity = 0.0;
        double shade = 0.0, prominence = 0.0, sum_avg = 0.0, max_p = 0.0;
        for (std::size_t i = 0; i < ng; ++i) {
            for (std::size_t j = 0; j < ng; ++j) {
                const double p = c(i, j) / total;
                if (p <= 0.0) continue;
                const double li = static_cast<double>(i + 1), lj = static_cast<double>(j + 1);
                const double diff = li - lj;
                const double s = li + lj - mu_i - mu_j;
                var_i += (li - mu_i) * (li - mu_i) * p;
                var_j += (lj - mu_j) * (lj - mu_j) * p;
                cross += li * lj * p;
                energy += p * p;
                contrast += diff * diff * p;
                entropy -= p * std::log2(p);
                homogeneity += p / (1.0 + std::abs(diff));
                dissimilarity += std::abs(diff) * p;
                shade += s * s * s * p;
                prominence += s * s * s * s * p;
                sum_avg += (li + lj) * p;
                max_p = std::max(max_p, p);
            }
        }
        const double sigma = std::sqrt(var_i) * std::sqrt(var_j);
        const double correlation = sigma > kNgtdmEpsilon ? (cross - mu_i * mu_j) / sigma : 0.0;
        const std::array<double, 10> v{energy, contrast, correlation, entropy, homogeneity,
                                       dissimilarity, shade, prominence, sum_avg, max_p};
        for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
    }
    if (used == 0) raise(ErrorKind::FeatureUndefined, "GLCM has no voxel pairs in any direction");
    for (auto& v : acc) v /= used;
    return {FeatureClass::GLCM, std::move(acc)};
}

namespace {

// Shared emphasis / non-uniformity statistics of GLRLM, GLSZM and GLDM
// matrices: rows are gray levels, column c has size (run, zone, dependence)
// c + 1.
struct EmphasisStats {
    double total = 0.0;
    double small = 0.0;   // sum P / size^2
    double large = 0.0;   // sum P * size^2
    double gray_nu = 0.0; // sum_i (sum_c P)^2
    double size_nu = 0.0; // sum_c (sum_i P)^2
    double low_gray = 0.0;
    double high_gray = 0.0;
};

EmphasisStats emphasis(const LevelMatrix& m) {
    EmphasisStats e;
    std::vector<double> col_sum(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double level = static_cast<double>(r + 1);
        double row_sum = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            if (v == 0.0) continue;
            const double size = static_cast<double>(c + 1);
            e.total += v;
            e.small += v / (size * size);
            e.large += v * size * size;
            e.low_gray += v / (level * level);
            e.high_gray += v * level * level;
            row_sum += v;
            col_sum[c] += v;
        }
        e.gray_nu += row_sum * row_sum;
    }
    for (double v : col_sum) e.size_nu += v * v;
    return e;
}

}  // namespace

FeatureSet glrlm_features(const DiscretizedRoi& roi) {
    const auto e = emphasis(glrlm_counts(roi));
    const double np = static_cast<double>(roi.voxel_count());
    const double nr = e.total;
    return {FeatureClass::GLRLM,
            {e.small / nr, e.large / nr, e.gray_nu / nr, e.size_nu / nr, nr / (np * 13.0), e.low_gray / nr,
             e.high_gray / nr}};
}

FeatureSet glszm_features(const DiscretizedRoi& roi) {
    const auto e = emphasis(glszm_counts(roi));
    const double np = static_cast<double>(roi.voxel_count());
    const double nz = e.total;
    return {FeatureClass::GLSZM,
            {e.small / nz, e.large / nz, e.gray_nu / nz, e.size_nu / nz, nz / np, e.low_gray / nz, e.high_gray / nz}};
}

FeatureSet gldm_features(const DiscretizedRoi& roi, int alpha) {
    // Column k holds dependence k, so emphasis() already weights by k + 1.
    const auto e = emphasis(gldm_counts(roi, alpha));
    const double nz = e.total;
    return {FeatureClass::GLDM,
            {e.small / nz, e.large / nz, e.gray_nu / nz, e.size_nu / nz, e.low_gray / nz, e.high_gray / nz}};
}

FeatureSet ngtdm_features(const DiscretizedRoi& roi) {
    const auto stats = ngtdm_stats(roi);
    const std::size_t ng = stats.n.size();
    const double nvp = std::accumulate(stats.n.begin(), stats.n.end(), 0.0);
    FeatureSet out{FeatureClass::NGTDM, {0.0, 0.0, 0.0, 0.0, 0.0}};
    if (nvp <= 0.0) {
        // No voxel has an in-ROI neighbour: only coarseness is meaningful.
        out.values[0] = kCoarsenessCap;
        return out;
    }
    std::vector<double> p(ng);
    std::vector<std::size_t> present;
    for (std::size_t i = 0; i < ng; ++i) {
        p[i] = stats.n[i] / nvp;
        if (p[i] > 0.0) present.push_back(i);
    }
    const double s_total = std::accumulate(stats.s.begin(), stats.s.end(), 0.0);
    double ps = 0.0;
    for (auto i : present) ps += p[i] * stats.s[i];

    const double coarseness = ps > 0.0 ? std::min(kCoarsenessCap, 1.0 / (kNgtdmEpsilon + ps)) : kCoarsenessCap;

    const double ngp = static_cast<double>(present.size());
    double pair_sq = 0.0, busy_den = 0.0, complexity = 0.0, strength_num = 0.0;
    for (auto i : present) {
        for (auto j : present) {
            const double li = static_cast<double>(i + 1), lj = static_cast<double>(j + 1);
            pair_sq += p[i] * p[j] * (li - lj) * (li - lj);
            busy_den += std::abs(li * p[i] - lj * p[j]);
            complexity += std::abs(li - lj) * (p[i] * stats.s[i] + p[j] * stats.s[j]) / (p[i] + p[j]);
            strength_num += (p[i] + p[j]) * (li - lj) * (li - lj);
        }
    }
    const double contrast = ngp > 1.0 ? pair_sq / (ngp * (ngp - 1.0)) * s_total / nvp : 0.0;
    const double busyness = busy_den > 0.0 ? ps / (kNgtdmEpsilon + busy_den) : 0.0;
    complexity /= nvp;
    const double strength = s_total > 0.0 ? strength_num / (kNgtdmEpsilon + s_total) : 0.0;
    out.values = {coarseness, contrast, busyness, complexity, strength};
    return out;
}

FeatureVector extract_feature_vector(const volumes::Volume3D& volume, const volumes::Mask& mask,
                                     const ExtractionParams& params, std::string_view sample_id) {
    FeatureVector out;
    out.sample_id = std::string(sample_id);
    try {
        if (!(volume.dims() == mask.dims())) raise(ErrorKind::Input, "volume and mask dims differ");
        const auto lesion = volumes::largest_lesion(mask);
        const auto roi = volumes::discretize(volume, lesion, params.ng);
        out.values.reserve(kFeatureCount);
        const FeatureSet sets[] = {first_order(roi.intensities, params.ng),
                                   shape3d(roi, volume.spacing()),
                                   glcm_features(roi),
                                   glrlm_features(roi),
                                   glszm_features(roi),
                                   gldm_features(roi, params.gldm_alpha),
                                   ngtdm_features(roi)};
        for (const auto& s : sets) out.values.insert(out.values.end(), s.values.begin(), s.values.end());
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            if (!std::isfinite(out.values[i])) {
                raise(ErrorKind::FeatureUndefined, "non-finite " + feature_manifest()[i].name);
            }
        }
    } catch (const Error& e) {
        if (sample_id.empty()) throw;
        throw Error(e.kind(), "sample '" + std::string(sample_id) + "': " + e.detail());
    }
    return out;
}

}  // namespace hccstage::radiomics
