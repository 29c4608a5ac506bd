#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hccstage/texture.hpp"
#include "hccstage/volumes.hpp"

namespace hccstage::radiomics {

enum class FeatureClass { FirstOrder, Shape, GLCM, GLRLM, GLSZM, GLDM, NGTDM };

std::string_view to_string(FeatureClass cls) noexcept;

/// Unqualified feature names of one class, in manifest order.
std::span<const std::string_view> class_feature_names(FeatureClass cls) noexcept;

struct FeatureId {
    FeatureClass cls;
    std::string name;  // qualified, e.g. "glcm_contrast"; unique across the manifest
};

/// The fixed 61-entry feature order (16 first-order, 10 shape, 10 GLCM,
/// 7 GLRLM, 7 GLSZM, 6 GLDM, 5 NGTDM).
const std::vector<FeatureId>& feature_manifest();
inline constexpr std::size_t kFeatureCount = 61;

/// Values of one feature class, aligned with class_feature_names(cls).
struct FeatureSet {
    FeatureClass cls;
    std::vector<double> values;

    double get(std::string_view name) const;
};

// Texture constants.
inline constexpr double kNgtdmEpsilon = 1e-12;
inline constexpr double kCoarsenessCap = 1e6;

/// Intensity statistics. The entropy and uniformity use the `ng`-bin
/// fixed-count histogram of the same intensities.
FeatureSet first_order(std::span<const double> intensities, int ng);

FeatureSet shape3d(const volumes::Mask& roi, volumes::Spacing spacing);
FeatureSet shape3d(const volumes::DiscretizedRoi& roi, volumes::Spacing spacing);

/// Throws ErrorKind::FeatureUndefined when no offset has a voxel pair.
FeatureSet glcm_features(const volumes::DiscretizedRoi& roi);
FeatureSet glrlm_features(const volumes::DiscretizedRoi& roi);
FeatureSet glszm_features(const volumes::DiscretizedRoi& roi);
FeatureSet gldm_features(const volumes::DiscretizedRoi& roi, int alpha = 0);
FeatureSet ngtdm_features(const volumes::DiscretizedRoi& roi);

struct ExtractionParams {
    int ng = 32;
    int gldm_alpha = 0;
};

struct FeatureVector {
    std::string sample_id;
    std::vector<double> values;  // aligned with feature_manifest()
};

/// largest lesion -> discretize -> all seven classes in manifest order.
/// Errors are re-raised with the sample id prepended.
FeatureVector extract_feature_vector(const volumes::Volume3D& volume, const volumes::Mask& mask,
                                     const ExtractionParams& params, std::string_view sample_id = {});

}  // namespace hccstage::radiomics
