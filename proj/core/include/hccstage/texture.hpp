#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "hccstage/volumes.hpp"

namespace hccstage::radiomics {

/// Small dense row-major matrix of counts. Row r corresponds to gray level r+1.
class LevelMatrix {
public:
    LevelMatrix() = default;
    LevelMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double sum() const noexcept;

    friend bool operator==(const LevelMatrix&, const LevelMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Symmetric co-occurrence counts (ng x ng) for each of the 13 unit offsets:
/// C_d + C_d^T, where C_d(a, b) counts ROI voxel pairs (p, p + d) at levels (a, b).
std::array<LevelMatrix, 13> glcm_counts(const volumes::DiscretizedRoi& roi);

/// Run-length counts (ng x max_run) along one of the 13 directions; column c
/// holds runs of length c + 1.
LevelMatrix glrlm_counts(const volumes::DiscretizedRoi& roi, std::size_t direction);
/// Sum over all 13 directions.
LevelMatrix glrlm_counts(const volumes::DiscretizedRoi& roi);

/// Zone counts (ng x Np) of 26-connected equal-level zones; column c holds
/// zones of size c + 1.
LevelMatrix glszm_counts(const volumes::DiscretizedRoi& roi);

/// Dependence counts (ng x 27); column k holds voxels with k in-ROI
/// 26-neighbours whose level differs by at most alpha.
LevelMatrix gldm_counts(const volumes::DiscretizedRoi& roi, int alpha = 0);

/// Per gray level: n = voxels with at least one in-ROI neighbour,
/// s = sum of |level - mean neighbour level| over those voxels.
struct NgtdmStats {
    std::vector<double> n;
    std::vector<double> s;
};
NgtdmStats ngtdm_stats(const volumes::DiscretizedRoi& roi);

}  // namespace hccstage::radiomics
