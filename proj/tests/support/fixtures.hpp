#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hccstage/cohortgen.hpp"
#include "hccstage/dataset.hpp"
#include "hccstage/volumes.hpp"

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

/// ROI from an nx*ny*nz level grid (x fastest, 0 = outside), padded by one
/// background voxel like the library's own crops. Intensities equal levels.
hccstage::volumes::DiscretizedRoi make_roi(int nx, int ny, int nz, const std::vector<int>& levels, int ng);

/// Small, fast cohort for integration tests.
hccstage::cohortgen::CohortSpec small_spec(int patients, std::uint64_t seed);

/// In-memory dataset: labels cycle 0,1,2; one CT feature and one Redcap/Lab
/// column carry `image_signal` / `tabular_signal` times the label plus N(0,1).
/// Some patients lack MRI, one lacks a lab row, and a few cells are missing.
hccstage::dataset::Dataset toy_dataset(int patients, double image_signal, double tabular_signal, std::uint64_t seed);

}  // namespace fixtures
