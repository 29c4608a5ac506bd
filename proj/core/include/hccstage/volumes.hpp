#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hccstage::volumes {

/// Grid extent; voxels are stored x-fastest: index = x + nx * (y + ny * z).
struct Dims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    std::size_t index(int x, int y, int z) const noexcept {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * z);
    }
    bool contains(int x, int y, int z) const noexcept {
        return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
    }
    std::array<int, 3> coords(std::size_t index) const noexcept {
        const auto sx = static_cast<std::size_t>(nx);
        const auto sxy = sx * static_cast<std::size_t>(ny);
        return {static_cast<int>(index % sx), static_cast<int>((index / sx) % ny), static_cast<int>(index / sxy)};
    }
    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Voxel edge lengths in millimetres.
struct Spacing {
    double sx = 1.0;
    double sy = 1.0;
    double sz = 1.0;
    friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Offsets of the 26-neighbourhood, and the 13 of them that are unique up to sign.
inline constexpr std::array<std::array<int, 3>, 13> kDirections13{{
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
    {1, 1, 0}, {1, -1, 0}, {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1},
    {1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {1, -1, -1},
}};

inline constexpr std::array<std::array<int, 3>, 26> kNeighbors26 = [] {
    std::array<std::array<int, 3>, 26> out{};
    std::size_t n = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (dx || dy || dz) out[n++] = {dx, dy, dz};
    return out;
}();

enum class DType { F32LE, U8 };

class Volume3D {
public:
    Volume3D() = default;
    /// Validates positive dims, positive spacing, finite values and size.
    Volume3D(Dims dims, Spacing spacing, std::vector<double> voxels);

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    std::span<const double> voxels() const noexcept { return voxels_; }
    double at(int x, int y, int z) const noexcept { return voxels_[dims_.index(x, y, z)]; }

private:
    Dims dims_;
    Spacing spacing_;
    std::vector<double> voxels_;
};

/// Integer-labelled segmentation; 0 is background.
class Mask {
public:
    Mask() = default;
    Mask(Dims dims, std::vector<std::uint8_t> labels);

    const Dims& dims() const noexcept { return dims_; }
    std::span<const std::uint8_t> labels() const noexcept { return labels_; }
    std::uint8_t at(int x, int y, int z) const noexcept { return labels_[dims_.index(x, y, z)]; }
    std::size_t nonzero_count() const noexcept;

private:
    Dims dims_;
    std::vector<std::uint8_t> labels_;
};

// MVOL: JSON header {"dims":[x,y,z],"spacing":[sx,sy,sz],"dtype":"f32le"|"u8"}
// next to a raw little-endian, x-fastest binary file.
Volume3D load_volume(const std::filesystem::path& header_path, const std::filesystem::path& raw_path);
Mask load_mask(const std::filesystem::path& header_path, const std::filesystem::path& raw_path);
void save_volume(const Volume3D& volume, const std::filesystem::path& header_path,
                 const std::filesystem::path& raw_path, DType dtype = DType::F32LE);
void save_mask(const Mask& mask, Spacing spacing, const std::filesystem::path& header_path,
               const std::filesystem::path& raw_path);

/// Binary mask of the largest 26-connected component of non-zero voxels.
/// Ties go to the component containing the smallest linear voxel index.
/// Throws ErrorKind::NoLesion for an empty mask.
Mask largest_lesion(const Mask& mask);

/// Gray levels of an ROI on a cropped grid padded by one background voxel on
/// every side, so every 26-neighbour of an ROI voxel is addressable.
struct DiscretizedRoi {
    Dims dims;                             // cropped grid
    std::array<int, 3> origin{};           // cropped (0,0,0) in source grid coordinates
    int ng = 0;
    std::vector<int> levels;               // per cropped voxel; 0 outside the ROI
    std::vector<std::array<int, 3>> roi_coords;  // cropped coordinates, ascending linear index
    std::vector<double> intensities;       // raw values, same order as roi_coords

    std::size_t voxel_count() const noexcept { return roi_coords.size(); }
    int level(int x, int y, int z) const noexcept { return levels[dims.index(x, y, z)]; }
};

/// Fixed bin count: level = 1 + floor(ng * (x - min) / (max - min)), clamped
/// to ng; a constant ROI maps to level 1.
std::vector<int> bin_values(std::span<const double> values, int ng);

DiscretizedRoi discretize(const Volume3D& volume, const Mask& roi, int ng);

}  // namespace hccstage::volumes
