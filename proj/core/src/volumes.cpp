#include "hccstage/volumes.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "hccstage/error.hpp"

namespace hccstage::volumes {

using nlohmann::json;

namespace {

void check_dims(const Dims& d) {
    if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0) raise(ErrorKind::Format, "dims must be positive");
}

struct Header {
    Dims dims;
    Spacing spacing;
    DType dtype = DType::F32LE;
};

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Header read_header(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_bytes(path));
    } catch (const json::exception& e) {
        raise(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    Header h;
    try {
        auto dims = j.at("dims").get<std::vector<int>>();
        auto spacing = j.at("spacing").get<std::vector<double>>();
        auto dtype = j.at("dtype").get<std::string>();
        if (dims.size() != 3 || spacing.size() != 3) raise(ErrorKind::Format, path.string() + ": dims/spacing need 3 entries");
        h.dims = {dims[0], dims[1], dims[2]};
        h.spacing = {spacing[0], spacing[1], spacing[2]};
        if (dtype == "f32le") {
            h.dtype = DType::F32LE;
        } else if (dtype == "u8") {
            h.dtype = DType::U8;
        } else {
            raise(ErrorKind::Format, path.string() + ": unsupported dtype '" + dtype + "'");
        }
    } catch (const json::exception& e) {
        raise(ErrorKind::Format, path.string() + ": " + e.what());
    }
    check_dims(h.dims);
    if (!(h.spacing.sx > 0 && h.spacing.sy > 0 && h.spacing.sz > 0)) {
        raise(ErrorKind::Format, path.string() + ": spacing must be positive");
    }
    return h;
}

std::size_t element_size(DType t) { return t == DType::F32LE ? 4 : 1; }

std::vector<double> decode(const std::string& raw, const Header& h, const std::filesystem::path& raw_path) {
    const std::size_t n = h.dims.count();
    const std::size_t expected = n * element_size(h.dtype);
    if (raw.size() != expected) {
        raise(ErrorKind::Format, raw_path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                                     std::to_string(raw.size()));
    }
    std::vector<double> out(n);
    const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
    if (h.dtype == DType::U8) {
        for (std::size_t i = 0; i < n; ++i) out[i] = bytes[i];
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned char* b = bytes + 4 * i;
            const std::uint32_t word = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                                       (static_cast<std::uint32_t>(b[2]) << 16) |
                                       (static_cast<std::uint32_t>(b[3]) << 24);
            out[i] = static_cast<double>(std::bit_cast<float>(word));
        }
    }
    return out;
}

void write_header(const std::filesystem::path& path, const Dims& d, const Spacing& s, DType t) {
    json j;
    j["dims"] = {d.nx, d.ny, d.nz};
    j["spacing"] = {s.sx, s.sy, s.sz};
    j["dtype"] = t == DType::F32LE ? "f32le" : "u8";
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
    out << j.dump() << '\n';
}

void write_raw(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

Volume3D::Volume3D(Dims dims, Spacing spacing, std::vector<double> voxels)
    : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)) {
    check_dims(dims_);
    if (!(spacing_.sx > 0 && spacing_.sy > 0 && spacing_.sz > 0)) raise(ErrorKind::Format, "spacing must be positive");
    if (voxels_.size() != dims_.count()) raise(ErrorKind::Format, "voxel count does not match dims");
    if (!std::all_of(voxels_.begin(), voxels_.end(), [](double v) { return std::isfinite(v); })) {
        raise(ErrorKind::Format, "volume contains non-finite values");
    }
}

Mask::Mask(Dims dims, std::vector<std::uint8_t> labels) : dims_(dims), labels_(std::move(labels)) {
    check_dims(dims_);
    if (labels_.size() != dims_.count()) raise(ErrorKind::Format, "mask voxel count does not match dims");
}

std::size_t Mask::nonzero_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(), [](auto v) { return v != 0; }));
}

Volume3D load_volume(const std::filesystem::path& header_path, const std::filesystem::path& raw_path) {
    const auto h = read_header(header_path);
    return Volume3D(h.dims, h.spacing, decode(read_bytes(raw_path), h, raw_path));
}

Mask load_mask(const std::filesystem::path& header_path, const std::filesystem::path& raw_path) {
    const auto h = read_header(header_path);
    if (h.dtype != DType::U8) raise(ErrorKind::Format, header_path.string() + ": masks must use dtype u8");
    auto raw = read_bytes(raw_path);
    if (raw.size() != h.dims.count()) {
        raise(ErrorKind::Format, raw_path.string() + ": expected " + std::to_string(h.dims.count()) +
                                     " bytes, found " + std::to_string(raw.size()));
    }
    return Mask(h.dims, std::vector<std::uint8_t>(raw.begin(), raw.end()));
}

void save_volume(const Volume3D& volume, const std::filesystem::path& header_path,
                 const std::filesystem::path& raw_path, DType dtype) {
    std::string bytes;
    const auto voxels = volume.voxels();
    if (dtype == DType::U8) {
        bytes.resize(voxels.size());
        for (std::size_t i = 0; i < voxels.size(); ++i) {
            const double v = voxels[i];
            if (v < 0 || v > 255 || v != std::floor(v)) raise(ErrorKind::Format, "value not representable as u8");
            bytes[i] = static_cast<char>(static_cast<unsigned char>(v));
        }
    } else {
        bytes.resize(voxels.size() * 4);
        for (std::size_t i = 0; i < voxels.size(); ++i) {
            const auto word = std::bit_cast<std::uint32_t>(static_cast<float>(voxels[i]));
            for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((word >> (8 * b)) & 0xFFu);
        }
    }
    write_header(header_path, volume.dims(), volume.spacing(), dtype);
    write_raw(raw_path, bytes);
}

void save_mask(const Mask& mask, Spacing spacing, const std::filesystem::path& header_path,
               const std::filesystem::path& raw_path) {
    const auto labels = mask.labels();
    write_header(header_path, mask.dims(), spacing, DType::U8);
    write_raw(raw_path, std::string(labels.begin(), labels.end()));
}

Mask largest_lesion(const Mask& mask) {
    const auto& d = mask.dims();
    const auto labels = mask.labels();
    const std::size_t n = d.count();
    std::vector<std::int32_t> component(n, -1);
    std::vector<std::size_t> stack;
    std::int32_t best = -1;
    std::size_t best_size = 0;
    std::int32_t next = 0;

    // Scanning in linear order means the first component reaching a given
    // size also has the smallest minimum index, so strict '>' resolves ties.
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (labels[seed] == 0 || component[seed] >= 0) continue;
        const std::int32_t id = next++;
        std::size_t size = 0;
        component[seed] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            ++size;
            const auto [x, y, z] = d.coords(cur);
            for (const auto& o : kNeighbors26) {
                const int nx = x + o[0], ny = y + o[1], nz = z + o[2];
                if (!d.contains(nx, ny, nz)) continue;
                const std::size_t ni = d.index(nx, ny, nz);
                if (labels[ni] != 0 && component[ni] < 0) {
                    component[ni] = id;
                    stack.push_back(ni);
                }
            }
        }
        if (size > best_size) {
            best_size = size;
            best = id;
        }
    }
    if (best < 0) raise(ErrorKind::NoLesion, "mask has no non-zero voxels");

    std::vector<std::uint8_t> out(n, 0);
    for (std::size_t i = 0; i < n; ++i) out[i] = component[i] == best ? 1 : 0;
    return Mask(d, std::move(out));
}

std::vector<int> bin_values(std::span<const double> values, int ng) {
    if (ng < 2) raise(ErrorKind::Input, "gray-level count must be at least 2");
    if (values.empty()) raise(ErrorKind::NoLesion, "cannot discretize an empty ROI");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    std::vector<int> out(values.size(), 1);
    if (range <= 0.0) return out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double scaled = static_cast<double>(ng) * (values[i] - lo) / range;
        const int level = 1 + static_cast<int>(std::floor(scaled));
        out[i] = std::clamp(level, 1, ng);
    }
    return out;
}

DiscretizedRoi discretize(const Volume3D& volume, const Mask& roi, int ng) {
    if (!(volume.dims() == roi.dims())) raise(ErrorKind::Input, "volume and mask dims differ");
    if (ng < 2) raise(ErrorKind::Input, "gray-level count must be at least 2");
    const auto& d = roi.dims();
    const auto labels = roi.labels();

    std::array<int, 3> lo{d.nx, d.ny, d.nz};
    std::array<int, 3> hi{-1, -1, -1};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i]) continue;
        const auto c = d.coords(i);
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], c[a]);
            hi[a] = std::max(hi[a], c[a]);
        }
    }
    if (hi[0] < 0) raise(ErrorKind::NoLesion, "ROI is empty");

    DiscretizedRoi out;
    out.ng = ng;
    out.origin = {lo[0] - 1, lo[1] - 1, lo[2] - 1};
    out.dims = {hi[0] - lo[0] + 3, hi[1] - lo[1] + 3, hi[2] - lo[2] + 3};
    out.levels.assign(out.dims.count(), 0);

    // Iterate the cropped grid in its own linear order so roi_coords is sorted.
    for (int z = 1; z < out.dims.nz - 1; ++z) {
        for (int y = 1; y < out.dims.ny - 1; ++y) {
            for (int x = 1; x < out.dims.nx - 1; ++x) {
                const int sx = x + out.origin[0], sy = y + out.origin[1], sz = z + out.origin[2];
                if (roi.at(sx, sy, sz) == 0) continue;
                out.roi_coords.push_back({x, y, z});
                out.intensities.push_back(volume.at(sx, sy, sz));
            }
        }
    }
    const auto levels = bin_values(out.intensities, ng);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto& c = out.roi_coords[i];
        out.levels[out.dims.index(c[0], c[1], c[2])] = levels[i];
    }
    return out;
}

}  // namespace hccstage::volumes
