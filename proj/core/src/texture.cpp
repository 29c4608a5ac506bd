#include "hccstage/texture.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>

#include "hccstage/error.hpp"

namespace hccstage::radiomics {

using volumes::DiscretizedRoi;

namespace {

void require_roi(const DiscretizedRoi& roi) {
    if (roi.roi_coords.empty()) raise(ErrorKind::NoLesion, "ROI is empty");
}

std::ptrdiff_t linear_offset(const volumes::Dims& d, const std::array<int, 3>& o) {
    return static_cast<std::ptrdiff_t>(o[0]) +
           static_cast<std::ptrdiff_t>(d.nx) * (static_cast<std::ptrdiff_t>(o[1]) +
                                                static_cast<std::ptrdiff_t>(d.ny) * o[2]);
}

std::vector<std::size_t> roi_indices(const DiscretizedRoi& roi) {
    std::vector<std::size_t> out;
    out.reserve(roi.roi_coords.size());
    for (const auto& c : roi.roi_coords) out.push_back(roi.dims.index(c[0], c[1], c[2]));
    return out;
}

// Union-find with path halving; union by smaller root keeps it deterministic.
struct DisjointSet {
    std::vector<std::uint32_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) std::swap(a, b);
        parent[a] = b;
    }
};

}  // namespace

double LevelMatrix::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

std::array<LevelMatrix, 13> glcm_counts(const DiscretizedRoi& roi) {
    require_roi(roi);
    const auto ng = static_cast<std::size_t>(roi.ng);
    std::array<LevelMatrix, 13> out;
    const auto idx = roi_indices(roi);
    for (std::size_t d = 0; d < 13; ++d) {
        LevelMatrix m(ng, ng);
        const auto step = linear_offset(roi.dims, volumes::kDirections13[d]);
        for (auto p : idx) {
            const int a = roi.levels[p];
            const int b = roi.levels[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + step)];
            if (b == 0) continue;
            m(a - 1, b - 1) += 1.0;
            m(b - 1, a - 1) += 1.0;
        }
        out[d] = std::move(m);
    }
    return out;
}

LevelMatrix glrlm_counts(const DiscretizedRoi& roi, std::size_t direction) {
    require_roi(roi);
    if (direction >= 13) raise(ErrorKind::Input, "GLRLM direction index out of range");
    const auto& d = roi.dims;
    const auto max_run = static_cast<std::size_t>(std::max({d.nx, d.ny, d.nz}));
    LevelMatrix m(static_cast<std::size_t>(roi.ng), max_run);
    const auto step = linear_offset(d, volumes::kDirections13[direction]);
    for (auto p : roi_indices(roi)) {
        const int level = roi.levels[p];
        const auto prev = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) - step);
        if (roi.levels[prev] == level) continue;  // not a run start
        std::size_t len = 1;
        auto cur = static_cast<std::ptrdiff_t>(p) + step;
        // Padding guarantees the walk hits a zero level before leaving the grid.
        while (roi.levels[static_cast<std::size_t>(cur)] == level) {
            ++len;
            cur += step;
        }
        m(static_cast<std::size_t>(level - 1), len - 1) += 1.0;
    }
    return m;
}

LevelMatrix glrlm_counts(const DiscretizedRoi& roi) {
    LevelMatrix total = glrlm_counts(roi, 0);
    for (std::size_t dir = 1; dir < 13; ++dir) {
        const auto m = glrlm_counts(roi, dir);
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols(); ++c) total(r, c) += m(r, c);
    }
    return total;
}

LevelMatrix glszm_counts(const DiscretizedRoi& roi) {
    require_roi(roi);
    const auto idx = roi_indices(roi);
    const std::size_t np = idx.size();
    std::vector<std::int32_t> slot(roi.levels.size(), -1);
    for (std::size_t i = 0; i < np; ++i) slot[idx[i]] = static_cast<std::int32_t>(i);

    DisjointSet sets(np);
    std::array<std::ptrdiff_t, 13> steps{};
    for (std::size_t d = 0; d < 13; ++d) steps[d] = linear_offset(roi.dims, volumes::kDirections13[d]);
    for (std::size_t i = 0; i < np; ++i) {
        const int level = roi.levels[idx[i]];
        for (auto step : steps) {
            const auto q = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx[i]) + step);
            if (roi.levels[q] == level) sets.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(slot[q]));
        }
    }

    std::vector<std::size_t> size(np, 0);
    for (std::size_t i = 0; i < np; ++i) ++size[sets.find(static_cast<std::uint32_t>(i))];
    LevelMatrix m(static_cast<std::size_t>(roi.ng), np);
    for (std::size_t i = 0; i < np; ++i) {
        if (sets.find(static_cast<std::uint32_t>(i)) != i) continue;
        m(static_cast<std::size_t>(roi.levels[idx[i]] - 1), size[i] - 1) += 1.0;
    }
    return m;
}

LevelMatrix gldm_counts(const DiscretizedRoi& roi, int alpha) {
    require_roi(roi);
    if (alpha < 0) raise(ErrorKind::Input, "GLDM alpha must be non-negative");
    std::array<std::ptrdiff_t, 26> steps{};
    for (std::size_t k = 0; k < 26; ++k) steps[k] = linear_offset(roi.dims, volumes::kNeighbors26[k]);
    LevelMatrix m(static_cast<std::size_t>(roi.ng), 27);
    for (auto p : roi_indices(roi)) {
        const int level = roi.levels[p];
        std::size_t dependent = 0;
        for (auto step : steps) {
            const int other = roi.levels[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + step)];
            if (other != 0 && std::abs(other - level) <= alpha) ++dependent;
        }
        m(static_cast<std::size_t>(level - 1), dependent) += 1.0;
    }
    return m;
}

NgtdmStats ngtdm_stats(const DiscretizedRoi& roi) {
    require_roi(roi);
    std::array<std::ptrdiff_t, 26> steps{};
    for (std::size_t k = 0; k < 26; ++k) steps[k] = linear_offset(roi.dims, volumes::kNeighbors26[k]);
    NgtdmStats out;
    out.n.assign(static_cast<std::size_t>(roi.ng), 0.0);
    out.s.assign(static_cast<std::size_t>(roi.ng), 0.0);
    for (auto p : roi_indices(roi)) {
        const int level = roi.levels[p];
        int sum = 0;
        int count = 0;
        for (auto step : steps) {
            const int other = roi.levels[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + step)];
            if (other != 0) {
                sum += other;
                ++count;
            }
        }
        if (count == 0) continue;
        const double mean = static_cast<double>(sum) / count;
        out.n[static_cast<std::size_t>(level - 1)] += 1.0;
        out.s[static_cast<std::size_t>(level - 1)] += std::abs(static_cast<double>(level) - mean);
    }
    return out;
}

}  // namespace hccstage::radiomics
