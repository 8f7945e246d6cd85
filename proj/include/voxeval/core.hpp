#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace voxeval {

/// Thrown when two grids that must share dims/spacing do not.
struct GridMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Physical voxel size in millimeters per axis. All components strictly positive.
struct Spacing {
    double dx = 1.0;
    double dy = 1.0;
    double dz = 1.0;

    Spacing() = default;
    Spacing(double dx_, double dy_, double dz_) : dx(dx_), dy(dy_), dz(dz_) {
        if (!(dx > 0.0 && dy > 0.0 && dz > 0.0)) {
            throw std::invalid_argument("Spacing: all components must be > 0");
        }
    }

    double voxel_volume() const { return dx * dy * dz; }
    double min_component() const { return std::min(dx, std::min(dy, dz)); }

    bool operator==(const Spacing&) const = default;
};

/// Grid extents. 2D images are stored with d = 1.
struct Dims {
    int w = 0;
    int h = 0;
    int d = 0;

    Dims() = default;
    Dims(int w_, int h_, int d_) : w(w_), h(h_), d(d_) {
        if (w <= 0 || h <= 0 || d <= 0) {
            throw std::invalid_argument("Dims: extents must be positive");
        }
    }

    std::size_t count() const {
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(d);
    }

    bool contains(int x, int y, int z) const {
        return x >= 0 && x < w && y >= 0 && y < h && z >= 0 && z < d;
    }

    // Row-major storage, x fastest.
    std::uint32_t index(int x, int y, int z) const {
        return static_cast<std::uint32_t>(x) +
               static_cast<std::uint32_t>(w) *
                   (static_cast<std::uint32_t>(y) +
                    static_cast<std::uint32_t>(h) * static_cast<std::uint32_t>(z));
    }

    bool operator==(const Dims&) const = default;
};

struct Coord {
    int x = 0;
    int y = 0;
    int z = 0;

    bool operator==(const Coord&) const = default;
    // Lexicographic on (x, y, z); used for deterministic segment ordering.
    bool operator<(const Coord& o) const {
        if (x != o.x) return x < o.x;
        if (y != o.y) return y < o.y;
        return z < o.z;
    }
};

inline Coord to_coord(std::uint32_t index, const Dims& dims) {
    const std::uint32_t w = static_cast<std::uint32_t>(dims.w);
    const std::uint32_t h = static_cast<std::uint32_t>(dims.h);
    return Coord{static_cast<int>(index % w), static_cast<int>((index / w) % h),
                 static_cast<int>(index / (w * h))};
}

/// Dense 3D grid of non-negative integer class labels plus physical spacing.
struct LabelVolume {
    Dims dims;
    std::vector<std::int32_t> labels;  // row-major, x fastest
    Spacing spacing;

    LabelVolume() = default;
    LabelVolume(Dims dims_, std::vector<std::int32_t> labels_, Spacing spacing_)
        : dims(dims_), labels(std::move(labels_)), spacing(spacing_) {
        if (labels.size() != dims.count()) {
            throw std::invalid_argument("LabelVolume: label count does not match dims");
        }
        for (std::int32_t v : labels) {
            if (v < 0) throw std::invalid_argument("LabelVolume: negative label");
        }
    }

    std::int32_t at(int x, int y, int z) const { return labels[dims.index(x, y, z)]; }
};

/// One boolean per voxel; same shape rules as LabelVolume.
struct BinaryMask {
    Dims dims;
    std::vector<std::uint8_t> bits;
    Spacing spacing;

    BinaryMask() = default;
    BinaryMask(Dims dims_, Spacing spacing_)
        : dims(dims_), bits(dims_.count(), 0), spacing(spacing_) {}
    BinaryMask(Dims dims_, std::vector<std::uint8_t> bits_, Spacing spacing_)
        : dims(dims_), bits(std::move(bits_)), spacing(spacing_) {
        if (bits.size() != dims.count()) {
            throw std::invalid_argument("BinaryMask: bit count does not match dims");
        }
    }

    bool at(int x, int y, int z) const { return bits[dims.index(x, y, z)] != 0; }
    void set(int x, int y, int z, bool v = true) { bits[dims.index(x, y, z)] = v ? 1 : 0; }

    std::size_t count_true() const {
        std::size_t n = 0;
        for (std::uint8_t b : bits) n += (b != 0);
        return n;
    }
    bool any() const {
        return std::any_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
    }
};

/// Physical volume of a voxel population.
inline double volume_of(std::size_t voxel_count, const Spacing& spacing) {
    return static_cast<double>(voxel_count) * spacing.voxel_volume();
}

/// One connected foreground component. Voxels are sorted linear indices.
struct Segment {
    int id = 0;
    Dims dims;
    std::vector<std::uint32_t> voxels;
    double volume_mm3 = 0.0;
};

/// All segments of one class discovered in a mask.
struct SegmentSet {
    int class_id = 0;
    std::vector<Segment> segments;
    Dims source_dims;
    Spacing spacing;

    std::size_t total_voxels() const {
        std::size_t n = 0;
        for (const auto& s : segments) n += s.voxels.size();
        return n;
    }
};

enum class Connectivity : int { k6 = 6, k18 = 18, k26 = 26 };

inline Connectivity connectivity_from_int(int v) {
    switch (v) {
        case 6: return Connectivity::k6;
        case 18: return Connectivity::k18;
        case 26: return Connectivity::k26;
        default: throw std::invalid_argument("connectivity must be 6, 18 or 26");
    }
}

namespace detail {

/// Neighbor offsets for a connectivity class, in a fixed deterministic order.
inline const std::vector<Coord>& neighbor_offsets(Connectivity conn) {
    static const auto make = [](int max_l1) {
        std::vector<Coord> out;
        for (int oz = -1; oz <= 1; ++oz)
            for (int oy = -1; oy <= 1; ++oy)
                for (int ox = -1; ox <= 1; ++ox) {
                    const int l1 = std::abs(ox) + std::abs(oy) + std::abs(oz);
                    if (l1 > 0 && l1 <= max_l1) out.push_back(Coord{ox, oy, oz});
                }
        return out;
    };
    static const std::vector<Coord> k6 = make(1);
    static const std::vector<Coord> k18 = make(2);
    static const std::vector<Coord> k26 = make(3);
    switch (conn) {
        case Connectivity::k6: return k6;
        case Connectivity::k18: return k18;
        default: return k26;
    }
}

}  // namespace detail

/// Per-voxel equality mask for one class. An absent class yields an all-false mask.
inline BinaryMask class_mask(const LabelVolume& volume, std::int32_t class_id) {
    BinaryMask mask(volume.dims, volume.spacing);
    for (std::size_t i = 0; i < volume.labels.size(); ++i) {
        mask.bits[i] = volume.labels[i] == class_id ? 1 : 0;
    }
    return mask;
}

/// Connected-component labeling of a binary mask. Segment ids are assigned
/// densely from 1 by lexicographic order of each segment's minimal (x,y,z).
inline SegmentSet connected_components(const BinaryMask& mask, Connectivity conn,
                                       int class_id = 1) {
    const Dims& dims = mask.dims;
    const auto& offsets = detail::neighbor_offsets(conn);

    SegmentSet set;
    set.class_id = class_id;
    set.source_dims = dims;
    set.spacing = mask.spacing;

    std::vector<std::uint8_t> visited(mask.bits.size(), 0);
    std::vector<std::uint32_t> queue;

    const std::size_t n = mask.bits.size();
    for (std::uint32_t start = 0; start < n; ++start) {
        if (!mask.bits[start] || visited[start]) continue;
        Segment seg;
        seg.dims = dims;
        queue.clear();
        queue.push_back(start);
        visited[start] = 1;
        while (!queue.empty()) {
            const std::uint32_t cur = queue.back();
            queue.pop_back();
            seg.voxels.push_back(cur);
            const Coord c = to_coord(cur, dims);
            for (const Coord& o : offsets) {
                const int nx = c.x + o.x, ny = c.y + o.y, nz = c.z + o.z;
                if (!dims.contains(nx, ny, nz)) continue;
                const std::uint32_t ni = dims.index(nx, ny, nz);
                if (mask.bits[ni] && !visited[ni]) {
                    visited[ni] = 1;
                    queue.push_back(ni);
                }
            }
        }
        std::sort(seg.voxels.begin(), seg.voxels.end());
        seg.volume_mm3 = volume_of(seg.voxels.size(), mask.spacing);
        set.segments.push_back(std::move(seg));
    }

    std::vector<std::pair<Coord, std::size_t>> order(set.segments.size());
    for (std::size_t i = 0; i < set.segments.size(); ++i) {
        Coord m = to_coord(set.segments[i].voxels.front(), dims);
        for (std::uint32_t v : set.segments[i].voxels) m = std::min(m, to_coord(v, dims));
        order[i] = {m, i};
    }
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Segment> sorted;
    sorted.reserve(set.segments.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted.push_back(std::move(set.segments[order[i].second]));
        sorted.back().id = static_cast<int>(i) + 1;
    }
    set.segments = std::move(sorted);
    return set;
}

/// Voxel intersection of two segments from grids of identical dims.
inline std::vector<std::uint32_t> overlap(const Segment& a, const Segment& b) {
    if (!(a.dims == b.dims)) {
        throw GridMismatchError("overlap: segments come from incompatible grids");
    }
    std::vector<std::uint32_t> out;
    std::set_intersection(a.voxels.begin(), a.voxels.end(), b.voxels.begin(),
                          b.voxels.end(), std::back_inserter(out));
    return out;
}

}  // namespace voxeval
