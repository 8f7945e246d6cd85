#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "voxeval/core.hpp"

namespace voxeval {

/// Thin medial-axis representation of one segment.
struct Skeleton {
    std::vector<std::uint32_t> voxels;  // sorted linear indices into the source grid
    int parent_segment_id = 0;
};

namespace detail {

// Index into a 3x3x3 neighborhood cube: (dx,dy,dz) in {-1,0,1}^3 -> 0..26.
inline int cube_index(int dx, int dy, int dz) {
    return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1);
}

/// Simple-point test for the (26,6) connectivity pair: deleting the center
/// must keep exactly one 26-component of foreground in the punctured
/// neighborhood and exactly one 6-component of background in the
/// 18-neighborhood touching a face neighbor.
inline bool is_simple_point(const std::array<std::uint8_t, 27>& nb) {
    // Foreground condition: one 26-connected component in N26 \ {center}.
    int fg_total = 0;
    std::array<std::uint8_t, 27> seen{};
    int stack[27];
    for (int i = 0; i < 27; ++i) {
        if (i != 13 && nb[i]) ++fg_total;
    }
    if (fg_total == 0) return false;  // isolated voxel is never simple
    int first = -1;
    for (int i = 0; i < 27 && first < 0; ++i) {
        if (i != 13 && nb[i]) first = i;
    }
    int top = 0;
    stack[top++] = first;
    seen[first] = 1;
    int reached = 0;
    while (top > 0) {
        const int cur = stack[--top];
        ++reached;
        const int cx = cur % 3, cy = (cur / 3) % 3, cz = cur / 9;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = cx + dx, ny = cy + dy, nz = cz + dz;
                    if (nx < 0 || nx > 2 || ny < 0 || ny > 2 || nz < 0 || nz > 2) continue;
                    const int ni = nx + 3 * ny + 9 * nz;
                    if (ni == 13 || ni == cur || seen[ni] || !nb[ni]) continue;
                    seen[ni] = 1;
                    stack[top++] = ni;
                }
    }
    if (reached != fg_total) return false;

    // Background condition: 6-components of background within the
    // 18-neighborhood, counted only if they contain a face neighbor.
    static const int face[6] = {cube_index(-1, 0, 0), cube_index(1, 0, 0),
                                cube_index(0, -1, 0), cube_index(0, 1, 0),
                                cube_index(0, 0, -1), cube_index(0, 0, 1)};
    auto in_n18 = [](int i) {
        const int dx = i % 3 - 1, dy = (i / 3) % 3 - 1, dz = i / 9 - 1;
        return (dx * dx + dy * dy + dz * dz) <= 2 && i != 13;
    };
    seen.fill(0);
    int components = 0;
    for (int f = 0; f < 6; ++f) {
        const int start = face[f];
        if (nb[start] || seen[start]) continue;
        ++components;
        if (components > 1) return false;
        top = 0;
        stack[top++] = start;
        seen[start] = 1;
        while (top > 0) {
            const int cur = stack[--top];
            const int cx = cur % 3, cy = (cur / 3) % 3, cz = cur / 9;
            static const int step[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                           {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
            for (const auto& s : step) {
                const int nx = cx + s[0], ny = cy + s[1], nz = cz + s[2];
                if (nx < 0 || nx > 2 || ny < 0 || ny > 2 || nz < 0 || nz > 2) continue;
                const int ni = nx + 3 * ny + 9 * nz;
                if (!in_n18(ni) || seen[ni] || nb[ni]) continue;
                seen[ni] = 1;
                stack[top++] = ni;
            }
        }
    }
    return components == 1;
}

/// Local thinning grid over a padded bounding box.
struct ThinGrid {
    int w = 0, h = 0, d = 0;
    std::vector<std::uint8_t> bits;

    int index(int x, int y, int z) const { return x + w * (y + h * z); }
    bool at(int x, int y, int z) const {
        if (x < 0 || x >= w || y < 0 || y >= h || z < 0 || z >= d) return false;
        return bits[index(x, y, z)] != 0;
    }

    std::array<std::uint8_t, 27> neighborhood(int x, int y, int z) const {
        std::array<std::uint8_t, 27> nb{};
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    nb[cube_index(dx, dy, dz)] = at(x + dx, y + dy, z + dz) ? 1 : 0;
                }
        return nb;
    }
};

inline int count_foreground_neighbors(const std::array<std::uint8_t, 27>& nb) {
    int n = 0;
    for (int i = 0; i < 27; ++i) {
        if (i != 13 && nb[i]) ++n;
    }
    return n;
}

}  // namespace detail

/// Medial-axis thinning of one segment. Directional parallel erosion deletes
/// simple border points while keeping curve endpoints, so the result is a
/// thin, connected, topology-preserving subset of the segment. Depth-1 grids
/// thin strictly in-plane (out-of-plane deletions are never simple there).
inline Skeleton skeletonize(const Segment& seg) {
    Skeleton skel;
    skel.parent_segment_id = seg.id;
    if (seg.voxels.empty()) return skel;

    Coord lo = to_coord(seg.voxels.front(), seg.dims);
    Coord hi = lo;
    for (std::uint32_t v : seg.voxels) {
        const Coord c = to_coord(v, seg.dims);
        lo.x = std::min(lo.x, c.x);
        lo.y = std::min(lo.y, c.y);
        lo.z = std::min(lo.z, c.z);
        hi.x = std::max(hi.x, c.x);
        hi.y = std::max(hi.y, c.y);
        hi.z = std::max(hi.z, c.z);
    }

    detail::ThinGrid grid;
    grid.w = hi.x - lo.x + 3;  // one-voxel pad on each side
    grid.h = hi.y - lo.y + 3;
    grid.d = hi.z - lo.z + 3;
    grid.bits.assign(static_cast<std::size_t>(grid.w) * grid.h * grid.d, 0);
    for (std::uint32_t v : seg.voxels) {
        const Coord c = to_coord(v, seg.dims);
        grid.bits[grid.index(c.x - lo.x + 1, c.y - lo.y + 1, c.z - lo.z + 1)] = 1;
    }

    static const int dirs[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                   {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
    std::vector<int> candidates;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& dir : dirs) {
            candidates.clear();
            for (int z = 1; z < grid.d - 1; ++z)
                for (int y = 1; y < grid.h - 1; ++y)
                    for (int x = 1; x < grid.w - 1; ++x) {
                        if (!grid.bits[grid.index(x, y, z)]) continue;
                        if (grid.at(x + dir[0], y + dir[1], z + dir[2])) continue;
                        const auto nb = grid.neighborhood(x, y, z);
                        if (detail::count_foreground_neighbors(nb) == 1) continue;
                        if (!detail::is_simple_point(nb)) continue;
                        candidates.push_back(grid.index(x, y, z));
                    }
            for (int idx : candidates) {
                // Earlier deletions in this sweep may have changed the
                // neighborhood; re-verify before deleting.
                const int x = idx % grid.w;
                const int y = (idx / grid.w) % grid.h;
                const int z = idx / (grid.w * grid.h);
                if (detail::is_simple_point(grid.neighborhood(x, y, z))) {
                    grid.bits[idx] = 0;
                    changed = true;
                }
            }
        }
    }

    for (int z = 1; z < grid.d - 1; ++z)
        for (int y = 1; y < grid.h - 1; ++y)
            for (int x = 1; x < grid.w - 1; ++x) {
                if (grid.bits[grid.index(x, y, z)]) {
                    skel.voxels.push_back(
                        seg.dims.index(x + lo.x - 1, y + lo.y - 1, z + lo.z - 1));
                }
            }
    std::sort(skel.voxels.begin(), skel.voxels.end());
    return skel;
}

}  // namespace voxeval
