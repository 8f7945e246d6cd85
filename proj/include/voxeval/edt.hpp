#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "voxeval/core.hpp"

namespace voxeval {

/// Thrown when a distance field is requested for an empty seed set.
struct EmptySeedsError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Exact Euclidean distance to a seed set, one value (mm) per voxel.
struct DistanceField {
    Dims dims;
    std::vector<double> values;  // mm; 0 exactly on seeds
    Spacing spacing;

    double at(int x, int y, int z) const { return values[dims.index(x, y, z)]; }
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance lower envelope (Felzenszwalb–Huttenlocher) with sample
// pitch w. Infinite inputs are skipped; an all-infinite row stays infinite.
inline void dt1d(const std::vector<double>& f, int n, double w, std::vector<int>& v,
                 std::vector<double>& z, std::vector<double>& out) {
    int k = -1;
    auto intersect = [&](int p, int q) {
        const double xp = p * w, xq = q * w;
        return ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp));
    };
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s = intersect(v[k], q);
        while (s <= z[k]) {
            --k;
            s = intersect(v[k], q);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) {
        std::fill(out.begin(), out.begin() + n, kInf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        const double xq = q * w;
        while (z[j + 1] < xq) ++j;
        const double dx = xq - v[j] * w;
        out[q] = dx * dx + f[v[j]];
    }
}

/// Squared distances in units of the minimum spacing component. Multiplying
/// sqrt(value) by `scale` yields millimeters; keeping the scale factored out
/// makes uniform spacing rescaling an exact single multiplication.
struct ScaledSquaredField {
    std::vector<double> sq;
    double scale = 1.0;  // min spacing component, mm
};

inline ScaledSquaredField edt_squared(const Dims& dims,
                                      const std::vector<std::uint8_t>& seeds,
                                      const Spacing& sp) {
    ScaledSquaredField field;
    field.scale = sp.min_component();
    const double wx = sp.dx / field.scale;
    const double wy = sp.dy / field.scale;
    const double wz = sp.dz / field.scale;

    const int w = dims.w, h = dims.h, d = dims.d;
    std::vector<double>& g = field.sq;
    g.assign(dims.count(), kInf);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (seeds[i]) g[i] = 0.0;
    }

    const int nmax = std::max(w, std::max(h, d));
    std::vector<double> row(nmax), out(nmax), z(nmax + 1);
    std::vector<int> v(nmax);

    // x pass
    for (int zi = 0; zi < d; ++zi)
        for (int yi = 0; yi < h; ++yi) {
            const std::size_t base = dims.index(0, yi, zi);
            for (int xi = 0; xi < w; ++xi) row[xi] = g[base + xi];
            dt1d(row, w, wx, v, z, out);
            for (int xi = 0; xi < w; ++xi) g[base + xi] = out[xi];
        }
    // y pass
    const std::size_t stride_y = static_cast<std::size_t>(w);
    for (int zi = 0; zi < d; ++zi)
        for (int xi = 0; xi < w; ++xi) {
            const std::size_t base = dims.index(xi, 0, zi);
            for (int yi = 0; yi < h; ++yi) row[yi] = g[base + yi * stride_y];
            dt1d(row, h, wy, v, z, out);
            for (int yi = 0; yi < h; ++yi) g[base + yi * stride_y] = out[yi];
        }
    // z pass
    const std::size_t stride_z = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    for (int yi = 0; yi < h; ++yi)
        for (int xi = 0; xi < w; ++xi) {
            const std::size_t base = dims.index(xi, yi, 0);
            for (int zi = 0; zi < d; ++zi) row[zi] = g[base + zi * stride_z];
            dt1d(row, d, wz, v, z, out);
            for (int zi = 0; zi < d; ++zi) g[base + zi * stride_z] = out[zi];
        }
    return field;
}

inline ScaledSquaredField edt_squared_from_indices(const Dims& dims,
                                                   const std::vector<std::uint32_t>& seeds,
                                                   const Spacing& sp) {
    std::vector<std::uint8_t> bits(dims.count(), 0);
    for (std::uint32_t i : seeds) bits[i] = 1;
    return edt_squared(dims, bits, sp);
}

}  // namespace detail

/// Exact anisotropic Euclidean distance transform of a non-empty seed mask.
inline DistanceField edt(const BinaryMask& seeds) {
    if (!seeds.any()) {
        throw EmptySeedsError("edt: empty seed set has no distance field");
    }
    detail::ScaledSquaredField sq = detail::edt_squared(seeds.dims, seeds.bits, seeds.spacing);
    DistanceField out;
    out.dims = seeds.dims;
    out.spacing = seeds.spacing;
    out.values.resize(sq.sq.size());
    for (std::size_t i = 0; i < sq.sq.size(); ++i) {
        out.values[i] = std::sqrt(sq.sq[i]) * sq.scale;
    }
    return out;
}

/// Foreground voxels with at least one background 6-neighbor; the grid edge
/// counts as background. A depth-1 grid is an intrinsically 2D image, so its
/// out-of-plane faces do not count (otherwise every pixel would be boundary).
/// Returned indices are sorted.
inline std::vector<std::uint32_t> boundary(const BinaryMask& mask) {
    static const int off[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                  {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
    std::vector<std::uint32_t> out;
    const Dims& dims = mask.dims;
    const int n_off = dims.d == 1 ? 4 : 6;
    for (int z = 0; z < dims.d; ++z)
        for (int y = 0; y < dims.h; ++y)
            for (int x = 0; x < dims.w; ++x) {
                const std::uint32_t i = dims.index(x, y, z);
                if (!mask.bits[i]) continue;
                for (int k = 0; k < n_off; ++k) {
                    const int nx = x + off[k][0], ny = y + off[k][1], nz = z + off[k][2];
                    if (!dims.contains(nx, ny, nz) || !mask.bits[dims.index(nx, ny, nz)]) {
                        out.push_back(i);
                        break;
                    }
                }
            }
    return out;
}

}  // namespace voxeval
