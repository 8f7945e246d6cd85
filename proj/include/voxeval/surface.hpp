#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "voxeval/core.hpp"
#include "voxeval/edt.hpp"

namespace voxeval {

/// Statistics over the symmetric surface-distance multiset, in millimeters.
struct HausdorffStats {
    double avg_mm = 0.0;
    double p95_mm = 0.0;
    double max_mm = 0.0;
};

namespace detail {

/// 95th percentile with linear interpolation; input must be sorted.
inline double percentile95(const std::vector<double>& values) {
    const std::size_t n = values.size();
    const double rank = 0.95 * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= n) return values[lo];
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline void check_same_grid(const BinaryMask& g, const BinaryMask& s, const char* what) {
    if (!(g.dims == s.dims) || !(g.spacing == s.spacing)) {
        throw GridMismatchError(std::string(what) + ": masks on incompatible grids");
    }
}

}  // namespace detail

/// Symmetric surface distances between two non-empty masks: distances from
/// every boundary voxel of each mask to the nearest boundary voxel of the
/// other, pooled into one multiset. Returns nothing when either mask is
/// empty (the statistics are undefined and reported as missing).
inline std::optional<HausdorffStats> hausdorff(const BinaryMask& g, const BinaryMask& s) {
    detail::check_same_grid(g, s, "hausdorff");
    if (!g.any() || !s.any()) return std::nullopt;

    const std::vector<std::uint32_t> bg = boundary(g);
    const std::vector<std::uint32_t> bs = boundary(s);
    const detail::ScaledSquaredField to_bs =
        detail::edt_squared_from_indices(g.dims, bs, g.spacing);
    const detail::ScaledSquaredField to_bg =
        detail::edt_squared_from_indices(g.dims, bg, g.spacing);

    // Statistics are computed on min-spacing-normalized distances and scaled
    // once at the end, so a uniform spacing rescale multiplies each output
    // by exactly that factor. Sorting before summing makes the result
    // independent of the argument order.
    std::vector<double> dists;
    dists.reserve(bg.size() + bs.size());
    for (std::uint32_t i : bg) dists.push_back(std::sqrt(to_bs.sq[i]));
    for (std::uint32_t i : bs) dists.push_back(std::sqrt(to_bg.sq[i]));
    std::sort(dists.begin(), dists.end());

    double sum = 0.0;
    for (double v : dists) sum += v;
    HausdorffStats stats;
    const double scale = to_bs.scale;
    stats.avg_mm = (sum / static_cast<double>(dists.size())) * scale;
    stats.p95_mm = detail::percentile95(dists) * scale;
    stats.max_mm = dists.back() * scale;
    return stats;
}

/// Normalized surface distance at physical tolerance tau (mm): the fraction
/// of boundary voxels of each mask lying within tau of the other boundary.
/// Membership uses distance <= tau + 1e-9 to absorb floating-point noise.
inline std::optional<double> nsd(const BinaryMask& g, const BinaryMask& s, double tau_mm) {
    detail::check_same_grid(g, s, "nsd");
    if (tau_mm < 0.0) throw std::invalid_argument("nsd: tau must be >= 0");
    if (!g.any() || !s.any()) return std::nullopt;

    const std::vector<std::uint32_t> bg = boundary(g);
    const std::vector<std::uint32_t> bs = boundary(s);
    const detail::ScaledSquaredField to_bs =
        detail::edt_squared_from_indices(g.dims, bs, g.spacing);
    const detail::ScaledSquaredField to_bg =
        detail::edt_squared_from_indices(g.dims, bg, g.spacing);

    const double limit = tau_mm + 1e-9;
    std::size_t hits = 0;
    for (std::uint32_t i : bg) {
        if (std::sqrt(to_bs.sq[i]) * to_bs.scale <= limit) ++hits;
    }
    for (std::uint32_t i : bs) {
        if (std::sqrt(to_bg.sq[i]) * to_bg.scale <= limit) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(bg.size() + bs.size());
}

}  // namespace voxeval
