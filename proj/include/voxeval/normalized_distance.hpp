#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "voxeval/core.hpp"
#include "voxeval/edt.hpp"
#include "voxeval/skeleton.hpp"

namespace voxeval {

/// Shape-normalized distance of every voxel to one ground-truth segment.
/// Inside the segment the value is DB/(DK+DB) in [0,1]: 1 on the medial
/// axis, falling to 0 toward the boundary. Outside it is DB/max(DK-DB, eps)
/// with eps = min spacing, growing away from the segment.
struct NormalizedDistanceField {
    Dims dims;
    std::vector<double> dn;          // dn_in at segment voxels, dn_out elsewhere
    std::vector<std::uint8_t> inside;  // segment membership
    double weight = 0.0;             // sum of dn_in over the segment
    int segment_id = 0;

    double at(std::uint32_t index) const { return dn[index]; }
};

/// Field of normalized distances for one segment and its skeleton. Computed
/// once per ground-truth segment; every prediction is scored against the
/// same field. DB is the distance to the segment boundary, DK the
/// distance to the skeleton; both cancel the overall spacing scale, so the
/// field depends only on the spacing anisotropy.
inline NormalizedDistanceField normalized_distance(const Segment& g, const Skeleton& skel,
                                                   const Spacing& spacing) {
    if (skel.parent_segment_id != g.id) {
        throw std::invalid_argument("normalized_distance: skeleton belongs to another segment");
    }
    if (g.voxels.empty() || skel.voxels.empty()) {
        throw std::invalid_argument("normalized_distance: empty segment or skeleton");
    }
    if (!std::includes(g.voxels.begin(), g.voxels.end(), skel.voxels.begin(),
                       skel.voxels.end())) {
        throw std::invalid_argument("normalized_distance: skeleton not inside segment");
    }

    NormalizedDistanceField field;
    field.dims = g.dims;
    field.segment_id = g.id;
    field.inside.assign(g.dims.count(), 0);
    for (std::uint32_t v : g.voxels) field.inside[v] = 1;

    BinaryMask mask(g.dims, field.inside, spacing);
    const std::vector<std::uint32_t> bnd = boundary(mask);
    const detail::ScaledSquaredField db =
        detail::edt_squared_from_indices(g.dims, bnd, spacing);
    const detail::ScaledSquaredField dk =
        detail::edt_squared_from_indices(g.dims, skel.voxels, spacing);

    field.dn.assign(g.dims.count(), 0.0);
    for (std::size_t i = 0; i < field.dn.size(); ++i) {
        const double dbn = std::sqrt(db.sq[i]);
        const double dkn = std::sqrt(dk.sq[i]);
        if (field.inside[i]) {
            // A voxel that is both skeleton and boundary (thin structures)
            // counts as medial: dn_in = 1.
            const double denom = dkn + dbn;
            field.dn[i] = denom == 0.0 ? 1.0 : dbn / denom;
        } else {
            // eps = min spacing is exactly 1 in normalized units.
            field.dn[i] = dbn / std::max(dkn - dbn, 1.0);
        }
    }
    for (std::uint32_t v : g.voxels) field.weight += field.dn[v];
    return field;
}

}  // namespace voxeval
