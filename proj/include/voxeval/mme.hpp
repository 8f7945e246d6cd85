#pragma once

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "voxeval/core.hpp"
#include "voxeval/edt.hpp"
#include "voxeval/normalized_distance.hpp"
#include "voxeval/skeleton.hpp"

namespace voxeval {

/// Fractional confusion terms for one property. Detection and uniformity
/// counts are integral; boundary and volume counts may be fractional.
struct PropertyCounts {
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
};

/// Precision/recall and their weighted harmonic mean.
struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double fbeta = 0.0;
    double beta = 1.0;
};

/// Precision = tp/(tp+fp), recall = tp/(tp+fn). A 0/0 ratio resolves to 1
/// when the complementary error term is also 0 (a perfectly empty case) and
/// to 0 otherwise.
inline PRF prf(const PropertyCounts& c, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("prf: beta must be > 0");
    PRF out;
    out.beta = beta;
    out.precision = (c.tp + c.fp) > 0.0 ? c.tp / (c.tp + c.fp) : (c.fn == 0.0 ? 1.0 : 0.0);
    out.recall = (c.tp + c.fn) > 0.0 ? c.tp / (c.tp + c.fn) : (c.fp == 0.0 ? 1.0 : 0.0);
    const double b2 = beta * beta;
    const double denom = b2 * out.precision + out.recall;
    out.fbeta = denom > 0.0 ? (1.0 + b2) * out.recall * out.precision / denom : 0.0;
    return out;
}

/// The five evaluated properties, in reporting order.
enum class Property : int {
    Detection = 0,
    Uniformity = 1,
    Boundary = 2,
    TotalVolume = 3,
    RelativeVolume = 4,
};

inline const char* property_name(Property p) {
    switch (p) {
        case Property::Detection: return "detection";
        case Property::Uniformity: return "uniformity";
        case Property::Boundary: return "boundary";
        case Property::TotalVolume: return "total_volume";
        default: return "relative_volume";
    }
}

inline constexpr std::array<Property, 5> kProperties = {
    Property::Detection, Property::Uniformity, Property::Boundary,
    Property::TotalVolume, Property::RelativeVolume};

struct MMEParams {
    double theta_tp = 0.0;
    double theta_fp = 1.0;
    double beta = 1.0;
    Connectivity connectivity = Connectivity::k26;

    bool operator==(const MMEParams&) const = default;
};

struct MMEResult {
    std::array<PropertyCounts, 5> counts;
    std::array<PRF, 5> scores;
    MMEParams params;

    const PropertyCounts& counts_for(Property p) const {
        return counts[static_cast<int>(p)];
    }
    const PRF& score_for(Property p) const { return scores[static_cast<int>(p)]; }
};

/// Portion of one original prediction assigned to a cluster. A prediction
/// overlapping several ground truths is split; each fragment keeps the
/// original prediction id so fragmentation is not double-counted.
struct PredictionFragment {
    int original_id = 0;
    std::vector<std::uint32_t> voxels;  // sorted
    std::size_t overlap_count = 0;      // voxels shared with the cluster's G
};

/// One ground-truth segment with every prediction fragment correlated to it.
struct Cluster {
    int gt_id = 0;
    std::size_t gt_count = 0;
    std::vector<PredictionFragment> fragments;  // one per original prediction
    std::size_t overlap_count = 0;              // |G n SS'|
    std::size_t pred_count = 0;                 // total fragment voxels
    std::vector<int> correlated_gt_ids;         // union of cor(S, GS) over fragments

    bool detected() const { return !fragments.empty(); }
};

/// Clusters for every ground-truth segment (including undetected ones) plus
/// orphan predictions that overlap no ground truth.
struct ClusterSet {
    std::vector<Cluster> clusters;  // ordered by gt id
    std::vector<int> orphan_ids;
    Dims dims;
    Spacing spacing;
    std::size_t gt_total_voxels = 0;
    std::size_t pred_total_voxels = 0;  // includes orphans

    std::size_t detected_count() const {
        std::size_t n = 0;
        for (const auto& c : clusters) n += c.detected() ? 1 : 0;
        return n;
    }
};

/// Pair every ground truth with the predictions overlapping it. A prediction
/// overlapping several ground truths is split: overlap voxels go to their own
/// ground truth's cluster and the remaining voxels to the nearest overlapped
/// ground truth (physical distance, ties to the smallest gt id). Predictions
/// overlapping nothing become orphans.
inline ClusterSet cluster(const SegmentSet& gs, const SegmentSet& ss) {
    if (!(gs.source_dims == ss.source_dims) || !(gs.spacing == ss.spacing)) {
        throw GridMismatchError("cluster: segment sets on incompatible grids");
    }

    ClusterSet cs;
    cs.dims = gs.source_dims;
    cs.spacing = gs.spacing;
    cs.gt_total_voxels = gs.total_voxels();
    cs.pred_total_voxels = ss.total_voxels();

    cs.clusters.resize(gs.segments.size());
    std::vector<std::int32_t> gt_label(cs.dims.count(), 0);
    for (std::size_t gi = 0; gi < gs.segments.size(); ++gi) {
        const Segment& g = gs.segments[gi];
        cs.clusters[gi].gt_id = g.id;
        cs.clusters[gi].gt_count = g.voxels.size();
        for (std::uint32_t v : g.voxels) gt_label[v] = g.id;
    }

    // Distance fields to each ground truth, built lazily for split decisions.
    std::map<int, detail::ScaledSquaredField> gt_distance;
    auto distance_to_gt = [&](int gt_id) -> const detail::ScaledSquaredField& {
        auto it = gt_distance.find(gt_id);
        if (it == gt_distance.end()) {
            const Segment& g = gs.segments[static_cast<std::size_t>(gt_id) - 1];
            it = gt_distance
                     .emplace(gt_id, detail::edt_squared_from_indices(cs.dims, g.voxels,
                                                                      cs.spacing))
                     .first;
        }
        return it->second;
    };

    auto merge_ids = [](std::vector<int>& into, const std::vector<int>& ids) {
        for (int id : ids) {
            auto pos = std::lower_bound(into.begin(), into.end(), id);
            if (pos == into.end() || *pos != id) into.insert(pos, id);
        }
    };

    for (const Segment& s : ss.segments) {
        std::map<int, std::size_t> overlap_by_gt;
        for (std::uint32_t v : s.voxels) {
            const std::int32_t g = gt_label[v];
            if (g != 0) ++overlap_by_gt[g];
        }
        if (overlap_by_gt.empty()) {
            cs.orphan_ids.push_back(s.id);
            continue;
        }
        std::vector<int> cor_ids;
        for (const auto& [gid, cnt] : overlap_by_gt) cor_ids.push_back(gid);

        std::map<int, PredictionFragment> fragments;
        for (int gid : cor_ids) {
            fragments[gid].original_id = s.id;
            fragments[gid].overlap_count = overlap_by_gt[gid];
        }
        if (cor_ids.size() == 1) {
            fragments[cor_ids.front()].voxels = s.voxels;
        } else {
            for (std::uint32_t v : s.voxels) {
                const std::int32_t g = gt_label[v];
                if (g != 0) {
                    fragments[g].voxels.push_back(v);
                    continue;
                }
                int best = cor_ids.front();
                double best_sq = distance_to_gt(best).sq[v];
                for (std::size_t i = 1; i < cor_ids.size(); ++i) {
                    const double d = distance_to_gt(cor_ids[i]).sq[v];
                    if (d < best_sq) {
                        best_sq = d;
                        best = cor_ids[i];
                    }
                }
                fragments[best].voxels.push_back(v);
            }
        }
        for (auto& [gid, frag] : fragments) {
            Cluster& cl = cs.clusters[static_cast<std::size_t>(gid) - 1];
            cl.overlap_count += frag.overlap_count;
            cl.pred_count += frag.voxels.size();
            merge_ids(cl.correlated_gt_ids, cor_ids);
            cl.fragments.push_back(std::move(frag));
        }
    }
    return cs;
}

/// Detection property: a ground truth counts as found when more than
/// theta_tp of its volume is covered; a cluster whose false prediction mass
/// exceeds theta_fp of the ground truth volume, and every orphan, count as
/// false positives. Volume ratios reduce to voxel-count ratios, so spacing
/// cancels exactly.
inline PropertyCounts detection(const ClusterSet& cs, double theta_tp, double theta_fp) {
    if (theta_tp < 0.0 || theta_fp < 0.0) {
        throw std::invalid_argument("detection: thresholds must be >= 0");
    }
    PropertyCounts out;
    for (const Cluster& c : cs.clusters) {
        const double g = static_cast<double>(c.gt_count);
        const double covered = static_cast<double>(c.overlap_count) / g;
        const double false_part =
            static_cast<double>(c.pred_count - c.overlap_count) / g;
        if (covered > theta_tp) out.tp += 1.0;
        if (false_part > theta_fp) out.fp += 1.0;
    }
    out.fn = static_cast<double>(cs.clusters.size()) - out.tp;
    out.fp += static_cast<double>(cs.orphan_ids.size());
    return out;
}

/// Uniformity property over detected clusters: fragmented detection of one
/// ground truth adds false negatives; one prediction spanning several ground
/// truths adds false positives.
inline PropertyCounts uniformity(const ClusterSet& cs) {
    PropertyCounts out;
    for (const Cluster& c : cs.clusters) {
        if (!c.detected()) continue;
        out.tp += 1.0;
        out.fn += static_cast<double>(c.fragments.size() - 1);
        out.fp += static_cast<double>(c.correlated_gt_ids.size() - 1);
    }
    return out;
}

/// Boundary alignment over detected clusters. Each cluster's normalized
/// distances are divided by that cluster's own total mass W, so tp + fn = 1
/// per cluster. Undetected segments are not considered.
inline PropertyCounts boundary_alignment(
    const ClusterSet& cs, const std::map<int, NormalizedDistanceField>& dn_fields) {
    PropertyCounts out;
    for (const Cluster& c : cs.clusters) {
        if (!c.detected()) continue;
        const auto it = dn_fields.find(c.gt_id);
        if (it == dn_fields.end()) {
            throw std::logic_error("boundary_alignment: missing DN field for detected segment " +
                                   std::to_string(c.gt_id));
        }
        const NormalizedDistanceField& field = it->second;
        double tp_mass = 0.0, fp_mass = 0.0;
        for (const PredictionFragment& frag : c.fragments) {
            for (std::uint32_t v : frag.voxels) {
                if (field.inside[v]) {
                    tp_mass += field.dn[v];
                } else {
                    fp_mass += field.dn[v];
                }
            }
        }
        out.tp += tp_mass / field.weight;
        out.fn += (field.weight - tp_mass) / field.weight;
        out.fp += fp_mass / field.weight;
    }
    return out;
}

/// Total volume property in cubic millimeters over all clusters.
inline PropertyCounts total_volume(const ClusterSet& cs) {
    std::size_t overlap_total = 0;
    for (const Cluster& c : cs.clusters) overlap_total += c.overlap_count;
    PropertyCounts out;
    out.tp = volume_of(overlap_total, cs.spacing);
    out.fn = volume_of(cs.gt_total_voxels, cs.spacing) - out.tp;
    out.fp = volume_of(cs.pred_total_voxels, cs.spacing) - out.tp;
    return out;
}

/// Relative volume property: each cluster's volumes are normalized by its
/// own ground-truth volume, with the per-cluster false-positive share capped
/// at 1. An undetected ground truth contributes one full false negative.
inline PropertyCounts relative_volume(const ClusterSet& cs) {
    PropertyCounts out;
    for (const Cluster& c : cs.clusters) {
        const double g = static_cast<double>(c.gt_count);
        out.tp += static_cast<double>(c.overlap_count) / g;
        out.fp += std::min(
            1.0, static_cast<double>(c.pred_count - c.overlap_count) / g);
    }
    out.fn = static_cast<double>(cs.clusters.size()) - out.tp;
    return out;
}

/// Full multi-modal evaluation of one class of one image pair.
inline MMEResult evaluate_pair(const LabelVolume& gt, const LabelVolume& pred,
                               std::int32_t class_id, const MMEParams& params) {
    if (!(gt.dims == pred.dims) || !(gt.spacing == pred.spacing)) {
        throw GridMismatchError("evaluate_pair: volumes on incompatible grids");
    }
    const SegmentSet gs =
        connected_components(class_mask(gt, class_id), params.connectivity, class_id);
    const SegmentSet ss =
        connected_components(class_mask(pred, class_id), params.connectivity, class_id);
    const ClusterSet cs = cluster(gs, ss);

    std::map<int, NormalizedDistanceField> dn_fields;
    for (const Cluster& c : cs.clusters) {
        if (!c.detected()) continue;
        const Segment& g = gs.segments[static_cast<std::size_t>(c.gt_id) - 1];
        dn_fields.emplace(c.gt_id, normalized_distance(g, skeletonize(g), gt.spacing));
    }

    MMEResult result;
    result.params = params;
    result.counts[static_cast<int>(Property::Detection)] =
        detection(cs, params.theta_tp, params.theta_fp);
    result.counts[static_cast<int>(Property::Uniformity)] = uniformity(cs);
    result.counts[static_cast<int>(Property::Boundary)] = boundary_alignment(cs, dn_fields);
    result.counts[static_cast<int>(Property::TotalVolume)] = total_volume(cs);
    result.counts[static_cast<int>(Property::RelativeVolume)] = relative_volume(cs);
    for (int i = 0; i < 5; ++i) {
        result.scores[i] = prf(result.counts[i], params.beta);
    }
    return result;
}

struct AggregateStats {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
};

struct PrfAggregate {
    AggregateStats precision;
    AggregateStats recall;
    AggregateStats fbeta;
};

struct MMEAggregate {
    std::size_t n = 0;
    std::array<PrfAggregate, 5> per_property;
};

namespace detail {

inline AggregateStats mean_std(const std::vector<double>& xs) {
    AggregateStats out;
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(ss / n);
    return out;
}

}  // namespace detail

/// Image-wise average: mean and population standard deviation of each PRF
/// component across per-image results computed with identical parameters.
inline MMEAggregate aggregate(const std::vector<MMEResult>& results) {
    if (results.empty()) {
        throw std::invalid_argument("aggregate: no results");
    }
    for (const MMEResult& r : results) {
        if (!(r.params == results.front().params)) {
            throw std::invalid_argument("aggregate: results use different parameters");
        }
    }
    MMEAggregate agg;
    agg.n = results.size();
    std::vector<double> xs(results.size());
    for (int p = 0; p < 5; ++p) {
        auto collect = [&](auto getter) {
            for (std::size_t i = 0; i < results.size(); ++i) xs[i] = getter(results[i].scores[p]);
            return detail::mean_std(xs);
        };
        agg.per_property[p].precision = collect([](const PRF& s) { return s.precision; });
        agg.per_property[p].recall = collect([](const PRF& s) { return s.recall; });
        agg.per_property[p].fbeta = collect([](const PRF& s) { return s.fbeta; });
    }
    return agg;
}

}  // namespace voxeval
