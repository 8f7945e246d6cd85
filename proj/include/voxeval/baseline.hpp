#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "voxeval/core.hpp"
#include "voxeval/mme.hpp"
#include "voxeval/surface.hpp"

namespace voxeval {

/// Voxel-wise confusion counts; tp+fp+fn+tn equals the grid size.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
};

inline ConfusionCounts confusion(const BinaryMask& g, const BinaryMask& s) {
    detail::check_same_grid(g, s, "confusion");
    ConfusionCounts c;
    for (std::size_t i = 0; i < g.bits.size(); ++i) {
        const bool gv = g.bits[i] != 0, sv = s.bits[i] != 0;
        if (gv && sv) ++c.tp;
        else if (!gv && sv) ++c.fp;
        else if (gv && !sv) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline double accuracy(const ConfusionCounts& c) {
    const double total = static_cast<double>(c.tp + c.fp + c.fn + c.tn);
    return static_cast<double>(c.tp + c.tn) / total;
}

inline double dice(const ConfusionCounts& c) {
    const double denom = static_cast<double>(2 * c.tp + c.fn + c.fp);
    return denom > 0.0 ? 2.0 * static_cast<double>(c.tp) / denom : 1.0;
}

inline double iou(const ConfusionCounts& c) {
    const double denom = static_cast<double>(c.tp + c.fn + c.fp);
    return denom > 0.0 ? static_cast<double>(c.tp) / denom : 1.0;
}

inline PRF prf_voxel(const ConfusionCounts& c, double beta) {
    PropertyCounts pc;
    pc.tp = static_cast<double>(c.tp);
    pc.fp = static_cast<double>(c.fp);
    pc.fn = static_cast<double>(c.fn);
    return prf(pc, beta);
}

/// Volume similarity 1 - |fn - fp| / (2 tp + fp + fn): total-volume agreement
/// regardless of overlap. Two disjoint equal-size masks score 1.
inline double volume_similarity(const ConfusionCounts& c) {
    const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
    if (denom == 0.0) return 1.0;
    const double diff = c.fn >= c.fp ? static_cast<double>(c.fn - c.fp)
                                     : static_cast<double>(c.fp - c.fn);
    return 1.0 - diff / denom;
}

/// Macro average of per-class IoU.
inline double miou(const std::vector<double>& per_class_iou) {
    if (per_class_iou.empty()) throw std::invalid_argument("miou: no classes");
    double sum = 0.0;
    for (double v : per_class_iou) sum += v;
    return sum / static_cast<double>(per_class_iou.size());
}

/// Frequency-weighted average of per-class IoU; frequencies must sum to 1.
inline double fwiou(const std::vector<double>& per_class_iou,
                    const std::vector<double>& class_frequencies) {
    if (per_class_iou.empty() || per_class_iou.size() != class_frequencies.size()) {
        throw std::invalid_argument("fwiou: class/frequency size mismatch");
    }
    double fsum = 0.0;
    for (double f : class_frequencies) fsum += f;
    if (std::abs(fsum - 1.0) > 1e-9) {
        throw std::invalid_argument("fwiou: frequencies must sum to 1");
    }
    double out = 0.0;
    for (std::size_t i = 0; i < per_class_iou.size(); ++i) {
        out += per_class_iou[i] * class_frequencies[i];
    }
    return out;
}

/// Baseline metrics for one class of one image pair. HD and NSD are missing
/// (and excluded from aggregates) when either mask is empty.
struct BaselineReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double fbeta = 0.0;
    double dice = 0.0;
    double iou = 0.0;
    double volume_similarity = 0.0;
    std::optional<HausdorffStats> hd;
    std::vector<std::pair<double, std::optional<double>>> nsd;  // tau (mm) -> value
};

inline BaselineReport evaluate_baseline(const BinaryMask& g, const BinaryMask& s,
                                        double beta, const std::vector<double>& taus) {
    const ConfusionCounts c = confusion(g, s);
    BaselineReport r;
    r.accuracy = accuracy(c);
    const PRF v = prf_voxel(c, beta);
    r.precision = v.precision;
    r.recall = v.recall;
    r.fbeta = v.fbeta;
    r.dice = dice(c);
    r.iou = iou(c);
    r.volume_similarity = volume_similarity(c);
    r.hd = hausdorff(g, s);
    for (double tau : taus) {
        r.nsd.emplace_back(tau, nsd(g, s, tau));
    }
    return r;
}

}  // namespace voxeval
