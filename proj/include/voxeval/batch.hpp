#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "voxeval/baseline.hpp"
#include "voxeval/fixture.hpp"
#include "voxeval/mme.hpp"
#include "voxeval/nifti.hpp"
#include "voxeval/report.hpp"

namespace voxeval {

/// Batch evaluation configuration; defaults match the reference experiment
/// settings (theta_tp=0, theta_fp=1, beta=1, 26-connectivity, tau 1 and 5 mm).
struct RunConfig {
    std::vector<std::string> gt_paths;
    std::vector<std::string> pred_paths;
    std::vector<int> class_ids;  // empty: all nonzero labels present in GT
    double theta_tp = 0.0;
    double theta_fp = 1.0;
    double beta = 1.0;
    int connectivity = 26;
    std::vector<double> taus{1.0, 5.0};
    std::string out_path;
    ReportFormat format = ReportFormat::Json;
    int jobs = 1;
    bool baselines_only = false;
};

struct PairSpec {
    std::string image_id;  // basename, used for report ordering
    std::string gt_path;
    std::string pred_path;
};

/// Resolve gt/pred arguments into evaluation pairs. Two directories pair by
/// identical filename; file lists pair positionally.
inline std::vector<PairSpec> resolve_pairs(const std::vector<std::string>& gt,
                                           const std::vector<std::string>& pred) {
    namespace fs = std::filesystem;
    if (gt.empty() || pred.empty()) {
        throw std::invalid_argument("no ground-truth or prediction inputs given");
    }
    std::vector<PairSpec> pairs;
    if (gt.size() == 1 && pred.size() == 1 && fs::is_directory(gt.front()) &&
        fs::is_directory(pred.front())) {
        std::set<std::string> gt_names, pred_names;
        for (const auto& e : fs::directory_iterator(gt.front())) {
            if (e.is_regular_file()) gt_names.insert(e.path().filename().string());
        }
        for (const auto& e : fs::directory_iterator(pred.front())) {
            if (e.is_regular_file()) pred_names.insert(e.path().filename().string());
        }
        for (const std::string& name : gt_names) {
            if (pred_names.count(name)) {
                pairs.push_back({name, (fs::path(gt.front()) / name).string(),
                                 (fs::path(pred.front()) / name).string()});
            }
        }
    } else {
        if (gt.size() != pred.size()) {
            throw std::invalid_argument("gt and pred file counts differ");
        }
        for (std::size_t i = 0; i < gt.size(); ++i) {
            if (fs::is_directory(gt[i]) || fs::is_directory(pred[i])) {
                throw std::invalid_argument(
                    "directory inputs must be a single --gt dir and a single --pred dir");
            }
            pairs.push_back({fs::path(gt[i]).filename().string(), gt[i], pred[i]});
        }
    }
    if (pairs.empty()) {
        throw std::invalid_argument("no evaluation pairs found");
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const PairSpec& a, const PairSpec& b) { return a.image_id < b.image_id; });
    return pairs;
}

/// Read a volume by extension: .nii/.nii.gz as NIfTI-1, anything else as the
/// plain-text fixture format.
inline LabelVolume read_volume(const std::string& path,
                               std::vector<std::string>* warnings = nullptr) {
    std::string lower = path;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower.size() >= 4 && lower.compare(lower.size() - 4, 4, ".nii") == 0) {
        return read_nifti(path, warnings);
    }
    if (lower.size() >= 7 && lower.compare(lower.size() - 7, 7, ".nii.gz") == 0) {
        return read_nifti(path, warnings);
    }
    return read_fixture(path);
}

namespace detail {

inline std::vector<int> classes_for(const LabelVolume& gt, const std::vector<int>& requested) {
    if (!requested.empty()) return requested;
    std::set<std::int32_t> present(gt.labels.begin(), gt.labels.end());
    std::vector<int> out;
    for (std::int32_t c : present) {
        if (c != 0) out.push_back(c);
    }
    return out;
}

}  // namespace detail

/// Evaluate every pair and class into a report document. Pairs run
/// concurrently up to config.jobs; entries are ordered by (image, class)
/// regardless of scheduling, so the document is identical for any job count.
/// Returns the number of failed pairs.
inline int run_batch(const RunConfig& config, const std::vector<PairSpec>& pairs,
                     ReportDocument& doc) {
    doc.schema_version = 1;
    doc.params.theta_tp = config.theta_tp;
    doc.params.theta_fp = config.theta_fp;
    doc.params.beta = config.beta;
    doc.params.connectivity = config.connectivity;
    doc.params.taus = config.taus;

    MMEParams params;
    params.theta_tp = config.theta_tp;
    params.theta_fp = config.theta_fp;
    params.beta = config.beta;
    params.connectivity = connectivity_from_int(config.connectivity);

    std::vector<std::vector<ReportEntry>> per_pair(pairs.size());
    std::vector<std::vector<std::string>> per_pair_warnings(pairs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pairs.size()) return;
            const PairSpec& pair = pairs[i];
            try {
                const LabelVolume gt = read_volume(pair.gt_path, &per_pair_warnings[i]);
                const LabelVolume pred = read_volume(pair.pred_path, &per_pair_warnings[i]);
                if (!(gt.dims == pred.dims) || !(gt.spacing == pred.spacing)) {
                    throw GridMismatchError(pair.image_id +
                                            ": gt and pred dims/spacing differ");
                }
                for (int cid : detail::classes_for(gt, config.class_ids)) {
                    ReportEntry entry;
                    entry.image = pair.image_id;
                    entry.class_id = cid;
                    const BinaryMask gm = class_mask(gt, cid);
                    const BinaryMask sm = class_mask(pred, cid);
                    if (!config.baselines_only) {
                        entry.mme = evaluate_pair(gt, pred, cid, params);
                    }
                    entry.baseline = evaluate_baseline(gm, sm, config.beta, config.taus);
                    per_pair[i].push_back(std::move(entry));
                }
            } catch (const std::exception& e) {
                ReportEntry entry;
                entry.image = pair.image_id;
                entry.class_id = 0;
                entry.error = e.what();
                per_pair[i].push_back(std::move(entry));
                failures.fetch_add(1);
            }
        }
    };

    const int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    for (const auto& warnings : per_pair_warnings) {
        for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    }
    for (auto& entries : per_pair) {
        for (ReportEntry& e : entries) doc.entries.push_back(std::move(e));
    }
    std::stable_sort(doc.entries.begin(), doc.entries.end(),
                     [](const ReportEntry& a, const ReportEntry& b) {
                         if (a.image != b.image) return a.image < b.image;
                         return a.class_id < b.class_id;
                     });
    return failures.load();
}

/// --jobs fallback: the MME_EVAL_JOBS environment variable.
inline int default_jobs_from_env() {
    const char* env = std::getenv("MME_EVAL_JOBS");
    if (!env) return 1;
    const int v = std::atoi(env);
    return v >= 1 ? v : 1;
}

}  // namespace voxeval
