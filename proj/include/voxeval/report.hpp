#pragma once

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "voxeval/baseline.hpp"
#include "voxeval/mme.hpp"
#include "voxeval/nifti.hpp"  // IoError

namespace voxeval {

using json = nlohmann::ordered_json;

enum class ReportFormat { Json, Csv };

/// Numbers in report documents carry 6 significant digits.
inline double round6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::strtod(buf, nullptr);
}

struct ReportParameters {
    double theta_tp = 0.0;
    double theta_fp = 1.0;
    double beta = 1.0;
    int connectivity = 26;
    std::vector<double> taus{1.0, 5.0};
};

/// One evaluated (image, class) pair. A failed pair keeps its error text and
/// contributes nothing to aggregates.
struct ReportEntry {
    std::string image;
    int class_id = 0;
    std::optional<MMEResult> mme;
    std::optional<BaselineReport> baseline;
    std::string error;
};

struct ReportDocument {
    int schema_version = 1;
    ReportParameters params;
    std::vector<ReportEntry> entries;
};

namespace detail {

inline json prf_json(const PropertyCounts& c, const PRF& s) {
    return json{{"tp", round6(c.tp)},           {"fp", round6(c.fp)},
                {"fn", round6(c.fn)},           {"precision", round6(s.precision)},
                {"recall", round6(s.recall)},   {"fbeta", round6(s.fbeta)}};
}

inline json baseline_json(const BaselineReport& b) {
    json j{{"accuracy", round6(b.accuracy)},
           {"precision", round6(b.precision)},
           {"recall", round6(b.recall)},
           {"fbeta", round6(b.fbeta)},
           {"dice", round6(b.dice)},
           {"iou", round6(b.iou)},
           {"volume_similarity", round6(b.volume_similarity)}};
    if (b.hd) {
        j["hd_avg_mm"] = round6(b.hd->avg_mm);
        j["hd_p95_mm"] = round6(b.hd->p95_mm);
        j["hd_max_mm"] = round6(b.hd->max_mm);
    } else {
        j["hd_avg_mm"] = nullptr;
        j["hd_p95_mm"] = nullptr;
        j["hd_max_mm"] = nullptr;
    }
    json nsd_j = json::object();
    char key[40];
    for (const auto& [tau, value] : b.nsd) {
        std::snprintf(key, sizeof(key), "%g", tau);
        if (value) {
            nsd_j[key] = round6(*value);
        } else {
            nsd_j[key] = nullptr;
        }
    }
    j["nsd"] = nsd_j;
    return j;
}

struct RunningStats {
    std::vector<double> xs;
    void add(double v) { xs.push_back(v); }
    json to_json() const {
        if (xs.empty()) return json{{"mean", nullptr}, {"std", nullptr}, {"n", 0}};
        const AggregateStats st = mean_std(xs);
        return json{{"mean", round6(st.mean)}, {"std", round6(st.stddev)}, {"n", xs.size()}};
    }
};

/// Aggregate block over the successful entries of one class (or all classes
/// when class_id is nullopt: the macro average block input).
inline json aggregate_json(const std::vector<const ReportEntry*>& entries,
                           const ReportParameters& params) {
    json agg = json::object();
    agg["n"] = entries.size();

    bool any_mme = false, any_baseline = false;
    for (const ReportEntry* e : entries) {
        any_mme |= e->mme.has_value();
        any_baseline |= e->baseline.has_value();
    }
    if (any_mme) {
        json mme_j = json::object();
        for (Property p : kProperties) {
            RunningStats prc, tpr, fb;
            for (const ReportEntry* e : entries) {
                if (!e->mme) continue;
                const PRF& s = e->mme->score_for(p);
                prc.add(round6(s.precision));
                tpr.add(round6(s.recall));
                fb.add(round6(s.fbeta));
            }
            mme_j[property_name(p)] = json{{"precision", prc.to_json()},
                                           {"recall", tpr.to_json()},
                                           {"fbeta", fb.to_json()}};
        }
        agg["mme"] = mme_j;
    }
    if (any_baseline) {
        json base = json::object();
        auto simple = [&](const char* name, auto getter) {
            RunningStats st;
            for (const ReportEntry* e : entries) {
                if (e->baseline) st.add(round6(getter(*e->baseline)));
            }
            base[name] = st.to_json();
        };
        simple("accuracy", [](const BaselineReport& b) { return b.accuracy; });
        simple("precision", [](const BaselineReport& b) { return b.precision; });
        simple("recall", [](const BaselineReport& b) { return b.recall; });
        simple("fbeta", [](const BaselineReport& b) { return b.fbeta; });
        simple("dice", [](const BaselineReport& b) { return b.dice; });
        simple("iou", [](const BaselineReport& b) { return b.iou; });
        simple("volume_similarity",
               [](const BaselineReport& b) { return b.volume_similarity; });

        std::size_t hd_excluded = 0;
        RunningStats hd_avg, hd_p95, hd_max;
        for (const ReportEntry* e : entries) {
            if (!e->baseline) continue;
            if (!e->baseline->hd) {
                ++hd_excluded;
                continue;
            }
            hd_avg.add(round6(e->baseline->hd->avg_mm));
            hd_p95.add(round6(e->baseline->hd->p95_mm));
            hd_max.add(round6(e->baseline->hd->max_mm));
        }
        base["hd_avg_mm"] = hd_avg.to_json();
        base["hd_p95_mm"] = hd_p95.to_json();
        base["hd_max_mm"] = hd_max.to_json();
        base["hd_excluded"] = hd_excluded;

        json nsd_j = json::object();
        char key[40];
        for (std::size_t ti = 0; ti < params.taus.size(); ++ti) {
            RunningStats st;
            std::size_t excluded = 0;
            for (const ReportEntry* e : entries) {
                if (!e->baseline || ti >= e->baseline->nsd.size()) continue;
                const auto& [tau, value] = e->baseline->nsd[ti];
                if (value) {
                    st.add(round6(*value));
                } else {
                    ++excluded;
                }
            }
            std::snprintf(key, sizeof(key), "%g", params.taus[ti]);
            json one = st.to_json();
            one["excluded"] = excluded;
            nsd_j[key] = one;
        }
        base["nsd"] = nsd_j;
        agg["baseline"] = base;
    }
    return agg;
}

}  // namespace detail

inline json report_to_json(const ReportDocument& doc) {
    json root;
    root["schema_version"] = doc.schema_version;
    root["parameters"] = json{{"theta_tp", doc.params.theta_tp},
                              {"theta_fp", doc.params.theta_fp},
                              {"beta", doc.params.beta},
                              {"connectivity", doc.params.connectivity},
                              {"tau_mm", doc.params.taus}};
    json entries = json::array();
    for (const ReportEntry& e : doc.entries) {
        json je;
        je["image"] = e.image;
        je["class"] = e.class_id;
        if (!e.error.empty()) {
            je["error"] = e.error;
        } else {
            if (e.mme) {
                json m = json::object();
                for (Property p : kProperties) {
                    m[property_name(p)] =
                        detail::prf_json(e.mme->counts_for(p), e.mme->score_for(p));
                }
                je["mme"] = m;
            }
            if (e.baseline) je["baseline"] = detail::baseline_json(*e.baseline);
        }
        entries.push_back(je);
    }
    root["entries"] = entries;

    // Aggregates: one block per class plus a macro average across classes.
    std::map<int, std::vector<const ReportEntry*>> by_class;
    for (const ReportEntry& e : doc.entries) {
        if (e.error.empty()) by_class[e.class_id].push_back(&e);
    }
    json agg;
    agg["n_entries"] = doc.entries.size();
    json per_class = json::array();
    for (const auto& [cid, list] : by_class) {
        json block = detail::aggregate_json(list, doc.params);
        block["class"] = cid;
        per_class.push_back(block);
    }
    agg["per_class"] = per_class;
    if (by_class.size() > 1) {
        std::vector<const ReportEntry*> all;
        for (const auto& [cid, list] : by_class) {
            all.insert(all.end(), list.begin(), list.end());
        }
        agg["macro"] = detail::aggregate_json(all, doc.params);
    }
    root["aggregate"] = agg;
    return root;
}

namespace detail {

inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

inline std::string report_to_csv(const ReportDocument& doc) {
    std::string out = "image,class,property,tp,fp,fn,precision,recall,fbeta,"
                      "accuracy,voxel_precision,voxel_recall,voxel_fbeta,dice,iou,"
                      "volume_similarity,hd_avg_mm,hd_p95_mm,hd_max_mm";
    char key[48];
    for (double tau : doc.params.taus) {
        std::snprintf(key, sizeof(key), ",nsd_tau_%g", tau);
        out += key;
    }
    out += ",error\n";

    auto baseline_cells = [&](const ReportEntry& e) {
        std::string cells;
        if (e.baseline) {
            const BaselineReport& b = *e.baseline;
            cells += detail::csv_number(b.accuracy) + "," + detail::csv_number(b.precision) +
                     "," + detail::csv_number(b.recall) + "," + detail::csv_number(b.fbeta) +
                     "," + detail::csv_number(b.dice) + "," + detail::csv_number(b.iou) + "," +
                     detail::csv_number(b.volume_similarity) + ",";
            if (b.hd) {
                cells += detail::csv_number(b.hd->avg_mm) + "," +
                         detail::csv_number(b.hd->p95_mm) + "," +
                         detail::csv_number(b.hd->max_mm);
            } else {
                cells += ",,";
            }
            for (const auto& [tau, value] : b.nsd) {
                cells += ",";
                if (value) cells += detail::csv_number(*value);
            }
        } else {
            cells += ",,,,,,,,,";
            for (std::size_t i = 0; i < doc.params.taus.size(); ++i) cells += ",";
        }
        return cells;
    };

    for (const ReportEntry& e : doc.entries) {
        if (!e.error.empty()) {
            out += e.image + "," + std::to_string(e.class_id);
            // property + 6 PRF columns + 10 baseline columns + one per tau
            for (std::size_t i = 0; i < 17 + doc.params.taus.size(); ++i) out += ",";
            std::string msg = e.error;
            for (char& c : msg) {
                if (c == ',' || c == '\n') c = ';';
            }
            out += "," + msg + "\n";
            continue;
        }
        if (e.mme) {
            for (Property p : kProperties) {
                const PropertyCounts& c = e.mme->counts_for(p);
                const PRF& s = e.mme->score_for(p);
                out += e.image + "," + std::to_string(e.class_id) + "," + property_name(p) +
                       "," + detail::csv_number(round6(c.tp)) + "," +
                       detail::csv_number(round6(c.fp)) + "," +
                       detail::csv_number(round6(c.fn)) + "," +
                       detail::csv_number(round6(s.precision)) + "," +
                       detail::csv_number(round6(s.recall)) + "," +
                       detail::csv_number(round6(s.fbeta)) + "," + baseline_cells(e) + ",\n";
            }
        } else {
            out += e.image + "," + std::to_string(e.class_id) + ",voxel,,,,,,," +
                   baseline_cells(e) + ",\n";
        }
    }
    return out;
}

inline void write_report(const ReportDocument& doc, ReportFormat format,
                         const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(IoError::Kind::Unreadable, "cannot write " + path);
    if (format == ReportFormat::Json) {
        out << report_to_json(doc).dump(2) << "\n";
    } else {
        out << report_to_csv(doc);
    }
    if (!out) throw IoError(IoError::Kind::Unreadable, "write failed: " + path);
}

/// Load a JSON report back into memory (entries and parameters only; the
/// aggregate block is derived data and recomputed on write).
inline ReportDocument read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoError::Kind::Unreadable, "cannot open " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw IoError(IoError::Kind::Parse, path + ": " + e.what());
    }
    ReportDocument doc;
    try {
        doc.schema_version = root.at("schema_version").get<int>();
        const json& p = root.at("parameters");
        doc.params.theta_tp = p.at("theta_tp").get<double>();
        doc.params.theta_fp = p.at("theta_fp").get<double>();
        doc.params.beta = p.at("beta").get<double>();
        doc.params.connectivity = p.at("connectivity").get<int>();
        doc.params.taus = p.at("tau_mm").get<std::vector<double>>();
        for (const json& je : root.at("entries")) {
            ReportEntry e;
            e.image = je.at("image").get<std::string>();
            e.class_id = je.at("class").get<int>();
            if (je.contains("error")) {
                e.error = je.at("error").get<std::string>();
            }
            if (je.contains("mme")) {
                MMEResult m;
                m.params.theta_tp = doc.params.theta_tp;
                m.params.theta_fp = doc.params.theta_fp;
                m.params.beta = doc.params.beta;
                m.params.connectivity = connectivity_from_int(doc.params.connectivity);
                for (Property prop : kProperties) {
                    const json& jp = je.at("mme").at(property_name(prop));
                    PropertyCounts& c = m.counts[static_cast<int>(prop)];
                    PRF& s = m.scores[static_cast<int>(prop)];
                    c.tp = jp.at("tp").get<double>();
                    c.fp = jp.at("fp").get<double>();
                    c.fn = jp.at("fn").get<double>();
                    s.precision = jp.at("precision").get<double>();
                    s.recall = jp.at("recall").get<double>();
                    s.fbeta = jp.at("fbeta").get<double>();
                    s.beta = doc.params.beta;
                }
                e.mme = m;
            }
            if (je.contains("baseline")) {
                const json& jb = je.at("baseline");
                BaselineReport b;
                b.accuracy = jb.at("accuracy").get<double>();
                b.precision = jb.at("precision").get<double>();
                b.recall = jb.at("recall").get<double>();
                b.fbeta = jb.at("fbeta").get<double>();
                b.dice = jb.at("dice").get<double>();
                b.iou = jb.at("iou").get<double>();
                b.volume_similarity = jb.at("volume_similarity").get<double>();
                if (!jb.at("hd_avg_mm").is_null()) {
                    HausdorffStats hd;
                    hd.avg_mm = jb.at("hd_avg_mm").get<double>();
                    hd.p95_mm = jb.at("hd_p95_mm").get<double>();
                    hd.max_mm = jb.at("hd_max_mm").get<double>();
                    b.hd = hd;
                }
                for (double tau : doc.params.taus) {
                    char key[40];
                    std::snprintf(key, sizeof(key), "%g", tau);
                    const json& jn = jb.at("nsd").at(key);
                    b.nsd.emplace_back(
                        tau, jn.is_null() ? std::nullopt
                                          : std::optional<double>(jn.get<double>()));
                }
                e.baseline = b;
            }
            doc.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw IoError(IoError::Kind::Parse, path + ": malformed report: " + e.what());
    }
    return doc;
}

}  // namespace voxeval
