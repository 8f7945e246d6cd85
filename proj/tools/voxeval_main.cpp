// voxeval: spacing-aware evaluation of volumetric segmentations.
//
// Subcommands:
//   evaluate   multi-modal properties (D/U/B/T/R) plus baseline metrics
//   baselines  voxel/surface baseline metrics only
//   chart      render a spider chart (SVG) from a JSON report entry

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "voxeval/batch.hpp"
#include "voxeval/report.hpp"
#include "voxeval/spider_chart.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitEvalFailure = 2;

void add_run_options(CLI::App* cmd, voxeval::RunConfig& config) {
    cmd->add_option("--gt", config.gt_paths, "Ground-truth file(s) or one directory")
        ->required();
    cmd->add_option("--pred", config.pred_paths, "Prediction file(s) or one directory")
        ->required();
    cmd->add_option("--classes", config.class_ids,
                    "Class ids to evaluate (default: all nonzero labels in GT)")
        ->delimiter(',');
    cmd->add_option("--theta-tp", config.theta_tp, "Detection coverage threshold")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--theta-fp", config.theta_fp, "Detection false-part threshold")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--beta", config.beta, "F-beta weight (beta>1 favors recall)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--connectivity", config.connectivity, "Voxel connectivity: 6, 18 or 26")
        ->check(CLI::IsMember({6, 18, 26}));
    cmd->add_option("--tau", config.taus, "NSD tolerance(s) in mm")
        ->delimiter(',')
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", config.out_path, "Output report path")->required();
    cmd->add_option("--format", config.format, "Report format")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, voxeval::ReportFormat>{
                {"json", voxeval::ReportFormat::Json}, {"csv", voxeval::ReportFormat::Csv}},
            CLI::ignore_case));
    config.jobs = voxeval::default_jobs_from_env();
    cmd->add_option("--jobs", config.jobs, "Concurrent pair evaluations")
        ->check(CLI::PositiveNumber);
}

int run_evaluation(const voxeval::RunConfig& config) {
    std::vector<voxeval::PairSpec> pairs;
    try {
        pairs = voxeval::resolve_pairs(config.gt_paths, config.pred_paths);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    voxeval::ReportDocument doc;
    const int failures = voxeval::run_batch(config, pairs, doc);
    try {
        voxeval::write_report(doc, config.format, config.out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEvalFailure;
    }
    if (failures > 0) {
        std::cerr << failures << " pair(s) failed; details recorded in " << config.out_path
                  << "\n";
        return kExitEvalFailure;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spacing-aware volumetric segmentation evaluation"};
    app.require_subcommand(1);

    voxeval::RunConfig eval_config;
    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "Multi-modal properties plus baseline metrics");
    add_run_options(eval_cmd, eval_config);

    voxeval::RunConfig base_config;
    base_config.baselines_only = true;
    CLI::App* base_cmd = app.add_subcommand("baselines", "Baseline metrics only");
    add_run_options(base_cmd, base_config);

    std::string report_path, image_id, chart_out;
    int chart_class = 0;
    CLI::App* chart_cmd = app.add_subcommand("chart", "Render a spider chart from a report");
    chart_cmd->add_option("--report", report_path, "JSON report produced by evaluate")
        ->required();
    chart_cmd->add_option("--image", image_id, "Image id of the entry")->required();
    chart_cmd->add_option("--class", chart_class, "Class id of the entry")->required();
    chart_cmd->add_option("--out", chart_out, "Output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (eval_cmd->parsed()) return run_evaluation(eval_config);
    if (base_cmd->parsed()) return run_evaluation(base_config);

    // chart
    try {
        const voxeval::ReportDocument doc = voxeval::read_report_json(report_path);
        const voxeval::ReportEntry* entry = nullptr;
        for (const voxeval::ReportEntry& e : doc.entries) {
            if (e.image == image_id && e.class_id == chart_class && e.mme) {
                entry = &e;
                break;
            }
        }
        if (!entry) {
            std::cerr << "error: no entry for image '" << image_id << "' class " << chart_class
                      << " in " << report_path << "\n";
            return kExitEvalFailure;
        }
        const std::string svg = voxeval::render_spider_chart(voxeval::spider_spec_from(
            *entry->mme, image_id + " class " + std::to_string(chart_class)));
        std::ofstream out(chart_out, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << chart_out << "\n";
            return kExitEvalFailure;
        }
        out << svg;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEvalFailure;
    }
    return kExitOk;
}
