#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "voxeval/batch.hpp"
#include "voxeval/fixture.hpp"
#include "voxeval/report.hpp"

using namespace voxeval;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "voxeval_batch_tests" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

LabelVolume sample_volume(unsigned seed, int blobs) {
    std::mt19937 rng(seed);
    return oracle::random_blob_volume(rng, Dims(20, 20, 6), Spacing(0.5, 1.0, 2.0), blobs);
}

LabelVolume degrade(const LabelVolume& v, unsigned seed) {
    std::mt19937 rng(seed);
    std::bernoulli_distribution keep(0.8);
    LabelVolume out = v;
    for (auto& l : out.labels) {
        if (l != 0 && !keep(rng)) l = 0;
    }
    return out;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VOXEVAL_BIN) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("resolve_pairs") {
    const fs::path gt_dir = temp_dir("pairs_gt");
    const fs::path pred_dir = temp_dir("pairs_pred");
    for (const char* name : {"a.txt", "b.txt", "c.txt"}) {
        write_fixture(sample_volume(1, 1), (gt_dir / name).string());
    }
    write_fixture(sample_volume(2, 1), (pred_dir / "a.txt").string());
    write_fixture(sample_volume(2, 1), (pred_dir / "b.txt").string());
    write_fixture(sample_volume(2, 1), (pred_dir / "unmatched.txt").string());

    SECTION("directories pair by identical filename, sorted") {
        const auto pairs = resolve_pairs({gt_dir.string()}, {pred_dir.string()});
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0].image_id == "a.txt");
        CHECK(pairs[1].image_id == "b.txt");
    }
    SECTION("explicit files pair positionally") {
        const auto pairs = resolve_pairs({(gt_dir / "a.txt").string(), (gt_dir / "b.txt").string()},
                                         {(pred_dir / "a.txt").string(), (pred_dir / "b.txt").string()});
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0].gt_path == (gt_dir / "a.txt").string());
    }
    SECTION("count mismatch and empty matches are errors") {
        CHECK_THROWS_AS(resolve_pairs({(gt_dir / "a.txt").string()},
                                      {(pred_dir / "a.txt").string(), (pred_dir / "b.txt").string()}),
                        std::invalid_argument);
        const fs::path empty = temp_dir("pairs_empty");
        CHECK_THROWS_AS(resolve_pairs({gt_dir.string()}, {empty.string()}),
                        std::invalid_argument);
    }
}

TEST_CASE("run_batch output is identical for any job count") {
    const fs::path gt_dir = temp_dir("jobs_gt");
    const fs::path pred_dir = temp_dir("jobs_pred");
    for (int i = 0; i < 6; ++i) {
        const std::string name = "case" + std::to_string(i) + ".txt";
        const LabelVolume gt = sample_volume(100 + i, 1 + i % 3);
        write_fixture(gt, (gt_dir / name).string());
        write_fixture(degrade(gt, 200 + i), (pred_dir / name).string());
    }
    RunConfig config;
    config.gt_paths = {gt_dir.string()};
    config.pred_paths = {pred_dir.string()};
    const auto pairs = resolve_pairs(config.gt_paths, config.pred_paths);

    ReportDocument sequential;
    config.jobs = 1;
    CHECK(run_batch(config, pairs, sequential) == 0);
    ReportDocument parallel;
    config.jobs = 4;
    CHECK(run_batch(config, pairs, parallel) == 0);
    CHECK(report_to_json(sequential).dump(2) == report_to_json(parallel).dump(2));
    CHECK(report_to_csv(sequential) == report_to_csv(parallel));
    REQUIRE(sequential.entries.size() == 6);
    for (const ReportEntry& e : sequential.entries) {
        CHECK(e.error.empty());
        CHECK(e.mme.has_value());
        CHECK(e.baseline.has_value());
    }
}

TEST_CASE("run_batch records per-pair failures and keeps going") {
    const fs::path dir = temp_dir("fail");
    const LabelVolume gt = sample_volume(7, 2);
    write_fixture(gt, (dir / "good_gt.txt").string());
    write_fixture(degrade(gt, 8), (dir / "good_pred.txt").string());
    std::ofstream(dir / "bad_gt.txt") << "2 2 1 1 1 1\n0 1 x 0\n";
    write_fixture(gt, (dir / "bad_pred.txt").string());

    RunConfig config;
    config.gt_paths = {(dir / "good_gt.txt").string(), (dir / "bad_gt.txt").string()};
    config.pred_paths = {(dir / "good_pred.txt").string(), (dir / "bad_pred.txt").string()};
    ReportDocument doc;
    const int failures = run_batch(config, resolve_pairs(config.gt_paths, config.pred_paths), doc);
    CHECK(failures == 1);
    bool found_error = false, found_good = false;
    for (const ReportEntry& e : doc.entries) {
        if (!e.error.empty()) found_error = true;
        if (e.error.empty() && e.mme) found_good = true;
    }
    CHECK(found_error);
    CHECK(found_good);
}

TEST_CASE("multi-class volumes evaluate every nonzero GT label by default") {
    const Dims dims(14, 10, 1);
    std::vector<std::int32_t> gt(dims.count(), 0), pred(dims.count(), 0);
    for (int y = 1; y < 4; ++y)
        for (int x = 1; x < 5; ++x) gt[dims.index(x, y, 0)] = 1;
    for (int y = 6; y < 9; ++y)
        for (int x = 8; x < 12; ++x) gt[dims.index(x, y, 0)] = 3;
    pred = gt;
    const fs::path dir = temp_dir("multiclass");
    write_fixture(LabelVolume(dims, gt, Spacing()), (dir / "gt.txt").string());
    write_fixture(LabelVolume(dims, pred, Spacing()), (dir / "pred.txt").string());

    RunConfig config;
    config.gt_paths = {(dir / "gt.txt").string()};
    config.pred_paths = {(dir / "pred.txt").string()};
    ReportDocument doc;
    run_batch(config, resolve_pairs(config.gt_paths, config.pred_paths), doc);
    REQUIRE(doc.entries.size() == 2);
    CHECK(doc.entries[0].class_id == 1);
    CHECK(doc.entries[1].class_id == 3);
    const json j = report_to_json(doc);
    CHECK(j["aggregate"]["per_class"].size() == 2);
    CHECK(j["aggregate"].contains("macro"));
}

TEST_CASE("cli end to end") {
    const fs::path dir = temp_dir("cli");
    const LabelVolume gt = sample_volume(31, 2);
    write_fixture(gt, (dir / "gt.txt").string());
    write_fixture(degrade(gt, 32), (dir / "pred.txt").string());
    const std::string gt_arg = (dir / "gt.txt").string();
    const std::string pred_arg = (dir / "pred.txt").string();
    const std::string report = (dir / "report.json").string();

    SECTION("evaluate writes a JSON report and exits 0") {
        CHECK(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg + " --classes 1 --out " +
                      report) == 0);
        const ReportDocument doc = read_report_json(report);
        REQUIRE(doc.entries.size() == 1);
        CHECK(doc.entries.front().mme.has_value());
        CHECK(doc.entries.front().baseline.has_value());
    }
    SECTION("repeated runs produce byte-identical reports") {
        const std::string r1 = (dir / "r1.json").string();
        const std::string r2 = (dir / "r2.json").string();
        REQUIRE(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg + " --out " + r1) == 0);
        REQUIRE(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg + " --out " + r2) == 0);
        CHECK(slurp(r1) == slurp(r2));
    }
    SECTION("csv format") {
        const std::string csv = (dir / "report.csv").string();
        CHECK(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg +
                      " --format csv --out " + csv) == 0);
        CHECK(slurp(csv).find("image,class,property") == 0);
    }
    SECTION("baselines subcommand emits baseline-only entries") {
        const std::string r = (dir / "baselines.json").string();
        CHECK(run_cli("baselines --gt " + gt_arg + " --pred " + pred_arg + " --tau 1,5 --out " +
                      r) == 0);
        const ReportDocument doc = read_report_json(r);
        REQUIRE(!doc.entries.empty());
        CHECK(!doc.entries.front().mme.has_value());
        CHECK(doc.entries.front().baseline.has_value());
        CHECK(doc.entries.front().baseline->nsd.size() == 2);
    }
    SECTION("beta 2 reweights fbeta toward recall") {
        const std::string r1 = (dir / "b1.json").string();
        const std::string r2 = (dir / "b2.json").string();
        REQUIRE(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg + " --out " + r1) == 0);
        REQUIRE(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg +
                        " --beta 2 --out " + r2) == 0);
        const ReportDocument d1 = read_report_json(r1);
        const ReportDocument d2 = read_report_json(r2);
        CHECK(d2.params.beta == 2.0);
        const PRF& f1 = d1.entries.front().mme->scores[3];  // total volume
        const PRF& f2 = d2.entries.front().mme->scores[3];
        CHECK(f1.precision == f2.precision);
        CHECK(f1.recall == f2.recall);
        if (f1.recall < f1.precision) {
            CHECK(f2.fbeta < f1.fbeta);  // recall-heavy mean drops toward recall
        }
    }
    SECTION("theta flags flow into detection") {
        const std::string r = (dir / "theta.json").string();
        REQUIRE(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg +
                        " --theta-tp 0.99 --out " + r) == 0);
        const ReportDocument doc = read_report_json(r);
        CHECK(doc.params.theta_tp == 0.99);
        // partial coverage below 0.99 cannot count as detected
        const PropertyCounts& d = doc.entries.front().mme->counts[0];
        CHECK(d.tp + d.fn == Catch::Approx(2.0));
    }
    SECTION("usage errors exit 1") {
        CHECK(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg) == 1);  // no --out
        CHECK(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg +
                      " --connectivity 7 --out " + report) == 1);
        CHECK(run_cli("") == 1);
    }
    SECTION("evaluation failures exit 2 with the error recorded") {
        const fs::path small = dir / "small.txt";
        std::ofstream(small) << "1 1 1 1 1 1\n0\n";
        const std::string r = (dir / "fail.json").string();
        CHECK(run_cli("evaluate --gt " + gt_arg + " --pred " + small.string() + " --out " + r) ==
              2);
        const ReportDocument doc = read_report_json(r);
        REQUIRE(!doc.entries.empty());
        CHECK(!doc.entries.front().error.empty());
    }
    SECTION("chart renders a deterministic SVG from a report entry") {
        REQUIRE(run_cli("evaluate --gt " + gt_arg + " --pred " + pred_arg + " --out " + report) ==
                0);
        const std::string svg1 = (dir / "c1.svg").string();
        const std::string svg2 = (dir / "c2.svg").string();
        CHECK(run_cli("chart --report " + report + " --image gt.txt --class 1 --out " + svg1) ==
              0);
        CHECK(run_cli("chart --report " + report + " --image gt.txt --class 1 --out " + svg2) ==
              0);
        const std::string svg = slurp(svg1);
        CHECK(svg == slurp(svg2));
        CHECK(svg.find("<svg") == 0);
        CHECK(run_cli("chart --report " + report + " --image missing --class 1 --out " +
                      (dir / "c3.svg").string()) == 2);
    }
    SECTION("jobs flag and env fallback give identical output") {
        const fs::path gt_d = temp_dir("cli_jobs_gt");
        const fs::path pred_d = temp_dir("cli_jobs_pred");
        for (int i = 0; i < 4; ++i) {
            const std::string name = "v" + std::to_string(i) + ".txt";
            const LabelVolume g = sample_volume(300 + i, 2);
            write_fixture(g, (gt_d / name).string());
            write_fixture(degrade(g, 400 + i), (pred_d / name).string());
        }
        const std::string r1 = (dir / "seq.json").string();
        const std::string r4 = (dir / "par.json").string();
        REQUIRE(run_cli("evaluate --gt " + gt_d.string() + " --pred " + pred_d.string() +
                        " --jobs 1 --out " + r1) == 0);
        REQUIRE(run_cli("evaluate --gt " + gt_d.string() + " --pred " + pred_d.string() +
                        " --jobs 4 --out " + r4) == 0);
        CHECK(slurp(r1) == slurp(r4));
    }
}

TEST_CASE("MME_EVAL_JOBS is the --jobs fallback") {
    setenv("MME_EVAL_JOBS", "3", 1);
    CHECK(default_jobs_from_env() == 3);
    setenv("MME_EVAL_JOBS", "junk", 1);
    CHECK(default_jobs_from_env() == 1);
    unsetenv("MME_EVAL_JOBS");
    CHECK(default_jobs_from_env() == 1);
}
