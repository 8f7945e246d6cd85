#include <catch2/catch_amalgamated.hpp>
#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "voxeval/fixture.hpp"
#include "voxeval/nifti.hpp"
#include "voxeval/report.hpp"

using namespace voxeval;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "voxeval_io_tests";
        fs::create_directories(d);
        return d;
    }();
    return dir / name;
}

void put_i16(std::vector<std::uint8_t>& b, std::size_t off, std::int16_t v, bool be) {
    std::uint8_t raw[2];
    std::memcpy(raw, &v, 2);
    b[off] = be ? raw[1] : raw[0];
    b[off + 1] = be ? raw[0] : raw[1];
}

void put_i32(std::vector<std::uint8_t>& b, std::size_t off, std::int32_t v, bool be) {
    std::uint8_t raw[4];
    std::memcpy(raw, &v, 4);
    for (int i = 0; i < 4; ++i) b[off + i] = be ? raw[3 - i] : raw[i];
}

void put_f32(std::vector<std::uint8_t>& b, std::size_t off, float v, bool be) {
    std::uint8_t raw[4];
    std::memcpy(raw, &v, 4);
    for (int i = 0; i < 4; ++i) b[off + i] = be ? raw[3 - i] : raw[i];
}

/// Hand-built single-file NIfTI-1 byte image.
std::vector<std::uint8_t> make_nifti_bytes(int ndim, int w, int h, int d, float px, float py,
                                           float pz, std::int16_t datatype,
                                           const std::vector<double>& values,
                                           bool big_endian = false) {
    const std::size_t elem = datatype == 2 ? 1 : (datatype == 4 ? 2 : 4);
    std::vector<std::uint8_t> b(352 + values.size() * elem, 0);
    put_i32(b, 0, 348, big_endian);
    put_i16(b, 40, static_cast<std::int16_t>(ndim), big_endian);
    put_i16(b, 42, static_cast<std::int16_t>(w), big_endian);
    put_i16(b, 44, static_cast<std::int16_t>(h), big_endian);
    put_i16(b, 46, static_cast<std::int16_t>(ndim == 3 ? d : 1), big_endian);
    for (int i = 4; i <= 7; ++i) put_i16(b, 40 + 2 * i, 1, big_endian);
    put_i16(b, 70, datatype, big_endian);
    put_i16(b, 72, static_cast<std::int16_t>(elem * 8), big_endian);  // bitpix
    put_f32(b, 80, px, big_endian);
    put_f32(b, 84, py, big_endian);
    put_f32(b, 88, pz, big_endian);
    put_f32(b, 108, 352.0f, big_endian);  // vox_offset
    std::memcpy(b.data() + 344, "n+1", 4);
    std::size_t off = 352;
    for (double v : values) {
        switch (datatype) {
            case 2: b[off] = static_cast<std::uint8_t>(v); break;
            case 4: put_i16(b, off, static_cast<std::int16_t>(v), big_endian); break;
            case 8: put_i32(b, off, static_cast<std::int32_t>(v), big_endian); break;
            case 16: put_f32(b, off, static_cast<float>(v), big_endian); break;
        }
        off += elem;
    }
    return b;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void write_gzipped(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    gzFile gz = gzopen(path.string().c_str(), "wb");
    REQUIRE(gz != nullptr);
    REQUIRE(gzwrite(gz, bytes.data(), static_cast<unsigned>(bytes.size())) ==
            static_cast<int>(bytes.size()));
    gzclose(gz);
}

}  // namespace

TEST_CASE("nifti reader parses hand-built fixtures") {
    SECTION("2D uint8 plain") {
        const auto bytes = make_nifti_bytes(2, 2, 2, 1, 1, 1, 0, 2, {0, 1, 1, 0});
        const fs::path p = temp_file("u8.nii");
        write_bytes(p, bytes);
        const LabelVolume v = read_nifti(p.string());
        CHECK(v.dims == Dims(2, 2, 1));
        CHECK(v.labels == std::vector<std::int32_t>{0, 1, 1, 0});
        CHECK(v.spacing == Spacing(1, 1, 1));  // zero pixdim -> 1.0 for 2D depth
    }
    SECTION("3D int16 with anisotropic spacing preserved to float precision") {
        const auto bytes =
            make_nifti_bytes(3, 2, 2, 2, 0.97f, 0.97f, 2.5f, 4, {0, 1, 2, 3, 4, 5, 6, 7});
        const fs::path p = temp_file("i16.nii");
        write_bytes(p, bytes);
        const LabelVolume v = read_nifti(p.string());
        CHECK(v.dims == Dims(2, 2, 2));
        CHECK(v.spacing.dx == static_cast<double>(0.97f));
        CHECK(v.spacing.dz == 2.5);
        CHECK(v.labels == std::vector<std::int32_t>{0, 1, 2, 3, 4, 5, 6, 7});
    }
    SECTION("int32 and float32 payloads") {
        const fs::path p32 = temp_file("i32.nii");
        write_bytes(p32, make_nifti_bytes(3, 2, 1, 2, 1, 1, 1, 8, {7, 0, 100000, 3}));
        CHECK(read_nifti(p32.string()).labels ==
              std::vector<std::int32_t>{7, 0, 100000, 3});
        const fs::path pf = temp_file("f32.nii");
        write_bytes(pf, make_nifti_bytes(3, 2, 1, 2, 1, 1, 1, 16, {2.0, 0.0, 1.0004, 5.0}));
        CHECK(read_nifti(pf.string()).labels == std::vector<std::int32_t>{2, 0, 1, 5});
    }
    SECTION("gzip compression is transparent") {
        const auto bytes = make_nifti_bytes(2, 2, 2, 1, 1, 1, 0, 2, {0, 1, 1, 0});
        const fs::path p = temp_file("u8.nii.gz");
        write_gzipped(p, bytes);
        const LabelVolume v = read_nifti(p.string());
        CHECK(v.labels == std::vector<std::int32_t>{0, 1, 1, 0});
    }
    SECTION("big-endian files are detected via dim[0]") {
        const auto bytes =
            make_nifti_bytes(3, 2, 2, 1, 0.5f, 1.0f, 2.0f, 4, {1, 2, 3, 4}, true);
        const fs::path p = temp_file("be.nii");
        write_bytes(p, bytes);
        const LabelVolume v = read_nifti(p.string());
        CHECK(v.labels == std::vector<std::int32_t>{1, 2, 3, 4});
        CHECK(v.spacing.dx == 0.5);
    }
}

TEST_CASE("nifti reader error paths are distinct") {
    const auto good = make_nifti_bytes(2, 2, 2, 1, 1, 1, 0, 2, {0, 1, 1, 0});
    SECTION("bad magic") {
        auto bytes = good;
        std::memcpy(bytes.data() + 344, "xxx", 4);
        const fs::path p = temp_file("badmagic.nii");
        write_bytes(p, bytes);
        try {
            read_nifti(p.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::BadMagic);
        }
    }
    SECTION("header-pair magic rejected") {
        auto bytes = good;
        std::memcpy(bytes.data() + 344, "ni1", 4);
        const fs::path p = temp_file("ni1.nii");
        write_bytes(p, bytes);
        try {
            read_nifti(p.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::BadMagic);
        }
    }
    SECTION("unsupported datatype") {
        const auto bytes = make_nifti_bytes(2, 2, 2, 1, 1, 1, 0, 64, {0, 0, 0, 0});
        const fs::path p = temp_file("f64.nii");
        write_bytes(p, bytes);
        try {
            read_nifti(p.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::UnsupportedDatatype);
        }
    }
    SECTION("truncated payload") {
        auto bytes = good;
        bytes.resize(bytes.size() - 2);
        const fs::path p = temp_file("trunc.nii");
        write_bytes(p, bytes);
        try {
            read_nifti(p.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::Truncated);
        }
    }
    SECTION("negative labels") {
        const auto bytes = make_nifti_bytes(2, 2, 2, 1, 1, 1, 0, 4, {0, -3, 1, 0});
        const fs::path p = temp_file("neg.nii");
        write_bytes(p, bytes);
        try {
            read_nifti(p.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::NegativeLabel);
        }
    }
    SECTION("non-integral float labels") {
        const auto bytes = make_nifti_bytes(2, 2, 2, 1, 1, 1, 0, 16, {0, 0.5, 1, 0});
        const fs::path p = temp_file("frac.nii");
        write_bytes(p, bytes);
        try {
            read_nifti(p.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::NonIntegralValue);
        }
    }
    SECTION("4D dimensionality rejected") {
        auto bytes = good;
        put_i16(bytes, 40, 4, false);
        const fs::path p = temp_file("dim4.nii");
        write_bytes(p, bytes);
        try {
            read_nifti(p.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::UnsupportedDimensionality);
        }
    }
}

TEST_CASE("fixture text format") {
    SECTION("minimal one-voxel file") {
        const fs::path p = temp_file("one.txt");
        std::ofstream(p) << "1 1 1 1 1 1\n0\n";
        const LabelVolume v = read_fixture(p.string());
        CHECK(v.dims == Dims(1, 1, 1));
        CHECK(v.labels == std::vector<std::int32_t>{0});
    }
    SECTION("cross-format equality with the NIfTI fixture") {
        const fs::path p = temp_file("cross.txt");
        std::ofstream(p) << "2 2 1 1 1 1\n0 1 1 0\n";
        const LabelVolume a = read_fixture(p.string());
        const fs::path pn = temp_file("cross.nii");
        write_bytes(pn, make_nifti_bytes(2, 2, 2, 1, 1, 1, 0, 2, {0, 1, 1, 0}));
        const LabelVolume b = read_nifti(pn.string());
        CHECK(a.dims == b.dims);
        CHECK(a.labels == b.labels);
        CHECK(a.spacing == b.spacing);
    }
    SECTION("malformed token names line and column") {
        const fs::path p = temp_file("bad.txt");
        std::ofstream(p) << "2 2 1 1 1 1\n0 1\nx 0\n";
        try {
            read_fixture(p.string());
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind == IoError::Kind::Parse);
            CHECK(std::string(e.what()).find(":3:1") != std::string::npos);
            CHECK(std::string(e.what()).find("'x'") != std::string::npos);
        }
    }
    SECTION("count mismatch is an error") {
        const fs::path p = temp_file("short.txt");
        std::ofstream(p) << "2 2 1 1 1 1\n0 1 1\n";
        CHECK_THROWS_AS(read_fixture(p.string()), IoError);
        const fs::path p2 = temp_file("long.txt");
        std::ofstream(p2) << "2 2 1 1 1 1\n0 1 1 0 1\n";
        CHECK_THROWS_AS(read_fixture(p2.string()), IoError);
    }
    SECTION("write/read round trip is bit-exact") {
        std::mt19937 rng(80);
        const LabelVolume v = oracle::random_label_volume(
            rng, Dims(7, 5, 3), Spacing(0.9699999999999998, 1.125, 2.5), 4, 0.5);
        const fs::path p = temp_file("roundtrip.txt");
        write_fixture(v, p.string());
        const LabelVolume back = read_fixture(p.string());
        CHECK(back.dims == v.dims);
        CHECK(back.labels == v.labels);
        CHECK(back.spacing.dx == v.spacing.dx);
        CHECK(back.spacing.dy == v.spacing.dy);
        CHECK(back.spacing.dz == v.spacing.dz);
    }
}

TEST_CASE("report document") {
    ReportDocument doc;
    doc.params.taus = {1.0, 5.0};

    SECTION("empty document is valid JSON with zero entries") {
        const json j = report_to_json(doc);
        CHECK(j["entries"].empty());
        CHECK(j["schema_version"] == 1);
        CHECK(j["aggregate"]["n_entries"] == 0);
    }

    MMEResult mme;
    for (int p = 0; p < 5; ++p) {
        mme.counts[p] = PropertyCounts{3.0, 1.0, 0.5};
        mme.scores[p] = prf(mme.counts[p], 1.0);
    }
    BaselineReport base;
    base.accuracy = 0.971234567;
    base.precision = 0.751234567;
    base.recall = 2.0 / 3.0;
    base.fbeta = 0.70588;
    base.dice = 0.70588;
    base.iou = 0.54545;
    base.volume_similarity = 0.9;
    base.hd = HausdorffStats{1.234567891, 2.5, 3.75};
    base.nsd = {{1.0, 0.43219876}, {5.0, std::nullopt}};
    ReportEntry entry;
    entry.image = "case1.nii.gz";
    entry.class_id = 1;
    entry.mme = mme;
    entry.baseline = base;
    doc.entries.push_back(entry);

    SECTION("csv has one row per property with baseline columns") {
        const std::string csv = report_to_csv(doc);
        CHECK(csv.find("image,class,property,tp,fp,fn,precision,recall,fbeta,") == 0);
        CHECK(csv.find("nsd_tau_1") != std::string::npos);
        CHECK(csv.find("nsd_tau_5") != std::string::npos);
        std::size_t rows = 0, pos = 0;
        while ((pos = csv.find("case1.nii.gz,", pos)) != std::string::npos) {
            ++rows;
            pos += 1;
        }
        CHECK(rows == 5);
        CHECK(csv.find("case1.nii.gz,1,detection,") != std::string::npos);
        CHECK(csv.find("case1.nii.gz,1,relative_volume,") != std::string::npos);
    }

    SECTION("json round trip preserves PRF within 1e-6") {
        const fs::path p = temp_file("report.json");
        write_report(doc, ReportFormat::Json, p.string());
        const ReportDocument back = read_report_json(p.string());
        REQUIRE(back.entries.size() == 1);
        const ReportEntry& e = back.entries.front();
        REQUIRE(e.mme.has_value());
        REQUIRE(e.baseline.has_value());
        for (int prop = 0; prop < 5; ++prop) {
            CHECK(e.mme->scores[prop].precision ==
                  Catch::Approx(mme.scores[prop].precision).margin(1e-6));
            CHECK(e.mme->scores[prop].recall ==
                  Catch::Approx(mme.scores[prop].recall).margin(1e-6));
            CHECK(e.mme->scores[prop].fbeta ==
                  Catch::Approx(mme.scores[prop].fbeta).margin(1e-6));
        }
        CHECK(e.baseline->precision == Catch::Approx(base.precision).margin(1e-6));
        CHECK(e.baseline->hd->avg_mm == Catch::Approx(base.hd->avg_mm).margin(1e-6));
        CHECK(e.baseline->nsd[0].second.value() ==
              Catch::Approx(base.nsd[0].second.value()).margin(1e-6));
        CHECK(!e.baseline->nsd[1].second.has_value());
        CHECK(back.params.taus == doc.params.taus);
    }

    SECTION("aggregate block matches recomputation from entries") {
        ReportEntry e2 = entry;
        e2.image = "case2.nii.gz";
        for (int p = 0; p < 5; ++p) {
            e2.mme->counts[p] = PropertyCounts{1.0, 1.0, 1.0};
            e2.mme->scores[p] = prf(e2.mme->counts[p], 1.0);
        }
        doc.entries.push_back(e2);
        const json j = report_to_json(doc);
        const json& det = j["aggregate"]["per_class"][0]["mme"]["detection"];
        const double p1 = round6(mme.scores[0].precision);
        const double p2 = round6(e2.mme->scores[0].precision);
        const double mean = (p1 + p2) / 2.0;
        CHECK(det["precision"]["mean"].get<double>() == Catch::Approx(mean).margin(1e-6));
        const double expected_std =
            std::sqrt(((p1 - mean) * (p1 - mean) + (p2 - mean) * (p2 - mean)) / 2.0);
        CHECK(det["precision"]["std"].get<double>() ==
              Catch::Approx(expected_std).margin(1e-6));
        CHECK(det["precision"]["n"] == 2);
        // one missing NSD value per entry at tau=5
        CHECK(j["aggregate"]["per_class"][0]["baseline"]["nsd"]["5"]["excluded"] == 2);
    }

    SECTION("failed entries keep their error and are excluded from aggregates") {
        ReportEntry bad;
        bad.image = "broken.nii";
        bad.class_id = 0;
        bad.error = "truncated voxel payload";
        doc.entries.push_back(bad);
        const json j = report_to_json(doc);
        CHECK(j["entries"][1]["error"] == "truncated voxel payload");
        CHECK(j["aggregate"]["per_class"][0]["n"] == 1);
        const std::string csv = report_to_csv(doc);
        CHECK(csv.find("broken.nii,0") != std::string::npos);
        CHECK(csv.find("truncated voxel payload") != std::string::npos);
    }
}
