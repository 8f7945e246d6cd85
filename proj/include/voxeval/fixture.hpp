#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "voxeval/core.hpp"
#include "voxeval/nifti.hpp"  // IoError

namespace voxeval {

/// Plain-text label volume: first line "w h d dx dy dz", then w*h*d
/// whitespace-separated integer labels in row-major order (x fastest).
inline LabelVolume read_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoError::Kind::Unreadable, "cannot open " + path);

    std::string line;
    int line_no = 0;

    auto fail = [&](int column, const std::string& msg) -> IoError {
        return IoError(IoError::Kind::Parse, path + ":" + std::to_string(line_no) + ":" +
                                                 std::to_string(column) + ": " + msg);
    };

    if (!std::getline(in, line)) throw fail(1, "missing header line");
    ++line_no;
    std::istringstream header(line);
    long w = 0, h = 0, d = 0;
    double dx = 0, dy = 0, dz = 0;
    if (!(header >> w >> h >> d >> dx >> dy >> dz)) {
        throw fail(1, "header must be 'w h d dx dy dz'");
    }
    if (w <= 0 || h <= 0 || d <= 0) throw fail(1, "non-positive dims");
    if (!(dx > 0 && dy > 0 && dz > 0)) throw fail(1, "non-positive spacing");

    const Dims dims(static_cast<int>(w), static_cast<int>(h), static_cast<int>(d));
    const std::size_t expected = dims.count();
    std::vector<std::int32_t> labels;
    labels.reserve(expected);

    while (std::getline(in, line)) {
        ++line_no;
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' ||
                                         line[pos] == '\r')) {
                ++pos;
            }
            if (pos >= line.size()) break;
            std::size_t end = pos;
            while (end < line.size() && line[end] != ' ' && line[end] != '\t' &&
                   line[end] != '\r') {
                ++end;
            }
            std::int32_t value = 0;
            const auto [ptr, ec] =
                std::from_chars(line.data() + pos, line.data() + end, value);
            if (ec != std::errc() || ptr != line.data() + end) {
                throw fail(static_cast<int>(pos) + 1,
                           "non-numeric token '" + line.substr(pos, end - pos) + "'");
            }
            if (value < 0) {
                throw fail(static_cast<int>(pos) + 1, "negative label");
            }
            if (labels.size() == expected) {
                throw fail(static_cast<int>(pos) + 1,
                           "more than " + std::to_string(expected) + " labels");
            }
            labels.push_back(value);
            pos = end;
        }
    }
    if (labels.size() != expected) {
        throw IoError(IoError::Kind::Parse,
                      path + ": expected " + std::to_string(expected) + " labels, got " +
                          std::to_string(labels.size()));
    }
    return LabelVolume(dims, std::move(labels), Spacing(dx, dy, dz));
}

/// Mirror of read_fixture; spacing is written with enough digits for a
/// bit-exact round trip.
inline void write_fixture(const LabelVolume& volume, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(IoError::Kind::Unreadable, "cannot write " + path);
    char header[128];
    std::snprintf(header, sizeof(header), "%d %d %d %.17g %.17g %.17g", volume.dims.w,
                  volume.dims.h, volume.dims.d, volume.spacing.dx, volume.spacing.dy,
                  volume.spacing.dz);
    out << header << "\n";
    std::size_t i = 0;
    for (int z = 0; z < volume.dims.d; ++z)
        for (int y = 0; y < volume.dims.h; ++y) {
            for (int x = 0; x < volume.dims.w; ++x, ++i) {
                if (x) out << ' ';
                out << volume.labels[i];
            }
            out << '\n';
        }
    if (!out) throw IoError(IoError::Kind::Unreadable, "write failed: " + path);
}

}  // namespace voxeval
