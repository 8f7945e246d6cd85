#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "voxeval/core.hpp"

namespace voxeval {

/// File-format errors carry a machine-checkable kind.
struct IoError : std::runtime_error {
    enum class Kind {
        BadMagic,
        UnsupportedDatatype,
        UnsupportedDimensionality,
        Truncated,
        NegativeLabel,
        NonIntegralValue,
        BadHeader,
        Unreadable,
        Parse,
    };
    Kind kind;
    IoError(Kind kind_, const std::string& what_) : std::runtime_error(what_), kind(kind_) {}
};

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::Unreadable, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in,
                                        const std::string& path) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) {
        throw IoError(IoError::Kind::Unreadable, "zlib init failed for " + path);
    }
    std::vector<std::uint8_t> out;
    out.reserve(in.size() * 4);
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<std::uint8_t*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw IoError(IoError::Kind::Truncated, "corrupt gzip stream in " + path);
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

template <typename T>
inline T read_le(const std::uint8_t* p, bool swap) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if (swap) {
        std::uint8_t* b = reinterpret_cast<std::uint8_t*>(&v);
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    }
    return v;
}

}  // namespace detail

/// Parsed NIfTI-1 header fields used by the reader.
struct NiftiHeader {
    int ndim = 0;
    int dim[3] = {1, 1, 1};
    int datatype = 0;
    double pixdim[3] = {1.0, 1.0, 1.0};
    std::size_t vox_offset = 0;
    double scl_slope = 0.0;
    double scl_inter = 0.0;
    bool byte_swapped = false;
};

/// Read a single-file NIfTI-1 label volume (.nii or .nii.gz). Supported
/// datatypes: uint8, int16, int32, float32 (floats must be integral within
/// 1e-3). Spacing comes from pixdim; the orientation matrix is ignored.
inline LabelVolume read_nifti(const std::string& path,
                              std::vector<std::string>* warnings = nullptr) {
    std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
        bytes = detail::gunzip(bytes, path);
    }
    if (bytes.size() < 348) {
        throw IoError(IoError::Kind::Truncated, path + ": shorter than a NIfTI-1 header");
    }

    // dim[0] outside 1..7 means the file was written with the other byte order.
    bool swap = false;
    std::int16_t dim0 = detail::read_le<std::int16_t>(bytes.data() + 40, false);
    if (dim0 < 1 || dim0 > 7) {
        swap = true;
        dim0 = detail::read_le<std::int16_t>(bytes.data() + 40, true);
    }
    const std::int32_t sizeof_hdr = detail::read_le<std::int32_t>(bytes.data(), swap);
    if (sizeof_hdr != 348) {
        throw IoError(IoError::Kind::BadHeader,
                      path + ": header size " + std::to_string(sizeof_hdr) + " != 348");
    }
    const char* magic = reinterpret_cast<const char*>(bytes.data() + 344);
    if (std::memcmp(magic, "n+1", 4) != 0) {
        if (std::memcmp(magic, "ni1", 4) == 0) {
            throw IoError(IoError::Kind::BadMagic,
                          path + ": header-pair NIfTI (ni1) is not supported");
        }
        throw IoError(IoError::Kind::BadMagic, path + ": bad NIfTI magic");
    }
    if (dim0 != 2 && dim0 != 3) {
        throw IoError(IoError::Kind::UnsupportedDimensionality,
                      path + ": dim[0] = " + std::to_string(dim0) + ", expected 2 or 3");
    }

    NiftiHeader hdr;
    hdr.ndim = dim0;
    hdr.byte_swapped = swap;
    for (int i = 0; i < dim0; ++i) {
        hdr.dim[i] = detail::read_le<std::int16_t>(bytes.data() + 40 + 2 * (i + 1), swap);
        if (hdr.dim[i] < 1) {
            throw IoError(IoError::Kind::BadHeader,
                          path + ": dim[" + std::to_string(i + 1) + "] < 1");
        }
    }
    hdr.datatype = detail::read_le<std::int16_t>(bytes.data() + 70, swap);
    for (int i = 0; i < 3; ++i) {
        const float p = detail::read_le<float>(bytes.data() + 76 + 4 * (i + 1), swap);
        hdr.pixdim[i] = std::abs(static_cast<double>(p));
        if (hdr.pixdim[i] == 0.0) {
            hdr.pixdim[i] = 1.0;
            // A missing third pixdim on a 2D image is expected, not suspicious.
            if (!(dim0 == 2 && i == 2) && warnings) {
                warnings->push_back(path + ": pixdim[" + std::to_string(i + 1) +
                                    "] is 0, using 1.0 mm");
            }
        }
    }
    const float vox_offset = detail::read_le<float>(bytes.data() + 108, swap);
    if (vox_offset < 348.0f) {
        throw IoError(IoError::Kind::BadHeader, path + ": vox_offset before header end");
    }
    hdr.vox_offset = static_cast<std::size_t>(vox_offset);
    hdr.scl_slope = detail::read_le<float>(bytes.data() + 112, swap);
    hdr.scl_inter = detail::read_le<float>(bytes.data() + 116, swap);
    if (warnings && hdr.scl_slope != 0.0 && hdr.scl_slope != 1.0) {
        warnings->push_back(path + ": scl_slope ignored for label volume");
    }

    const Dims dims(hdr.dim[0], hdr.dim[1], dim0 == 3 ? hdr.dim[2] : 1);
    const Spacing spacing(hdr.pixdim[0], hdr.pixdim[1], hdr.pixdim[2]);
    const std::size_t count = dims.count();

    std::size_t elem_size = 0;
    switch (hdr.datatype) {
        case 2: elem_size = 1; break;   // DT_UINT8
        case 4: elem_size = 2; break;   // DT_INT16
        case 8: elem_size = 4; break;   // DT_INT32
        case 16: elem_size = 4; break;  // DT_FLOAT32
        default:
            throw IoError(IoError::Kind::UnsupportedDatatype,
                          path + ": unsupported datatype code " + std::to_string(hdr.datatype));
    }
    if (bytes.size() < hdr.vox_offset + count * elem_size) {
        throw IoError(IoError::Kind::Truncated, path + ": truncated voxel payload");
    }

    std::vector<std::int32_t> labels(count);
    const std::uint8_t* p = bytes.data() + hdr.vox_offset;
    for (std::size_t i = 0; i < count; ++i, p += elem_size) {
        std::int64_t v = 0;
        switch (hdr.datatype) {
            case 2: v = *p; break;
            case 4: v = detail::read_le<std::int16_t>(p, swap); break;
            case 8: v = detail::read_le<std::int32_t>(p, swap); break;
            case 16: {
                const float f = detail::read_le<float>(p, swap);
                const double r = std::round(static_cast<double>(f));
                if (std::abs(static_cast<double>(f) - r) > 1e-3) {
                    throw IoError(IoError::Kind::NonIntegralValue,
                                  path + ": non-integral float label " + std::to_string(f));
                }
                v = static_cast<std::int64_t>(r);
                break;
            }
        }
        if (v < 0) {
            throw IoError(IoError::Kind::NegativeLabel,
                          path + ": negative label " + std::to_string(v));
        }
        labels[i] = static_cast<std::int32_t>(v);
    }
    return LabelVolume(dims, std::move(labels), spacing);
}

}  // namespace voxeval
