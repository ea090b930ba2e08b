#include "svfsyn/volume_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "json.hpp"

namespace svfsyn {

const char *volume_kind_name(VolumeKind k) {
    switch (k) {
        case VolumeKind::intensity: return "intensity";
        case VolumeKind::labels: return "labels";
        case VolumeKind::svf: return "svf";
        case VolumeKind::displacement: return "displacement";
    }
    return "intensity";
}

VolumeKind volume_kind_from_name(const std::string &name) {
    if (name == "intensity") return VolumeKind::intensity;
    if (name == "labels") return VolumeKind::labels;
    if (name == "svf") return VolumeKind::svf;
    if (name == "displacement") return VolumeKind::displacement;
    throw io_error("unknown volume kind '" + name + "'");
}

namespace {

// NIfTI-1 single-file header; field order gives the standard 348-byte
// naturally aligned layout.
struct Nifti1Header {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope, scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kIntentVector = 1007;

bool has_nii_extension(const std::string &path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".nii") == 0;
}

std::vector<char> read_file_bytes(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<char> bytes(static_cast<std::size_t>(size));
    if (size > 0) in.read(bytes.data(), size);
    if (!in) throw io_error("failed reading '" + path + "'");
    return bytes;
}

void write_file_bytes(const std::string &path, const void *data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(static_cast<const char *>(data), static_cast<std::streamsize>(size));
    if (!out) throw io_error("failed writing '" + path + "'");
}

GridGeometry geometry_from_header(const Nifti1Header &h, const std::string &path) {
    GridGeometry g;
    for (int a = 0; a < 3; ++a) {
        g.dims[a] = h.dim[a + 1];
        g.spacing[a] = h.pixdim[a + 1] > 0.0f ? h.pixdim[a + 1] : 1.0;
    }
    if (h.sform_code > 0) {
        const float *rows[3] = {h.srow_x, h.srow_y, h.srow_z};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (r != c && rows[r][c] != 0.0f)
                    throw io_error("unsupported NIfTI '" + path +
                                   "': srow carries rotation/shear (identity orientation only)");
        g.origin = {rows[0][3], rows[1][3], rows[2][3]};
    } else {
        g.origin = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
    }
    g.validate();
    return g;
}

AnyVolume read_nifti(const std::string &path) {
    const std::vector<char> bytes = read_file_bytes(path);
    if (bytes.size() < sizeof(Nifti1Header))
        throw io_error("NIfTI '" + path + "': file shorter than the 348-byte header");
    Nifti1Header h;
    std::memcpy(&h, bytes.data(), sizeof(h));
    if (h.sizeof_hdr != 348) {
        std::int32_t swapped;
        std::uint32_t raw;
        std::memcpy(&raw, &h.sizeof_hdr, 4);
        raw = __builtin_bswap32(raw);
        std::memcpy(&swapped, &raw, 4);
        if (swapped == 348)
            throw io_error("NIfTI '" + path +
                           "': big-endian file unsupported (sizeof_hdr byte order)");
        throw io_error("NIfTI '" + path + "': bad sizeof_hdr (not a NIfTI-1 file)");
    }
    if (std::strncmp(h.magic, "n+1", 3) != 0)
        throw io_error("NIfTI '" + path + "': magic is not 'n+1' (single-file .nii required)");

    const bool is_vector = h.dim[0] == 5 && h.dim[5] == 3;
    if (!(h.dim[0] == 3 || (h.dim[0] == 4 && h.dim[4] == 1) || is_vector))
        throw io_error("NIfTI '" + path + "': dim[0]=" + std::to_string(h.dim[0]) +
                       " unsupported (3D scalar or dim[5]=3 vector only)");
    for (int a = 1; a <= 3; ++a)
        if (h.dim[a] < 2) throw io_error("NIfTI '" + path + "': dim[1..3] must be >= 2");

    const GridGeometry geom = geometry_from_header(h, path);
    const std::size_t n = geom.voxel_count();
    const std::size_t ncomp = is_vector ? 3 : 1;

    std::size_t elem_size;
    switch (h.datatype) {
        case kDtFloat32: elem_size = 4; break;
        case kDtInt16: elem_size = 2; break;
        case kDtUint8: elem_size = 1; break;
        default:
            throw io_error("NIfTI '" + path + "': datatype " + std::to_string(h.datatype) +
                           " unsupported (float32, int16, uint8 only)");
    }
    if (static_cast<std::size_t>(h.bitpix) != elem_size * 8)
        throw io_error("NIfTI '" + path + "': bitpix inconsistent with datatype");
    if (is_vector && h.datatype != kDtFloat32)
        throw io_error("NIfTI '" + path + "': vector fields must be float32");

    const std::size_t offset = static_cast<std::size_t>(h.vox_offset);
    if (offset < sizeof(Nifti1Header))
        throw io_error("NIfTI '" + path + "': vox_offset overlaps the header");
    const std::size_t need = offset + n * ncomp * elem_size;
    if (bytes.size() < need)
        throw io_error("NIfTI '" + path + "': payload shorter than dim[] promises (" +
                       std::to_string(bytes.size()) + " < " + std::to_string(need) + " bytes)");

    AnyVolume out;
    const char *payload = bytes.data() + offset;
    if (is_vector) {
        out.kind = std::strncmp(h.intent_name, "svf", 3) == 0 ? VolumeKind::svf
                                                              : VolumeKind::displacement;
        out.field = VectorField(geom);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t p = 0; p < n; ++p) {
                float f;
                std::memcpy(&f, payload + (c * n + p) * 4, 4);
                out.field.vectors[p][c] = f;
            }
    } else {
        out.kind = h.datatype == kDtFloat32 ? VolumeKind::intensity : VolumeKind::labels;
        out.scalar = ScalarVolume(geom, out.kind == VolumeKind::labels);
        for (std::size_t p = 0; p < n; ++p) {
            double v;
            if (h.datatype == kDtFloat32) {
                float f;
                std::memcpy(&f, payload + p * 4, 4);
                v = f;
            } else if (h.datatype == kDtInt16) {
                std::int16_t s;
                std::memcpy(&s, payload + p * 2, 2);
                v = s;
            } else {
                std::uint8_t b;
                std::memcpy(&b, payload + p, 1);
                v = b;
            }
            out.scalar.values[p] = v;
        }
    }
    return out;
}

Nifti1Header blank_header(const GridGeometry &geom) {
    Nifti1Header h;
    std::memset(&h, 0, sizeof(h));
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    for (int a = 0; a < 3; ++a) h.dim[a + 1] = static_cast<std::int16_t>(geom.dims[a]);
    for (int a = 4; a <= 7; ++a) h.dim[a] = 1;
    h.pixdim[0] = 1.0f;
    for (int a = 0; a < 3; ++a) h.pixdim[a + 1] = static_cast<float>(geom.spacing[a]);
    for (int a = 4; a <= 7; ++a) h.pixdim[a] = 1.0f;
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.xyzt_units = 2;  // millimetres
    h.sform_code = 1;
    h.srow_x[0] = static_cast<float>(geom.spacing[0]);
    h.srow_y[1] = static_cast<float>(geom.spacing[1]);
    h.srow_z[2] = static_cast<float>(geom.spacing[2]);
    h.srow_x[3] = static_cast<float>(geom.origin[0]);
    h.srow_y[3] = static_cast<float>(geom.origin[1]);
    h.srow_z[3] = static_cast<float>(geom.origin[2]);
    h.qoffset_x = static_cast<float>(geom.origin[0]);
    h.qoffset_y = static_cast<float>(geom.origin[1]);
    h.qoffset_z = static_cast<float>(geom.origin[2]);
    std::memcpy(h.magic, "n+1", 4);
    return h;
}

void write_nifti_bytes(const std::string &path, const Nifti1Header &h,
                       const std::vector<char> &payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char *>(&h), sizeof(h));
    const char pad[4] = {0, 0, 0, 0};
    out.write(pad, 4);  // extension flag: none
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw io_error("failed writing '" + path + "'");
}

void write_nifti_scalar(const ScalarVolume &volume, const std::string &path) {
    Nifti1Header h = blank_header(volume.geom);
    const std::size_t n = volume.values.size();
    std::vector<char> payload;
    if (volume.labels) {
        h.datatype = kDtInt16;
        h.bitpix = 16;
        payload.resize(n * 2);
        for (std::size_t p = 0; p < n; ++p) {
            const double v = volume.values[p];
            if (v != std::floor(v) || v < std::numeric_limits<std::int16_t>::min() ||
                v > std::numeric_limits<std::int16_t>::max())
                throw io_error("write_volume: label value " + std::to_string(v) +
                               " not representable as int16");
            const std::int16_t s = static_cast<std::int16_t>(v);
            std::memcpy(payload.data() + p * 2, &s, 2);
        }
    } else {
        h.datatype = kDtFloat32;
        h.bitpix = 32;
        payload.resize(n * 4);
        for (std::size_t p = 0; p < n; ++p) {
            const float f = static_cast<float>(volume.values[p]);
            std::memcpy(payload.data() + p * 4, &f, 4);
        }
    }
    write_nifti_bytes(path, h, payload);
}

void write_nifti_field(const VectorField &field, VolumeKind kind, const std::string &path) {
    Nifti1Header h = blank_header(field.geom);
    h.dim[0] = 5;
    h.dim[4] = 1;
    h.dim[5] = 3;
    h.intent_code = kIntentVector;
    std::memcpy(h.intent_name, kind == VolumeKind::svf ? "svf" : "disp",
                kind == VolumeKind::svf ? 4 : 5);
    h.datatype = kDtFloat32;
    h.bitpix = 32;
    const std::size_t n = field.vectors.size();
    std::vector<char> payload(n * 3 * 4);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < n; ++p) {
            const float f = static_cast<float>(field.vectors[p][c]);
            std::memcpy(payload.data() + (c * n + p) * 4, &f, 4);
        }
    write_nifti_bytes(path, h, payload);
}

// Native format: raw little-endian float32 planes at <path>, JSON sidecar
// at <path>.json with dims/spacing/origin/kind.
nlohmann::json sidecar_json(const GridGeometry &geom, VolumeKind kind) {
    nlohmann::json j;
    j["dims"] = geom.dims;
    j["spacing"] = geom.spacing;
    j["origin"] = geom.origin;
    j["kind"] = volume_kind_name(kind);
    return j;
}

void write_native(const std::string &path, const GridGeometry &geom, VolumeKind kind,
                  const std::vector<float> &payload) {
    write_file_bytes(path, payload.data(), payload.size() * 4);
    const std::string sidecar = sidecar_json(geom, kind).dump(2) + "\n";
    write_file_bytes(path + ".json", sidecar.data(), sidecar.size());
}

AnyVolume read_native(const std::string &path) {
    std::ifstream sc(path + ".json");
    if (!sc) throw io_error("native volume '" + path + "': missing sidecar '" + path + ".json'");
    nlohmann::json j;
    try {
        sc >> j;
    } catch (const nlohmann::json::exception &e) {
        throw io_error("native volume '" + path + "': bad sidecar JSON: " + e.what());
    }
    AnyVolume out;
    GridGeometry geom;
    try {
        for (int a = 0; a < 3; ++a) {
            geom.dims[a] = j.at("dims").at(a).get<int>();
            geom.spacing[a] = j.at("spacing").at(a).get<double>();
            geom.origin[a] = j.at("origin").at(a).get<double>();
        }
        out.kind = volume_kind_from_name(j.at("kind").get<std::string>());
    } catch (const nlohmann::json::exception &e) {
        throw io_error("native volume '" + path + "': sidecar missing fields: " + e.what());
    }
    geom.validate();

    const std::vector<char> bytes = read_file_bytes(path);
    const std::size_t n = geom.voxel_count();
    const std::size_t ncomp = out.is_field() ? 3 : 1;
    if (bytes.size() != n * ncomp * 4)
        throw io_error("native volume '" + path + "': payload is " + std::to_string(bytes.size()) +
                       " bytes, sidecar dims promise " + std::to_string(n * ncomp * 4));
    if (out.is_field()) {
        out.field = VectorField(geom);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t p = 0; p < n; ++p) {
                float f;
                std::memcpy(&f, bytes.data() + (c * n + p) * 4, 4);
                out.field.vectors[p][c] = f;
            }
    } else {
        out.scalar = ScalarVolume(geom, out.kind == VolumeKind::labels);
        for (std::size_t p = 0; p < n; ++p) {
            float f;
            std::memcpy(&f, bytes.data() + p * 4, 4);
            out.scalar.values[p] = f;
        }
    }
    return out;
}

}  // namespace

AnyVolume read_volume(const std::string &path) {
    return has_nii_extension(path) ? read_nifti(path) : read_native(path);
}

ScalarVolume read_scalar(const std::string &path) {
    AnyVolume v = read_volume(path);
    if (v.is_field())
        throw io_error("'" + path + "' holds a vector field where a scalar volume was expected");
    return std::move(v.scalar);
}

VectorField read_field(const std::string &path) {
    AnyVolume v = read_volume(path);
    if (!v.is_field())
        throw io_error("'" + path + "' holds a scalar volume where a vector field was expected");
    return std::move(v.field);
}

void write_volume(const ScalarVolume &volume, const std::string &path) {
    if (has_nii_extension(path)) {
        write_nifti_scalar(volume, path);
        return;
    }
    const std::size_t n = volume.values.size();
    std::vector<float> payload(n);
    if (volume.labels)
        for (std::size_t p = 0; p < n; ++p) {
            const double v = volume.values[p];
            if (v != std::floor(v))
                throw io_error("write_volume: non-integral label value " + std::to_string(v));
            payload[p] = static_cast<float>(v);
        }
    else
        for (std::size_t p = 0; p < n; ++p) payload[p] = static_cast<float>(volume.values[p]);
    write_native(path, volume.geom, volume.labels ? VolumeKind::labels : VolumeKind::intensity,
                 payload);
}

void write_field(const VectorField &field, VolumeKind kind, const std::string &path) {
    if (kind != VolumeKind::svf && kind != VolumeKind::displacement)
        throw io_error("write_field: kind must be svf or displacement");
    if (has_nii_extension(path)) {
        write_nifti_field(field, kind, path);
        return;
    }
    const std::size_t n = field.vectors.size();
    std::vector<float> payload(n * 3);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < n; ++p)
            payload[c * n + p] = static_cast<float>(field.vectors[p][c]);
    write_native(path, field.geom, kind, payload);
}

}  // namespace svfsyn
