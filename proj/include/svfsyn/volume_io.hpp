#ifndef SVFSYN_VOLUME_IO_HPP
#define SVFSYN_VOLUME_IO_HPP

#include <string>

#include "svfsyn/grid.hpp"

namespace svfsyn {

enum class VolumeKind { intensity, labels, svf, displacement };

const char *volume_kind_name(VolumeKind k);
VolumeKind volume_kind_from_name(const std::string &name);

/// A loaded file: either a scalar volume or a vector field, tagged with
/// the declared kind.
struct AnyVolume {
    VolumeKind kind = VolumeKind::intensity;
    ScalarVolume scalar;
    VectorField field;

    bool is_field() const { return kind == VolumeKind::svf || kind == VolumeKind::displacement; }
};

/// Reads NIfTI-1 (.nii, little-endian, float32/int16/uint8, vector fields
/// as dim[5]=3 with the vector intent code) or the native raw+JSON format
/// (any other extension; payload file plus a <path>.json sidecar). See
/// FORMATS.md for the byte-level layout.
AnyVolume read_volume(const std::string &path);

ScalarVolume read_scalar(const std::string &path);
VectorField read_field(const std::string &path);

/// Inverse of read_volume; format chosen by extension. Writing is
/// deterministic: equal inputs produce identical bytes.
void write_volume(const ScalarVolume &volume, const std::string &path);
void write_field(const VectorField &field, VolumeKind kind, const std::string &path);

}  // namespace svfsyn

#endif
