#ifndef SVFSYN_GRID_HPP
#define SVFSYN_GRID_HPP

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace svfsyn {

/// Thrown when grid-borne inputs disagree on geometry or a file/spec is malformed.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Thrown when a computation leaves the numerically stable range
/// (non-finite intermediates, folded deformations under --strict).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Regular 3D grid: voxel counts, physical spacing (mm), and origin (mm).
/// Grid objects are composable only when geometries compare equal component-wise.
struct GridGeometry {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};

    bool operator==(const GridGeometry &) const = default;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }

    // x varies fastest, matching the on-disk layout.
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
    }

    double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

    void validate() const;
};

inline GridGeometry make_geometry(int nx, int ny, int nz, double sx = 1.0, double sy = 1.0,
                                  double sz = 1.0) {
    GridGeometry g;
    g.dims = {nx, ny, nz};
    g.spacing = {sx, sy, sz};
    g.validate();
    return g;
}

/// 3D scalar image. Intensities live in [0,1] by convention; the label
/// variant (labels == true) stores non-negative integer ids in the same
/// buffer and is warped nearest-neighbor.
struct ScalarVolume {
    GridGeometry geom;
    std::vector<double> values;
    bool labels = false;

    ScalarVolume() = default;
    ScalarVolume(const GridGeometry &g, bool label_variant = false)
        : geom(g), values(g.voxel_count(), 0.0), labels(label_variant) {}

    double &at(int i, int j, int k) { return values[geom.index(i, j, k)]; }
    double at(int i, int j, int k) const { return values[geom.index(i, j, k)]; }

    void validate() const;
};

using Vec3 = std::array<double, 3>;

/// 3D field of 3-vectors in voxel units per axis. Doubles as an SVF
/// (Lie algebra element) and as a displacement u with phi = Id + u;
/// the role is tracked by the caller.
struct VectorField {
    GridGeometry geom;
    std::vector<Vec3> vectors;

    VectorField() = default;
    explicit VectorField(const GridGeometry &g) : geom(g), vectors(g.voxel_count(), Vec3{0, 0, 0}) {}

    Vec3 &at(int i, int j, int k) { return vectors[geom.index(i, j, k)]; }
    const Vec3 &at(int i, int j, int k) const { return vectors[geom.index(i, j, k)]; }

    void validate() const;
};

void require_same_geometry(const GridGeometry &a, const GridGeometry &b, const char *what);

/// Trilinear sample at a continuous voxel coordinate; out-of-bounds
/// coordinates clamp to the boundary face first. Total by construction.
Vec3 sample_vector(const VectorField &field, const Vec3 &p);
double sample_scalar(const ScalarVolume &image, const Vec3 &p);
double sample_nearest(const ScalarVolume &image, const Vec3 &p);

/// Pull-back warp: output(x) = image(x + displacement(x)). Label volumes
/// resample nearest-neighbor so ids stay integral.
ScalarVolume warp(const ScalarVolume &image, const VectorField &displacement);

/// Per-voxel det of d(phi)/dx with phi = Id + u. Central differences in the
/// interior, one-sided on faces.
ScalarVolume jacobian_determinant(const VectorField &displacement);

double min_value(const ScalarVolume &v);

/// 3x3 Jacobian of the field at voxel (i,j,k), row r = d(vec_r)/d(x_c),
/// same stencil as jacobian_determinant (without the identity part).
std::array<std::array<double, 3>, 3> field_jacobian_at(const VectorField &f, int i, int j, int k);

/// Block-average downsample; factor must divide every dim.
VectorField downsample_field(const VectorField &field, int factor);
ScalarVolume downsample_volume(const ScalarVolume &image, int factor);

/// Trilinear upsample; vector magnitudes rescale by the per-axis dim ratio
/// so vectors stay in voxel units of the target grid.
VectorField upsample_field(const VectorField &field, int factor);

bool all_finite(const VectorField &f);
double max_vector_norm(const VectorField &f);
double max_component_abs(const VectorField &f);

/// Sum of values over the window^3 neighborhood of each voxel, window odd;
/// neighborhoods are clipped at the volume boundary (no padding). Separable
/// running sums, O(N) per axis.
ScalarVolume window_sum(const ScalarVolume &v, int window);

/// Number of in-bounds voxels in each clipped window (same clipping as
/// window_sum).
ScalarVolume window_count(const GridGeometry &geom, int window);

}  // namespace svfsyn

#endif
