#include "svfsyn/grid.hpp"

#include <algorithm>
#include <cmath>

namespace svfsyn {

void GridGeometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 2) throw io_error("GridGeometry: dims must be >= 2 on every axis");
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
            throw io_error("GridGeometry: spacing must be positive and finite");
        if (!std::isfinite(origin[a])) throw io_error("GridGeometry: origin must be finite");
    }
}

void ScalarVolume::validate() const {
    geom.validate();
    if (values.size() != geom.voxel_count())
        throw io_error("ScalarVolume: value count does not match dims");
    for (double v : values) {
        if (!std::isfinite(v)) throw numeric_error("ScalarVolume: non-finite value");
        if (labels && (v < 0.0 || v != std::floor(v)))
            throw io_error("ScalarVolume: label variant requires non-negative integers");
    }
}

void VectorField::validate() const {
    geom.validate();
    if (vectors.size() != geom.voxel_count())
        throw io_error("VectorField: vector count does not match dims");
    if (!all_finite(*this)) throw numeric_error("VectorField: non-finite component");
}

void require_same_geometry(const GridGeometry &a, const GridGeometry &b, const char *what) {
    if (!(a == b)) throw io_error(std::string(what) + ": geometry mismatch");
}

namespace {

struct TrilinearWeights {
    int i0[3];
    int i1[3];
    double f[3];  // fraction toward i1 per axis
};

inline TrilinearWeights clamp_and_split(const GridGeometry &g, const Vec3 &p) {
    TrilinearWeights w;
    for (int a = 0; a < 3; ++a) {
        double c = std::clamp(p[a], 0.0, static_cast<double>(g.dims[a] - 1));
        double fl = std::floor(c);
        int i0 = static_cast<int>(fl);
        if (i0 > g.dims[a] - 2) i0 = g.dims[a] - 2;  // keep i1 in range at the top face
        w.i0[a] = i0;
        w.i1[a] = i0 + 1;
        w.f[a] = c - i0;
    }
    return w;
}

}  // namespace

Vec3 sample_vector(const VectorField &field, const Vec3 &p) {
    const auto w = clamp_and_split(field.geom, p);
    Vec3 out{0.0, 0.0, 0.0};
    for (int dz = 0; dz < 2; ++dz) {
        const double wz = dz ? w.f[2] : 1.0 - w.f[2];
        const int k = dz ? w.i1[2] : w.i0[2];
        for (int dy = 0; dy < 2; ++dy) {
            const double wyz = (dy ? w.f[1] : 1.0 - w.f[1]) * wz;
            const int j = dy ? w.i1[1] : w.i0[1];
            for (int dx = 0; dx < 2; ++dx) {
                const double wt = (dx ? w.f[0] : 1.0 - w.f[0]) * wyz;
                const Vec3 &v = field.at(dx ? w.i1[0] : w.i0[0], j, k);
                out[0] += wt * v[0];
                out[1] += wt * v[1];
                out[2] += wt * v[2];
            }
        }
    }
    return out;
}

double sample_scalar(const ScalarVolume &image, const Vec3 &p) {
    const auto w = clamp_and_split(image.geom, p);
    double out = 0.0;
    for (int dz = 0; dz < 2; ++dz) {
        const double wz = dz ? w.f[2] : 1.0 - w.f[2];
        const int k = dz ? w.i1[2] : w.i0[2];
        for (int dy = 0; dy < 2; ++dy) {
            const double wyz = (dy ? w.f[1] : 1.0 - w.f[1]) * wz;
            const int j = dy ? w.i1[1] : w.i0[1];
            for (int dx = 0; dx < 2; ++dx) {
                const double wt = (dx ? w.f[0] : 1.0 - w.f[0]) * wyz;
                out += wt * image.at(dx ? w.i1[0] : w.i0[0], j, k);
            }
        }
    }
    return out;
}

double sample_nearest(const ScalarVolume &image, const Vec3 &p) {
    int idx[3];
    for (int a = 0; a < 3; ++a) {
        double c = std::clamp(p[a], 0.0, static_cast<double>(image.geom.dims[a] - 1));
        idx[a] = static_cast<int>(std::lround(c));
    }
    return image.at(idx[0], idx[1], idx[2]);
}

ScalarVolume warp(const ScalarVolume &image, const VectorField &displacement) {
    require_same_geometry(image.geom, displacement.geom, "warp");
    ScalarVolume out(image.geom, image.labels);
    const auto &d = image.geom.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                const Vec3 &u = displacement.at(i, j, k);
                const Vec3 p{i + u[0], j + u[1], k + u[2]};
                out.at(i, j, k) = image.labels ? sample_nearest(image, p) : sample_scalar(image, p);
            }
    return out;
}

namespace {

// d/dx_axis of component comp at (i,j,k): central in the interior, one-sided on faces.
inline double partial(const VectorField &f, int comp, int axis, int i, int j, int k) {
    int idx[3] = {i, j, k};
    const int n = f.geom.dims[axis];
    int lo[3] = {i, j, k}, hi[3] = {i, j, k};
    double denom;
    if (idx[axis] == 0) {
        hi[axis] = 1;
        denom = 1.0;
    } else if (idx[axis] == n - 1) {
        lo[axis] = n - 2;
        denom = 1.0;
    } else {
        lo[axis] = idx[axis] - 1;
        hi[axis] = idx[axis] + 1;
        denom = 2.0;
    }
    return (f.at(hi[0], hi[1], hi[2])[comp] - f.at(lo[0], lo[1], lo[2])[comp]) / denom;
}

}  // namespace

std::array<std::array<double, 3>, 3> field_jacobian_at(const VectorField &f, int i, int j, int k) {
    std::array<std::array<double, 3>, 3> J{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) J[r][c] = partial(f, r, c, i, j, k);
    return J;
}

ScalarVolume jacobian_determinant(const VectorField &displacement) {
    const auto &g = displacement.geom;
    for (int a = 0; a < 3; ++a)
        if (g.dims[a] < 3) throw io_error("jacobian_determinant: dims must be >= 3");
    ScalarVolume out(g);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                auto J = field_jacobian_at(displacement, i, j, k);
                for (int a = 0; a < 3; ++a) J[a][a] += 1.0;  // phi = Id + u
                const double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                                   J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                                   J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
                out.at(i, j, k) = det;
            }
    return out;
}

double min_value(const ScalarVolume &v) {
    return *std::min_element(v.values.begin(), v.values.end());
}

namespace {

GridGeometry coarse_geometry(const GridGeometry &g, int factor) {
    GridGeometry c;
    for (int a = 0; a < 3; ++a) {
        c.dims[a] = g.dims[a] / factor;
        c.spacing[a] = g.spacing[a] * factor;
        c.origin[a] = g.origin[a] + g.spacing[a] * (factor - 1) / 2.0;
    }
    return c;
}

void check_divisible(const GridGeometry &g, int factor, const char *what) {
    if (factor < 1) throw io_error(std::string(what) + ": factor must be positive");
    for (int a = 0; a < 3; ++a)
        if (g.dims[a] % factor != 0)
            throw io_error(std::string(what) + ": factor does not divide dims");
}

}  // namespace

VectorField downsample_field(const VectorField &field, int factor) {
    check_divisible(field.geom, factor, "downsample_field");
    if (factor == 1) return field;
    VectorField out(coarse_geometry(field.geom, factor));
    const double inv_block = 1.0 / (static_cast<double>(factor) * factor * factor);
    const double inv_f = 1.0 / factor;  // voxel units of the coarse grid
    const auto &cd = out.geom.dims;
    for (int k = 0; k < cd[2]; ++k)
        for (int j = 0; j < cd[1]; ++j)
            for (int i = 0; i < cd[0]; ++i) {
                Vec3 acc{0, 0, 0};
                for (int dz = 0; dz < factor; ++dz)
                    for (int dy = 0; dy < factor; ++dy)
                        for (int dx = 0; dx < factor; ++dx) {
                            const Vec3 &v =
                                field.at(i * factor + dx, j * factor + dy, k * factor + dz);
                            acc[0] += v[0];
                            acc[1] += v[1];
                            acc[2] += v[2];
                        }
                out.at(i, j, k) = {acc[0] * inv_block * inv_f, acc[1] * inv_block * inv_f,
                                   acc[2] * inv_block * inv_f};
            }
    return out;
}

ScalarVolume downsample_volume(const ScalarVolume &image, int factor) {
    check_divisible(image.geom, factor, "downsample_volume");
    if (factor == 1) return image;
    ScalarVolume out(coarse_geometry(image.geom, factor), image.labels);
    const double inv_block = 1.0 / (static_cast<double>(factor) * factor * factor);
    const auto &cd = out.geom.dims;
    for (int k = 0; k < cd[2]; ++k)
        for (int j = 0; j < cd[1]; ++j)
            for (int i = 0; i < cd[0]; ++i) {
                double acc = 0.0;
                for (int dz = 0; dz < factor; ++dz)
                    for (int dy = 0; dy < factor; ++dy)
                        for (int dx = 0; dx < factor; ++dx)
                            acc += image.at(i * factor + dx, j * factor + dy, k * factor + dz);
                out.at(i, j, k) = acc * inv_block;
            }
    return out;
}

VectorField upsample_field(const VectorField &field, int factor) {
    if (factor < 1) throw io_error("upsample_field: factor must be positive");
    if (factor == 1) return field;
    GridGeometry fine;
    for (int a = 0; a < 3; ++a) {
        fine.dims[a] = field.geom.dims[a] * factor;
        fine.spacing[a] = field.geom.spacing[a] / factor;
        fine.origin[a] = field.geom.origin[a] - fine.spacing[a] * (factor - 1) / 2.0;
    }
    VectorField out(fine);
    const double scale = static_cast<double>(factor);
    const double half = (factor - 1) / 2.0;
    for (int k = 0; k < fine.dims[2]; ++k)
        for (int j = 0; j < fine.dims[1]; ++j)
            for (int i = 0; i < fine.dims[0]; ++i) {
                const Vec3 p{(i - half) / factor, (j - half) / factor, (k - half) / factor};
                Vec3 v = sample_vector(field, p);
                out.at(i, j, k) = {v[0] * scale, v[1] * scale, v[2] * scale};
            }
    return out;
}

bool all_finite(const VectorField &f) {
    for (const Vec3 &v : f.vectors)
        if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2])) return false;
    return true;
}

double max_vector_norm(const VectorField &f) {
    double m = 0.0;
    for (const Vec3 &v : f.vectors)
        m = std::max(m, std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
    return m;
}

double max_component_abs(const VectorField &f) {
    double m = 0.0;
    for (const Vec3 &v : f.vectors)
        m = std::max({m, std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
    return m;
}

namespace {

// 1D clipped box sum along one axis, via prefix sums per line.
void box_sum_axis(ScalarVolume &v, int axis, int half) {
    const auto &d = v.geom.dims;
    const int n = d[axis];
    std::vector<double> prefix(static_cast<std::size_t>(n) + 1);
    std::vector<double> line(n);
    int outer[2];
    int oa = 0;
    int axes[2];
    for (int a = 0; a < 3; ++a)
        if (a != axis) axes[oa++] = a;
    int idx[3];
    for (outer[0] = 0; outer[0] < d[axes[0]]; ++outer[0])
        for (outer[1] = 0; outer[1] < d[axes[1]]; ++outer[1]) {
            idx[axes[0]] = outer[0];
            idx[axes[1]] = outer[1];
            for (int i = 0; i < n; ++i) {
                idx[axis] = i;
                line[i] = v.at(idx[0], idx[1], idx[2]);
            }
            prefix[0] = 0.0;
            for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + line[i];
            for (int i = 0; i < n; ++i) {
                const int lo = std::max(0, i - half);
                const int hi = std::min(n - 1, i + half);
                idx[axis] = i;
                v.at(idx[0], idx[1], idx[2]) = prefix[hi + 1] - prefix[lo];
            }
        }
}

}  // namespace

ScalarVolume window_sum(const ScalarVolume &v, int window) {
    if (window < 1 || window % 2 == 0) throw io_error("window_sum: window must be odd positive");
    ScalarVolume out = v;
    out.labels = false;
    const int half = window / 2;
    for (int axis = 0; axis < 3; ++axis) box_sum_axis(out, axis, half);
    return out;
}

ScalarVolume window_count(const GridGeometry &geom, int window) {
    ScalarVolume ones(geom);
    std::fill(ones.values.begin(), ones.values.end(), 1.0);
    return window_sum(ones, window);
}

}  // namespace svfsyn
