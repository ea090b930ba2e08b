// Shared test utilities: small-matrix oracles and field builders. These stay
// independent of the library's integration paths so they can stand as
// references against them.
#ifndef SVFSYN_TESTS_HELPERS_HPP
#define SVFSYN_TESTS_HELPERS_HPP

#include <array>
#include <cmath>

#include "svfsyn/grid.hpp"
#include "svfsyn/phantom.hpp"

namespace svfsyn::testing {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 mat_mul(const Mat3 &a, const Mat3 &b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

inline Vec3 mat_apply(const Mat3 &a, const Vec3 &x) {
    Vec3 y{};
    for (int i = 0; i < 3; ++i) y[i] = a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2];
    return y;
}

inline Mat3 mat_identity() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

inline Mat3 commutator(const Mat3 &a, const Mat3 &b) {
    const Mat3 ab = mat_mul(a, b);
    const Mat3 ba = mat_mul(b, a);
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c[i][j] = ab[i][j] - ba[i][j];
    return c;
}

// Matrix exponential by scaling-and-squaring over a Taylor series; plenty
// for the small generators used in tests.
inline Mat3 expm(const Mat3 &m) {
    double norm = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) norm = std::max(norm, std::abs(m[i][j]));
    int squarings = 0;
    double scale = 1.0;
    while (norm * scale > 0.25) {
        scale *= 0.5;
        ++squarings;
    }
    Mat3 a{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[i][j] = m[i][j] * scale;
    Mat3 result = mat_identity();
    Mat3 term = mat_identity();
    for (int n = 1; n <= 16; ++n) {
        term = mat_mul(term, a);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                term[i][j] /= n;
                result[i][j] += term[i][j];
            }
    }
    for (int s = 0; s < squarings; ++s) result = mat_mul(result, result);
    return result;
}

// v(x) = A (x - center)
inline VectorField linear_field(const GridGeometry &geom, const Mat3 &a, const Vec3 &center) {
    VectorField f(geom);
    for (int k = 0; k < geom.dims[2]; ++k)
        for (int j = 0; j < geom.dims[1]; ++j)
            for (int i = 0; i < geom.dims[0]; ++i)
                f.at(i, j, k) = mat_apply(a, {i - center[0], j - center[1], k - center[2]});
    return f;
}

inline Vec3 grid_center(const GridGeometry &g) {
    return {(g.dims[0] - 1) / 2.0, (g.dims[1] - 1) / 2.0, (g.dims[2] - 1) / 2.0};
}

// Displacement of the affine map x -> expm(A)(x - c) + c.
inline VectorField linear_flow_truth(const GridGeometry &geom, const Mat3 &a, const Vec3 &center) {
    const Mat3 e = expm(a);
    VectorField f(geom);
    for (int k = 0; k < geom.dims[2]; ++k)
        for (int j = 0; j < geom.dims[1]; ++j)
            for (int i = 0; i < geom.dims[0]; ++i) {
                const Vec3 y =
                    mat_apply(e, {i - center[0], j - center[1], k - center[2]});
                f.at(i, j, k) = {y[0] + center[0] - i, y[1] + center[1] - j, y[2] + center[2] - k};
            }
    return f;
}

inline double max_interior_diff(const VectorField &a, const VectorField &b, int margin) {
    double m = 0.0;
    const auto &d = a.geom.dims;
    for (int k = margin; k < d[2] - margin; ++k)
        for (int j = margin; j < d[1] - margin; ++j)
            for (int i = margin; i < d[0] - margin; ++i) {
                const Vec3 &va = a.at(i, j, k);
                const Vec3 &vb = b.at(i, j, k);
                const double dx = va[0] - vb[0], dy = va[1] - vb[1], dz = va[2] - vb[2];
                m = std::max(m, std::sqrt(dx * dx + dy * dy + dz * dz));
            }
    return m;
}

inline double max_interior_norm(const VectorField &a, int margin) {
    double m = 0.0;
    const auto &d = a.geom.dims;
    for (int k = margin; k < d[2] - margin; ++k)
        for (int j = margin; j < d[1] - margin; ++j)
            for (int i = margin; i < d[0] - margin; ++i) {
                const Vec3 &v = a.at(i, j, k);
                m = std::max(m, std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
            }
    return m;
}

inline ScalarVolume random_volume(const GridGeometry &geom, std::uint64_t seed, double lo = 0.0,
                                  double hi = 1.0) {
    SplitMix64 rng(seed);
    ScalarVolume v(geom);
    for (double &x : v.values) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace svfsyn::testing

#endif
