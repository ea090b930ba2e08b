#include "svfsyn/lie.hpp"

#include <cmath>

namespace svfsyn {

VectorField scaled(const VectorField &f, double s) {
    VectorField out = f;
    for (Vec3 &v : out.vectors) {
        v[0] *= s;
        v[1] *= s;
        v[2] *= s;
    }
    return out;
}

VectorField compose_displacements(const VectorField &u1, const VectorField &u2) {
    require_same_geometry(u1.geom, u2.geom, "compose_displacements");
    VectorField out(u1.geom);
    const auto &d = u1.geom.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                const Vec3 &b = u2.at(i, j, k);
                const Vec3 a = sample_vector(u1, {i + b[0], j + b[1], k + b[2]});
                out.at(i, j, k) = {b[0] + a[0], b[1] + a[1], b[2] + a[2]};
            }
    return out;
}

VectorField exp(const VectorField &v, const ExpConfig &cfg) {
    cfg.validate();
    if (!all_finite(v)) throw numeric_error("exp: non-finite input field");
    const double vmax = max_vector_norm(v);
    int n = cfg.min_scaling_steps;
    if (vmax > 0.0) {
        const double needed = std::ceil(std::log2(vmax / cfg.max_step_displacement));
        if (needed > 0.0) n = std::max(n, static_cast<int>(needed));
    }
    VectorField u = scaled(v, std::ldexp(1.0, -n));
    for (int s = 0; s < n; ++s) u = compose_displacements(u, u);
    return u;
}

VectorField flow_rk4(const VectorField &v, double t, int steps) {
    if (steps < 1) throw io_error("flow_rk4: steps must be >= 1");
    VectorField out(v.geom);
    const double h = t / steps;
    const auto &d = v.geom.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                Vec3 x{static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)};
                for (int s = 0; s < steps; ++s) {
                    const Vec3 k1 = sample_vector(v, x);
                    const Vec3 k2 = sample_vector(
                        v, {x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1], x[2] + 0.5 * h * k1[2]});
                    const Vec3 k3 = sample_vector(
                        v, {x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1], x[2] + 0.5 * h * k2[2]});
                    const Vec3 k4 =
                        sample_vector(v, {x[0] + h * k3[0], x[1] + h * k3[1], x[2] + h * k3[2]});
                    for (int a = 0; a < 3; ++a)
                        x[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
                }
                out.at(i, j, k) = {x[0] - i, x[1] - j, x[2] - k};
            }
    return out;
}

VectorField bracket(const VectorField &v, const VectorField &u) {
    require_same_geometry(v.geom, u.geom, "bracket");
    VectorField out(v.geom);
    const auto &d = v.geom.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                const auto Jv = field_jacobian_at(v, i, j, k);
                const auto Ju = field_jacobian_at(u, i, j, k);
                const Vec3 &vv = v.at(i, j, k);
                const Vec3 &uu = u.at(i, j, k);
                Vec3 r;
                for (int a = 0; a < 3; ++a)
                    r[a] = Jv[a][0] * uu[0] + Jv[a][1] * uu[1] + Jv[a][2] * uu[2] -
                           (Ju[a][0] * vv[0] + Ju[a][1] * vv[1] + Ju[a][2] * vv[2]);
                out.at(i, j, k) = r;
            }
    return out;
}

VectorField bch(const VectorField &v, const VectorField &u, int order) {
    require_same_geometry(v.geom, u.geom, "bch");
    if (order < 1 || order > 2) throw io_error("bch: order must be 1 or 2");
    const VectorField vu = bracket(v, u);
    VectorField out(v.geom);
    const std::size_t n = v.vectors.size();
    for (std::size_t p = 0; p < n; ++p)
        for (int a = 0; a < 3; ++a)
            out.vectors[p][a] = v.vectors[p][a] + u.vectors[p][a] + 0.5 * vu.vectors[p][a];
    if (order == 2) {
        const VectorField vvu = bracket(v, vu);
        const VectorField uuv = bracket(u, scaled(vu, -1.0));  // [u,[u,v]] = [u,-[v,u]]
        for (std::size_t p = 0; p < n; ++p)
            for (int a = 0; a < 3; ++a)
                out.vectors[p][a] += (vvu.vectors[p][a] + uuv.vectors[p][a]) / 12.0;
    }
    return out;
}

VectorField invert_displacement(const VectorField &u, int iterations) {
    if (iterations < 1) throw io_error("invert_displacement: iterations must be >= 1");
    VectorField w(u.geom);
    const auto &d = u.geom.dims;
    for (int it = 0; it < iterations; ++it) {
        VectorField next(u.geom);
        for (int k = 0; k < d[2]; ++k)
            for (int j = 0; j < d[1]; ++j)
                for (int i = 0; i < d[0]; ++i) {
                    const Vec3 &wv = w.at(i, j, k);
                    const Vec3 s = sample_vector(u, {i + wv[0], j + wv[1], k + wv[2]});
                    next.at(i, j, k) = {-s[0], -s[1], -s[2]};
                }
        w = std::move(next);
    }
    return w;
}

}  // namespace svfsyn
