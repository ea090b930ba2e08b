#include "svfsyn/registration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace svfsyn {

void RegistrationConfig::validate() const {
    if (levels.empty() || levels.back() != 1)
        throw io_error("RegistrationConfig: levels must end at 1");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 1) throw io_error("RegistrationConfig: level factors must be >= 1");
        if (i > 0) {
            if (levels[i] >= levels[i - 1])
                throw io_error("RegistrationConfig: levels must be strictly decreasing");
            if (levels[i - 1] % levels[i] != 0)
                throw io_error("RegistrationConfig: consecutive levels must divide evenly");
        }
    }
    if (iterations_per_level < 1)
        throw io_error("RegistrationConfig: iterations_per_level must be >= 1");
    if (fluid_sigma < 0.0 || diffusion_sigma < 0.0)
        throw io_error("RegistrationConfig: sigmas must be >= 0");
    if (!(step_scale > 0.0) || step_scale > 1.0)
        throw io_error("RegistrationConfig: step_scale must be in (0, 1]");
    if (lncc_window < 1 || lncc_window % 2 == 0)
        throw io_error("RegistrationConfig: lncc_window must be odd positive");
    if (bch_order < 1 || bch_order > 2) throw io_error("RegistrationConfig: bch_order must be 1 or 2");
    exp_cfg.validate();
}

namespace {

// Box widths whose 3-fold iteration matches the Gaussian variance (Kovesi).
std::array<int, 3> boxes_for_gauss(double sigma) {
    const int n = 3;
    const double ideal = std::sqrt(12.0 * sigma * sigma / n + 1.0);
    int wl = static_cast<int>(std::floor(ideal));
    if (wl % 2 == 0) --wl;
    if (wl < 1) wl = 1;
    const int wu = wl + 2;
    const double m_ideal =
        (12.0 * sigma * sigma - n * wl * wl - 4.0 * n * wl - 3.0 * n) / (-4.0 * wl - 4.0);
    int m = static_cast<int>(std::lround(m_ideal));
    m = std::clamp(m, 0, n);
    std::array<int, 3> widths{};
    for (int i = 0; i < n; ++i) widths[i] = (i < m) ? wl : wu;
    return widths;
}

// One separable box pass with replicate boundary, in place.
void box_blur_axis(std::vector<double> &data, const GridGeometry &g, int axis, int half) {
    const auto &d = g.dims;
    const int n = d[axis];
    const double inv_w = 1.0 / (2 * half + 1);
    std::vector<double> line(n);
    int axes[2];
    int oa = 0;
    for (int a = 0; a < 3; ++a)
        if (a != axis) axes[oa++] = a;
    int idx[3];
    for (int o0 = 0; o0 < d[axes[0]]; ++o0)
        for (int o1 = 0; o1 < d[axes[1]]; ++o1) {
            idx[axes[0]] = o0;
            idx[axes[1]] = o1;
            for (int i = 0; i < n; ++i) {
                idx[axis] = i;
                line[i] = data[g.index(idx[0], idx[1], idx[2])];
            }
            double acc = 0.0;
            for (int t = -half; t <= half; ++t) acc += line[std::clamp(t, 0, n - 1)];
            for (int i = 0; i < n; ++i) {
                idx[axis] = i;
                data[g.index(idx[0], idx[1], idx[2])] = acc * inv_w;
                acc += line[std::clamp(i + half + 1, 0, n - 1)] - line[std::clamp(i - half, 0, n - 1)];
            }
        }
}

void box_blur_pass(std::vector<double> &data, const GridGeometry &g, int width) {
    const int half = width / 2;
    if (half == 0) return;
    for (int axis = 0; axis < 3; ++axis) box_blur_axis(data, g, axis, half);
}

}  // namespace

ScalarVolume gaussian_smooth(const ScalarVolume &v, double sigma) {
    if (sigma <= 0.0) return v;
    ScalarVolume out = v;
    for (int w : boxes_for_gauss(sigma)) box_blur_pass(out.values, out.geom, w);
    return out;
}

VectorField gaussian_smooth(const VectorField &f, double sigma) {
    if (sigma <= 0.0) return f;
    VectorField out = f;
    const std::size_t n = f.vectors.size();
    std::vector<double> comp(n);
    for (int a = 0; a < 3; ++a) {
        for (std::size_t p = 0; p < n; ++p) comp[p] = f.vectors[p][a];
        for (int w : boxes_for_gauss(sigma)) box_blur_pass(comp, f.geom, w);
        for (std::size_t p = 0; p < n; ++p) out.vectors[p][a] = comp[p];
    }
    return out;
}

namespace {

inline Vec3 gradient_at(const ScalarVolume &v, int i, int j, int k) {
    Vec3 g;
    const auto &d = v.geom.dims;
    const int idx[3] = {i, j, k};
    for (int axis = 0; axis < 3; ++axis) {
        int lo[3] = {i, j, k}, hi[3] = {i, j, k};
        double denom;
        if (idx[axis] == 0) {
            hi[axis] = 1;
            denom = 1.0;
        } else if (idx[axis] == d[axis] - 1) {
            lo[axis] = d[axis] - 2;
            denom = 1.0;
        } else {
            lo[axis] = idx[axis] - 1;
            hi[axis] = idx[axis] + 1;
            denom = 2.0;
        }
        g[axis] = (v.at(hi[0], hi[1], hi[2]) - v.at(lo[0], lo[1], lo[2])) / denom;
    }
    return g;
}

VectorField ssd_force(const ScalarVolume &fixed, const ScalarVolume &warped) {
    VectorField force(fixed.geom);
    const auto &d = fixed.geom.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                const double diff = fixed.at(i, j, k) - warped.at(i, j, k);
                const Vec3 g = gradient_at(warped, i, j, k);
                const double denom = g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + diff * diff;
                if (denom > 1e-12) {
                    const double s = diff / denom;
                    force.at(i, j, k) = {s * g[0], s * g[1], s * g[2]};
                }
            }
    return force;
}

struct LocalStats {
    ScalarVolume mean_a, mean_b, var_a, var_b, cov;
};

LocalStats local_correlation_stats(const ScalarVolume &a, const ScalarVolume &b, int window) {
    const ScalarVolume cnt = window_count(a.geom, window);
    ScalarVolume aa = a, bb = b, ab = a;
    for (std::size_t p = 0; p < a.values.size(); ++p) {
        aa.values[p] = a.values[p] * a.values[p];
        bb.values[p] = b.values[p] * b.values[p];
        ab.values[p] = a.values[p] * b.values[p];
    }
    const ScalarVolume sa = window_sum(a, window);
    const ScalarVolume sb = window_sum(b, window);
    const ScalarVolume saa = window_sum(aa, window);
    const ScalarVolume sbb = window_sum(bb, window);
    const ScalarVolume sab = window_sum(ab, window);
    LocalStats st{ScalarVolume(a.geom), ScalarVolume(a.geom), ScalarVolume(a.geom),
                  ScalarVolume(a.geom), ScalarVolume(a.geom)};
    for (std::size_t p = 0; p < a.values.size(); ++p) {
        const double n = cnt.values[p];
        const double ma = sa.values[p] / n;
        const double mb = sb.values[p] / n;
        st.mean_a.values[p] = ma;
        st.mean_b.values[p] = mb;
        st.var_a.values[p] = saa.values[p] / n - ma * ma;
        st.var_b.values[p] = sbb.values[p] / n - mb * mb;
        st.cov.values[p] = sab.values[p] / n - ma * mb;
    }
    return st;
}

constexpr double kVarianceGuard = 1e-5;

VectorField lncc_force(const ScalarVolume &fixed, const ScalarVolume &warped, int window) {
    const LocalStats st = local_correlation_stats(warped, fixed, window);
    VectorField force(fixed.geom);
    const auto &d = fixed.geom.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                const std::size_t p = fixed.geom.index(i, j, k);
                const double vb = st.var_a.values[p];  // warped
                const double vc = st.var_b.values[p];  // fixed
                if (vb <= kVarianceGuard || vc <= kVarianceGuard) continue;
                const double cov = st.cov.values[p];
                const double ic = warped.values[p] - st.mean_a.values[p];
                const double jc = fixed.values[p] - st.mean_b.values[p];
                // d(cc^2)/d(warped) at the window center, per Avants-style CC demons
                const double s = 2.0 * cov / (vb * vc) * (jc - cov / vb * ic);
                const Vec3 g = gradient_at(warped, i, j, k);
                force.at(i, j, k) = {s * g[0], s * g[1], s * g[2]};
            }
    return force;
}

void clamp_step(VectorField &f, double max_norm) {
    for (Vec3 &v : f.vectors) {
        const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if (n > max_norm) {
            const double s = max_norm / n;
            v[0] *= s;
            v[1] *= s;
            v[2] *= s;
        }
    }
}

double mean_squared_diff(const ScalarVolume &a, const ScalarVolume &b) {
    double acc = 0.0;
    for (std::size_t p = 0; p < a.values.size(); ++p) {
        const double d = a.values[p] - b.values[p];
        acc += d * d;
    }
    return acc / static_cast<double>(a.values.size());
}

}  // namespace

double lncc(const ScalarVolume &a, const ScalarVolume &b, int window) {
    require_same_geometry(a.geom, b.geom, "lncc");
    if (window < 1 || window % 2 == 0) throw io_error("lncc: window must be odd positive");
    const LocalStats st = local_correlation_stats(a, b, window);
    double acc = 0.0;
    for (std::size_t p = 0; p < a.values.size(); ++p) {
        const double va = st.var_a.values[p];
        const double vb = st.var_b.values[p];
        if (va <= kVarianceGuard || vb <= kVarianceGuard) continue;
        const double cov = st.cov.values[p];
        acc += cov * cov / (va * vb);
    }
    return acc / static_cast<double>(a.values.size());
}

VectorField register_svf(const ScalarVolume &moving, const ScalarVolume &fixed,
                         const RegistrationConfig &cfg, RegistrationTrace *trace) {
    require_same_geometry(moving.geom, fixed.geom, "register_svf");
    cfg.validate();
    for (const ScalarVolume *img : {&moving, &fixed}) {
        const auto [mn, mx] = std::minmax_element(img->values.begin(), img->values.end());
        if (*mn < 0.0 || *mx > 1.0) {
            std::fprintf(stderr, "register_svf: intensities outside [0,1] (%g..%g), proceeding\n",
                         *mn, *mx);
            break;
        }
    }

    VectorField v;
    bool have_v = false;
    if (trace) trace->mse_per_level.clear();

    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        const int factor = cfg.levels[li];
        const ScalarVolume m = downsample_volume(moving, factor);
        const ScalarVolume f = downsample_volume(fixed, factor);
        if (!have_v) {
            v = VectorField(m.geom);
            have_v = true;
        } else {
            v = upsample_field(v, cfg.levels[li - 1] / factor);
            v.geom = m.geom;  // same dims; keep the level's spacing/origin metadata
        }
        if (trace) trace->mse_per_level.emplace_back();

        for (int it = 0; it < cfg.iterations_per_level; ++it) {
            const VectorField disp = exp(v, cfg.exp_cfg);
            const ScalarVolume warped = warp(m, disp);
            if (trace) trace->mse_per_level.back().push_back(mean_squared_diff(f, warped));
            VectorField update = (cfg.similarity == RegistrationConfig::Similarity::SSD)
                                     ? ssd_force(f, warped)
                                     : lncc_force(f, warped, cfg.lncc_window);
            clamp_step(update, cfg.step_scale);
            update = gaussian_smooth(update, cfg.fluid_sigma);
            v = bch(v, update, cfg.bch_order);
            v = gaussian_smooth(v, cfg.diffusion_sigma);
        }
    }

    if (trace) {
        const ScalarVolume warped = warp(moving, exp(v, cfg.exp_cfg));
        double acc = 0.0;
        for (std::size_t p = 0; p < fixed.values.size(); ++p)
            acc += std::abs(fixed.values[p] - warped.values[p]);
        trace->final_mean_abs_residual = acc / static_cast<double>(fixed.values.size());
    }
    return v;
}

}  // namespace svfsyn
