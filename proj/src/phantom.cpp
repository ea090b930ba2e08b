#include "svfsyn/phantom.hpp"

#include <cmath>
#include <numbers>

#include "svfsyn/lie.hpp"
#include "svfsyn/registration.hpp"

namespace svfsyn {

const char *cohort_name(Cohort c) { return c == Cohort::HC ? "hc" : "ad"; }

Cohort cohort_from_name(const std::string &name) {
    if (name == "hc" || name == "HC") return Cohort::HC;
    if (name == "ad" || name == "AD") return Cohort::AD;
    throw io_error("unknown cohort '" + name + "' (expected hc or ad)");
}

void PhantomSpec::validate() const {
    geometry.validate();
    if (age < 60.0 || age > 90.0) throw io_error("PhantomSpec: age must be in [60, 90]");
    if (ventricle_rate < 0.0 || hippocampus_rate < 0.0)
        throw io_error("PhantomSpec: rates must be >= 0");
    if (marker) {
        const auto &m = *marker;
        if (!(m[3] > 0.0)) throw io_error("PhantomSpec: marker radius must be positive");
        for (int a = 0; a < 3; ++a)
            if (m[a] < 0.0 || m[a] > geometry.dims[a] - 1.0)
                throw io_error("PhantomSpec: marker center outside grid");
    }
}

PhantomSpec default_phantom_spec(const GridGeometry &geom, double age, Cohort cohort) {
    PhantomSpec s;
    s.geometry = geom;
    s.age = age;
    s.cohort = cohort;
    if (cohort == Cohort::AD) {
        s.ventricle_rate = 0.10;
        s.hippocampus_rate = 0.03;
    }
    return s;
}

namespace {

struct Ellipsoid {
    Vec3 center;
    Vec3 semi;  // semi-axes in voxels

    bool contains(double x, double y, double z) const {
        const double a = (x - center[0]) / semi[0];
        const double b = (y - center[1]) / semi[1];
        const double c = (z - center[2]) / semi[2];
        return a * a + b * b + c * c <= 1.0;
    }
    double volume() const {
        return 4.0 / 3.0 * std::numbers::pi * semi[0] * semi[1] * semi[2];
    }
};

struct Anatomy {
    Ellipsoid outer;
    Ellipsoid vent[2];
    Ellipsoid hip[2];
};

Anatomy layout(const PhantomSpec &spec) {
    const auto &d = spec.geometry.dims;
    const double nx = d[0], ny = d[1], nz = d[2];
    const double md = std::min({nx, ny, nz});
    const Vec3 c{(nx - 1) / 2.0, (ny - 1) / 2.0, (nz - 1) / 2.0};
    const double years = spec.age - 60.0;

    Anatomy a;
    a.outer = {c, {0.40 * nx, 0.44 * ny, 0.38 * nz}};

    const double rv = 0.085 * md + spec.ventricle_rate * years;
    const double rh = 0.07 * md - spec.hippocampus_rate * years;
    if (rh <= 1.0) throw io_error("PhantomSpec: hippocampus radius shrinks below 1 voxel");

    for (int side = 0; side < 2; ++side) {
        const double sx = side ? 1.0 : -1.0;
        a.vent[side] = {{c[0] + sx * 0.12 * nx, c[1] + 0.02 * ny, c[2] + 0.04 * nz},
                        {0.62 * rv, 1.55 * rv, 0.95 * rv}};
        a.hip[side] = {{c[0] + sx * 0.24 * nx, c[1] - 0.16 * ny, c[2] - 0.10 * nz}, {rh, rh, rh}};
    }

    // structures must stay inside the parenchyma ellipsoid: center offset
    // tested against the per-axis semi-axis slack
    for (const Ellipsoid *e : {&a.vent[0], &a.vent[1], &a.hip[0], &a.hip[1]}) {
        double off = 0.0;
        for (int axis = 0; axis < 3; ++axis) {
            const double slack = a.outer.semi[axis] - e->semi[axis];
            if (slack <= 0.0)
                throw io_error("PhantomSpec: structure radius exceeds parenchyma extent");
            const double t = (e->center[axis] - c[axis]) / slack;
            off += t * t;
        }
        if (off > 1.0) throw io_error("PhantomSpec: structure radius exceeds parenchyma extent");
    }
    return a;
}

constexpr double kIntensityBackground = 0.0;
constexpr double kIntensityParenchyma = 0.7;
constexpr double kIntensityVentricle = 0.15;
constexpr double kIntensityHippocampus = 0.55;
constexpr double kIntensityMarker = 0.9;

void paint_marker(PhantomVolumes &out, const std::array<double, 4> &m) {
    const auto &d = out.image.geom.dims;
    const double r2 = m[3] * m[3];
    const int lo[3] = {std::max(0, static_cast<int>(std::floor(m[0] - m[3]))),
                       std::max(0, static_cast<int>(std::floor(m[1] - m[3]))),
                       std::max(0, static_cast<int>(std::floor(m[2] - m[3])))};
    const int hi[3] = {std::min(d[0] - 1, static_cast<int>(std::ceil(m[0] + m[3]))),
                       std::min(d[1] - 1, static_cast<int>(std::ceil(m[1] + m[3]))),
                       std::min(d[2] - 1, static_cast<int>(std::ceil(m[2] + m[3])))};
    for (int k = lo[2]; k <= hi[2]; ++k)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int i = lo[0]; i <= hi[0]; ++i) {
                const double dx = i - m[0], dy = j - m[1], dz = k - m[2];
                if (dx * dx + dy * dy + dz * dz <= r2) {
                    out.image.at(i, j, k) = kIntensityMarker;
                    out.labels.at(i, j, k) = static_cast<double>(labels::marker);
                }
            }
}

}  // namespace

PhantomVolumes make_template(const PhantomSpec &spec) {
    spec.validate();
    const Anatomy a = layout(spec);
    PhantomVolumes out{ScalarVolume(spec.geometry), ScalarVolume(spec.geometry, true)};
    const auto &d = spec.geometry.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                const double x = i, y = j, z = k;
                double intensity = kIntensityBackground;
                long label = labels::background;
                if (a.outer.contains(x, y, z)) {
                    intensity = kIntensityParenchyma;
                    label = labels::parenchyma;
                    if (a.vent[0].contains(x, y, z) || a.vent[1].contains(x, y, z)) {
                        intensity = kIntensityVentricle;
                        label = labels::ventricles;
                    } else if (a.hip[0].contains(x, y, z) || a.hip[1].contains(x, y, z)) {
                        intensity = kIntensityHippocampus;
                        label = labels::hippocampi;
                    }
                }
                out.image.at(i, j, k) = intensity;
                out.labels.at(i, j, k) = static_cast<double>(label);
            }
    out.image = gaussian_smooth(out.image, 1.0);
    // running-sum rounding in the blur can undershoot zero by ~1e-16
    for (double &v : out.image.values) v = std::clamp(v, 0.0, 1.0);
    return out;
}

PhantomVolumes make_subject(const PhantomSpec &spec) {
    spec.validate();
    if (!spec.marker) throw io_error("make_subject: marker is required");
    PhantomVolumes tpl = make_template(spec);
    const VectorField svf = smooth_random_svf(spec.geometry, spec.seed, 2.0);
    const VectorField disp = exp(svf);
    PhantomVolumes out{warp(tpl.image, disp), warp(tpl.labels, disp)};
    paint_marker(out, *spec.marker);
    return out;
}

VectorField smooth_random_svf(const GridGeometry &geom, std::uint64_t seed, double max_norm,
                              double max_frequency, int modes, bool edge_taper) {
    geom.validate();
    if (max_norm < 0.0) throw io_error("smooth_random_svf: max_norm must be >= 0");
    SplitMix64 rng(seed ^ 0xA02B'DBF7'BB3C'0A7ULL);

    struct Mode {
        double freq[3];
        double phase;
        double amp;
    };
    std::array<std::vector<Mode>, 3> comp_modes;
    for (int c = 0; c < 3; ++c)
        for (int m = 0; m < modes; ++m) {
            Mode mode;
            for (int a = 0; a < 3; ++a) mode.freq[a] = rng.uniform(-max_frequency, max_frequency);
            mode.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            mode.amp = rng.uniform(0.3, 1.0);
            comp_modes[c].push_back(mode);
        }

    VectorField out(geom);
    const auto &d = geom.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                Vec3 v{0, 0, 0};
                const double pos[3] = {static_cast<double>(i) / (d[0] - 1),
                                       static_cast<double>(j) / (d[1] - 1),
                                       static_cast<double>(k) / (d[2] - 1)};
                double taper = 1.0;
                if (edge_taper)
                    taper = std::sin(std::numbers::pi * pos[0]) *
                            std::sin(std::numbers::pi * pos[1]) *
                            std::sin(std::numbers::pi * pos[2]);
                for (int c = 0; c < 3; ++c)
                    for (const Mode &m : comp_modes[c]) {
                        const double arg = 2.0 * std::numbers::pi *
                                               (m.freq[0] * pos[0] + m.freq[1] * pos[1] +
                                                m.freq[2] * pos[2]) +
                                           m.phase;
                        v[c] += taper * m.amp * std::sin(arg);
                    }
                out.at(i, j, k) = v;
            }

    const double peak = max_vector_norm(out);
    if (peak > 0.0) {
        const double s = max_norm / peak;
        for (Vec3 &v : out.vectors) {
            v[0] *= s;
            v[1] *= s;
            v[2] *= s;
        }
    }
    return out;
}

}  // namespace svfsyn
