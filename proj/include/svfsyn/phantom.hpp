#ifndef SVFSYN_PHANTOM_HPP
#define SVFSYN_PHANTOM_HPP

#include <cstdint>
#include <optional>

#include "svfsyn/grid.hpp"

namespace svfsyn {

enum class Cohort { HC, AD };

const char *cohort_name(Cohort c);
Cohort cohort_from_name(const std::string &name);

namespace labels {
constexpr long background = 0;
constexpr long parenchyma = 1;
constexpr long ventricles = 2;
constexpr long hippocampi = 3;
constexpr long marker = 4;
}  // namespace labels

/// Age- and cohort-parametrized synthetic brain: outer parenchyma
/// ellipsoid, a ventricle ellipsoid pair that grows with age, a
/// hippocampus sphere pair that shrinks, and (for subjects) a unique
/// marker blob. Rates are radius change in voxels per year from age 60.
struct PhantomSpec {
    GridGeometry geometry;
    double age = 60.0;
    Cohort cohort = Cohort::HC;
    double ventricle_rate = 0.04;    // HC default; AD default 0.10
    double hippocampus_rate = 0.01;  // HC default; AD default 0.03
    std::uint64_t seed = 0;
    std::optional<std::array<double, 4>> marker;  // x, y, z, radius in voxels

    void validate() const;
};

/// Spec with the per-cohort default rates filled in.
PhantomSpec default_phantom_spec(const GridGeometry &geom, double age, Cohort cohort);

struct PhantomVolumes {
    ScalarVolume image;   // intensities in [0,1], 1-voxel blur
    ScalarVolume labels;  // crisp ids, no blur
};

/// Deterministic template for (age, cohort); seed and marker are ignored.
PhantomVolumes make_template(const PhantomSpec &spec);

/// Template individualized by a seed-deterministic smooth random SVF
/// (max 2 voxels) with the marker blob painted on top. Requires marker.
PhantomVolumes make_subject(const PhantomSpec &spec);

/// Seeded smooth random vector field: a handful of low-frequency sinusoid
/// modes per component, rescaled so the max vector norm equals max_norm.
/// edge_taper fades the field to zero at the grid faces so flows stay
/// inside the domain (boundary clamping never engages); pass false for
/// fields that must be non-zero at the faces. Deterministic across
/// platforms (no std RNG distributions involved).
VectorField smooth_random_svf(const GridGeometry &geom, std::uint64_t seed, double max_norm,
                              double max_frequency = 1.0, int modes = 4, bool edge_taper = true);

/// splitmix64; tiny deterministic generator for phantom noise and tests.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }  // [0,1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

}  // namespace svfsyn

#endif
