#include "svfsyn/transport.hpp"

#include <cmath>

namespace svfsyn {

PoleLadderResult pole_ladder(const VectorField &u, const VectorField &v) {
    require_same_geometry(u.geom, v.geom, "pole_ladder");
    const double vmax = max_vector_norm(v);  // voxelsize == 1 in index space
    const int n = std::max(1, static_cast<int>(std::ceil(vmax)));
    const VectorField step = scaled(v, 1.0 / (2.0 * n));
    PoleLadderResult res;
    res.steps = n;
    res.transported = u;
    for (int j = 0; j < n; ++j) {
        const VectorField b1 = bracket(step, res.transported);
        const VectorField b2 = bracket(step, b1);
        for (std::size_t p = 0; p < res.transported.vectors.size(); ++p)
            for (int a = 0; a < 3; ++a)
                res.transported.vectors[p][a] += b1.vectors[p][a] + 0.5 * b2.vectors[p][a];
        if (!all_finite(res.transported))
            throw numeric_error("pole_ladder: non-finite intermediate at rung " +
                                std::to_string(j + 1) + " of " + std::to_string(n));
    }
    return res;
}

VectorField conjugation_oracle(const VectorField &u, const VectorField &v, const ExpConfig &cfg) {
    require_same_geometry(u.geom, v.geom, "conjugation_oracle");
    const VectorField half_fwd = exp(scaled(v, 0.5), cfg);
    const VectorField half_bwd = exp(scaled(v, -0.5), cfg);
    const VectorField mid = exp(u, cfg);
    return compose_displacements(half_fwd, compose_displacements(mid, half_bwd));
}

HalfSpaceCheck half_space_check(const ScalarVolume &T0, const ScalarVolume &I0,
                                const VectorField &v, const ExpConfig &cfg) {
    require_same_geometry(T0.geom, I0.geom, "half_space_check");
    require_same_geometry(T0.geom, v.geom, "half_space_check");
    HalfSpaceCheck out;
    out.template_half = warp(T0, exp(scaled(v, 0.5), cfg));
    out.subject_half = warp(I0, exp(scaled(v, -0.5), cfg));
    double acc = 0.0;
    for (std::size_t p = 0; p < out.template_half.values.size(); ++p)
        acc += std::abs(out.template_half.values[p] - out.subject_half.values[p]);
    out.mean_abs_difference = acc / static_cast<double>(out.template_half.values.size());
    return out;
}

}  // namespace svfsyn
