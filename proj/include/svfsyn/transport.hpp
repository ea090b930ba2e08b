#ifndef SVFSYN_TRANSPORT_HPP
#define SVFSYN_TRANSPORT_HPP

#include "svfsyn/grid.hpp"
#include "svfsyn/lie.hpp"

namespace svfsyn {

struct PoleLadderResult {
    VectorField transported;  // SVF; callers exponentiate it
    int steps = 0;            // the scaling count n
};

/// Parallel transport of the SVF u along the SVF v with the pole ladder.
/// Scaling step: n = max(1, ceil(max_p ||v(p)||)) with fields in voxel
/// units (voxelsize == 1 in index space). Each rung applies the
/// second-order bracket update
///   u_j = u_{j-1} + [v/2n, u_{j-1}] + [v/2n, [v/2n, u_{j-1}]]/2.
/// Non-finite intermediates abort: transport instability must be visible.
PoleLadderResult pole_ladder(const VectorField &u, const VectorField &v);

/// Direct conjugation route: the displacement of
/// exp(v/2) o exp(u) o exp(-v/2), each factor exponentiated separately.
/// Serves as the independent check on pole_ladder (which approximates its
/// logarithm).
VectorField conjugation_oracle(const VectorField &u, const VectorField &v,
                               const ExpConfig &cfg = {});

struct HalfSpaceCheck {
    ScalarVolume template_half;   // warp(T0, exp(v/2))
    ScalarVolume subject_half;    // warp(I0, exp(-v/2))
    double mean_abs_difference = 0.0;
};

/// Diagnostic for a template-to-subject SVF v: both half-way warps should
/// land on the same mid-point image when v parameterizes a plausible
/// geodesic between T0 and I0.
HalfSpaceCheck half_space_check(const ScalarVolume &T0, const ScalarVolume &I0,
                                const VectorField &v, const ExpConfig &cfg = {});

}  // namespace svfsyn

#endif
