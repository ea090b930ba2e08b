#ifndef SVFSYN_LIE_HPP
#define SVFSYN_LIE_HPP

#include "svfsyn/grid.hpp"

namespace svfsyn {

/// Controls the scaling-and-squaring integrator. The squaring count is
/// N = max(min_scaling_steps, ceil(log2(max||v||_inf / max_step_displacement)), 0)
/// so the scaled field moves at most max_step_displacement voxels per step.
/// The default floor of 7 squarings keeps the integration error well under
/// a tenth of a voxel for fields up to a few voxels of displacement; inner
/// loops that only need a rough warp (demons iterations) lower it.
struct ExpConfig {
    int min_scaling_steps = 7;
    double max_step_displacement = 0.5;  // voxels; must be <= 0.5

    void validate() const {
        if (min_scaling_steps < 0) throw io_error("ExpConfig: min_scaling_steps must be >= 0");
        if (!(max_step_displacement > 0.0) || max_step_displacement > 0.5)
            throw io_error("ExpConfig: max_step_displacement must be in (0, 0.5]");
    }
};

/// Displacement composition (u1 o u2)(x) = u2(x) + u1(x + u2(x)),
/// i.e. the displacement of the map (Id+u1) o (Id+u2).
VectorField compose_displacements(const VectorField &u1, const VectorField &u2);

/// Lie exponential of an SVF via scaling and squaring; returns the
/// displacement of exp(v).
VectorField exp(const VectorField &v, const ExpConfig &cfg = {});

/// Reference integrator for the same flow ODE d(phi)/dt = v(phi):
/// classical RK4 per voxel seed, step t/steps; returns phi - Id.
VectorField flow_rk4(const VectorField &v, double t, int steps);

/// [v,u](x) = Jv(x) u(x) - Ju(x) v(x); Jacobians by the grid module's
/// difference stencils. Matches the matrix commutator VU - UV on linear
/// fields, which pins the sign compatible with bch below.
VectorField bracket(const VectorField &v, const VectorField &u);

/// Truncated Baker-Campbell-Hausdorff: log(exp(v) o exp(u)) up to the
/// requested order. Order 1: v + u + [v,u]/2; order 2 adds
/// ([v,[v,u]] + [u,[u,v]])/12.
VectorField bch(const VectorField &v, const VectorField &u, int order = 2);

/// Fixed-point inverse w <- -u o (Id + w); after enough iterations
/// (Id+u) o (Id+w) ~ Id. Callers check quality via the composition residual.
VectorField invert_displacement(const VectorField &u, int iterations);

VectorField scaled(const VectorField &f, double s);

}  // namespace svfsyn

#endif
