#include "svfsyn/transport.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "svfsyn/registration.hpp"

using namespace svfsyn;
using namespace svfsyn::testing;

TEST_CASE("pole ladder along the identity returns u unchanged") {
    const GridGeometry g = make_geometry(16, 16, 16);
    const VectorField u = smooth_random_svf(g, 3, 1.5);
    const PoleLadderResult r = pole_ladder(u, VectorField(g));
    CHECK(r.steps == 1);
    for (std::size_t p = 0; p < u.vectors.size(); ++p)
        for (int c = 0; c < 3; ++c) CHECK(r.transported.vectors[p][c] == u.vectors[p][c]);
}

TEST_CASE("pole ladder of the zero field is zero") {
    const GridGeometry g = make_geometry(16, 16, 16);
    const VectorField v = smooth_random_svf(g, 4, 2.5);
    const PoleLadderResult r = pole_ladder(VectorField(g), v);
    for (const Vec3 &x : r.transported.vectors)
        for (int c = 0; c < 3; ++c) CHECK(x[c] == 0.0);
}

TEST_CASE("ladder step count follows the max field norm") {
    const GridGeometry g = make_geometry(16, 16, 16);
    const VectorField u = smooth_random_svf(g, 5, 0.5);
    VectorField v = smooth_random_svf(g, 6, 2.4);
    CHECK(pole_ladder(u, v).steps == 3);
    v = smooth_random_svf(g, 6, 0.4);
    CHECK(pole_ladder(u, v).steps == 1);
}

TEST_CASE("transport is linear in the transported field") {
    const GridGeometry g = make_geometry(20, 20, 20);
    const VectorField u = smooth_random_svf(g, 11, 1.0);
    const VectorField v = smooth_random_svf(g, 12, 2.0);
    const VectorField base = pole_ladder(u, v).transported;
    for (double alpha : {0.5, 2.0}) {
        const VectorField scaled_out = pole_ladder(scaled(u, alpha), v).transported;
        double rel = 0.0;
        for (int k = 2; k < 18; ++k)
            for (int j = 2; j < 18; ++j)
                for (int i = 2; i < 18; ++i)
                    for (int c = 0; c < 3; ++c) {
                        const double want = alpha * base.at(i, j, k)[c];
                        const double got = scaled_out.at(i, j, k)[c];
                        if (std::abs(want) > 1e-9)
                            rel = std::max(rel, std::abs(got - want) / std::abs(want));
                    }
        CHECK(rel < 0.02);
    }
}

TEST_CASE("conjugation oracle trivial cases") {
    const GridGeometry g = make_geometry(16, 16, 16);
    SUBCASE("conjugating the identity gives the identity") {
        const GridGeometry g24 = make_geometry(24, 24, 24);
        const VectorField v = smooth_random_svf(g24, 21, 1.5, 0.75);
        const VectorField d = conjugation_oracle(VectorField(g24), v);
        CHECK(max_interior_norm(d, 2) < 1e-2);
    }
    SUBCASE("translations commute") {
        VectorField v(g), u(g);
        for (auto &x : v.vectors) x = {1.0, -0.5, 0.25};
        for (auto &x : u.vectors) x = {-0.5, 0.75, 0.5};
        const VectorField d = conjugation_oracle(u, v);
        for (int k = 4; k < 12; ++k)
            for (int j = 4; j < 12; ++j)
                for (int i = 4; i < 12; ++i) {
                    CHECK(d.at(i, j, k)[0] == doctest::Approx(-0.5).epsilon(1e-9));
                    CHECK(d.at(i, j, k)[1] == doctest::Approx(0.75).epsilon(1e-9));
                    CHECK(d.at(i, j, k)[2] == doctest::Approx(0.5).epsilon(1e-9));
                }
    }
}

TEST_CASE("conjugation oracle matches the matrix route on linear fields") {
    const GridGeometry g = make_geometry(24, 24, 24);
    const Vec3 c = grid_center(g);
    const Mat3 V{{{0.0, 0.05, -0.02}, {0.02, -0.03, 0.0}, {0.0, 0.04, 0.01}}};
    const Mat3 U{{{0.03, 0.0, 0.02}, {-0.02, 0.02, 0.01}, {0.01, 0.0, -0.04}}};
    const VectorField v = linear_field(g, V, c);
    const VectorField u = linear_field(g, U, c);
    const VectorField got = conjugation_oracle(u, v, {10, 0.5});

    Mat3 half = V;
    for (auto &row : half)
        for (auto &x : row) x *= 0.5;
    Mat3 neg_half = half;
    for (auto &row : neg_half)
        for (auto &x : row) x *= -1.0;
    const Mat3 prod = mat_mul(expm(half), mat_mul(expm(U), expm(neg_half)));

    double worst = 0.0;
    for (int k = 2; k < 22; ++k)
        for (int j = 2; j < 22; ++j)
            for (int i = 2; i < 22; ++i) {
                const double dx = i - c[0], dy = j - c[1], dz = k - c[2];
                if (dx * dx + dy * dy + dz * dz > 8.0 * 8.0) continue;
                const Vec3 y = mat_apply(prod, {dx, dy, dz});
                const Vec3 want{y[0] - dx, y[1] - dy, y[2] - dz};
                const Vec3 &have = got.at(i, j, k);
                for (int comp = 0; comp < 3; ++comp)
                    worst = std::max(worst, std::abs(have[comp] - want[comp]));
            }
    CHECK(worst < 2e-3);
}

TEST_CASE("pole ladder agrees with the conjugation oracle on smooth fields") {
    const GridGeometry g = make_geometry(24, 24, 24);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
        const VectorField u = smooth_random_svf(g, seed * 2 + 1, 2.0);
        const VectorField v = smooth_random_svf(g, seed * 2 + 2, 3.0);
        const PoleLadderResult ladder = pole_ladder(u, v);
        const VectorField via_ladder = exp(ladder.transported);
        const VectorField via_oracle = conjugation_oracle(u, v);
        CHECK(max_interior_diff(via_ladder, via_oracle, 2) < 0.15);
        CHECK(min_value(jacobian_determinant(via_ladder)) > 0.0);
    }
}

TEST_CASE("pole ladder rejects geometry mismatches") {
    const VectorField a(make_geometry(8, 8, 8));
    const VectorField b(make_geometry(8, 8, 10));
    CHECK_THROWS_AS(pole_ladder(a, b), io_error);
    CHECK_THROWS_AS(conjugation_oracle(a, b), io_error);
}

TEST_CASE("pole ladder aborts on unstable input") {
    const GridGeometry g = make_geometry(12, 12, 12);
    // gradients far outside the stable range blow up the bracket iteration
    const VectorField u = smooth_random_svf(g, 100, 2000.0, 50.0, 6, false);
    const VectorField v = smooth_random_svf(g, 101, 2000.0, 50.0, 6, false);
    CHECK_THROWS_AS(pole_ladder(u, v), numeric_error);
}

TEST_CASE("half-space check") {
    const GridGeometry g = make_geometry(32, 32, 32);
    const PhantomSpec spec = default_phantom_spec(g, 70.0, Cohort::HC);
    const ScalarVolume T0 = make_template(spec).image;

    SUBCASE("identical images with zero SVF have zero difference") {
        const HalfSpaceCheck h = half_space_check(T0, T0, VectorField(g));
        CHECK(h.mean_abs_difference == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("the true SVF beats the registration residual; its negation does not") {
        const VectorField v_true = smooth_random_svf(g, 55, 2.0);
        const ScalarVolume I0 = warp(T0, exp(v_true));
        RegistrationConfig cfg;
        cfg.levels = {2, 1};
        cfg.iterations_per_level = 30;
        RegistrationTrace trace;
        register_svf(T0, I0, cfg, &trace);
        const HalfSpaceCheck good = half_space_check(T0, I0, v_true);
        const HalfSpaceCheck bad = half_space_check(T0, I0, scaled(v_true, -1.0));
        CHECK(good.mean_abs_difference <= trace.final_mean_abs_residual);
        CHECK(bad.mean_abs_difference > good.mean_abs_difference);
    }
}
