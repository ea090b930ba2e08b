#include "svfsyn/registration.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "svfsyn/metrics.hpp"

using namespace svfsyn;
using namespace svfsyn::testing;

namespace {

RegistrationConfig quick_config() {
    RegistrationConfig cfg;
    cfg.levels = {2, 1};
    cfg.iterations_per_level = 30;
    return cfg;
}

PhantomVolumes phantom_at(const GridGeometry &g, double age) {
    return make_template(default_phantom_spec(g, age, Cohort::HC));
}

}  // namespace

TEST_CASE("lncc basics") {
    const GridGeometry g = make_geometry(12, 12, 12);
    const ScalarVolume a = random_volume(g, 99, 0.1, 0.9);

    SUBCASE("self-correlation is 1") {
        CHECK(lncc(a, a, 3) == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("affine intensity rescale keeps correlation 1") {
        ScalarVolume b = a;
        for (double &x : b.values) x = 0.5 * x + 0.1;
        CHECK(lncc(a, b, 3) == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("matches the brute-force per-neighborhood oracle") {
        const GridGeometry small = make_geometry(5, 5, 5);
        const ScalarVolume x = random_volume(small, 7);
        const ScalarVolume y = random_volume(small, 8);
        const int w = 3;
        double acc = 0.0;
        for (int kk = 0; kk < 5; ++kk)
            for (int jj = 0; jj < 5; ++jj)
                for (int ii = 0; ii < 5; ++ii) {
                    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
                    int n = 0;
                    for (int dz = -w / 2; dz <= w / 2; ++dz)
                        for (int dy = -w / 2; dy <= w / 2; ++dy)
                            for (int dx = -w / 2; dx <= w / 2; ++dx) {
                                const int a0 = ii + dx, b0 = jj + dy, c0 = kk + dz;
                                if (a0 < 0 || b0 < 0 || c0 < 0 || a0 >= 5 || b0 >= 5 || c0 >= 5)
                                    continue;
                                const double xv = x.at(a0, b0, c0), yv = y.at(a0, b0, c0);
                                sx += xv;
                                sy += yv;
                                sxx += xv * xv;
                                syy += yv * yv;
                                sxy += xv * yv;
                                ++n;
                            }
                    const double mx = sx / n, my = sy / n;
                    const double vx = sxx / n - mx * mx;
                    const double vy = syy / n - my * my;
                    const double cov = sxy / n - mx * my;
                    if (vx > 1e-5 && vy > 1e-5) acc += cov * cov / (vx * vy);
                }
        CHECK(lncc(x, y, 3) == doctest::Approx(acc / 125.0).epsilon(1e-10));
    }
    SUBCASE("geometry mismatch throws") {
        const ScalarVolume b(make_geometry(12, 12, 14));
        CHECK_THROWS_AS(lncc(a, b, 3), io_error);
    }
}

TEST_CASE("gaussian smoothing preserves constants and reduces variance") {
    const GridGeometry g = make_geometry(16, 16, 16);
    SUBCASE("constants pass through") {
        ScalarVolume c(g);
        std::fill(c.values.begin(), c.values.end(), 0.37);
        const ScalarVolume s = gaussian_smooth(c, 2.0);
        for (double v : s.values) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
    }
    SUBCASE("noise variance shrinks") {
        const ScalarVolume noisy = random_volume(g, 17);
        const ScalarVolume s = gaussian_smooth(noisy, 1.5);
        auto variance = [](const ScalarVolume &v) {
            double mean = 0.0;
            for (double x : v.values) mean += x;
            mean /= static_cast<double>(v.values.size());
            double var = 0.0;
            for (double x : v.values) var += (x - mean) * (x - mean);
            return var / static_cast<double>(v.values.size());
        };
        CHECK(variance(s) < 0.2 * variance(noisy));
    }
    SUBCASE("sigma zero is the identity") {
        const ScalarVolume v = random_volume(g, 18);
        const ScalarVolume s = gaussian_smooth(v, 0.0);
        CHECK(s.values == v.values);
    }
}

TEST_CASE("registering an image to itself yields a near-zero SVF") {
    const GridGeometry g = make_geometry(32, 32, 32);
    const ScalarVolume img = phantom_at(g, 70.0).image;
    const VectorField v = register_svf(img, img, quick_config());
    CHECK(max_vector_norm(v) < 0.05);
}

TEST_CASE("registration recovers a constant shift") {
    const GridGeometry g = make_geometry(32, 32, 32);
    const PhantomVolumes ph = phantom_at(g, 70.0);
    VectorField shift(g);
    for (auto &x : shift.vectors) x = {2.0, 0.0, 0.0};
    const ScalarVolume fixed = warp(ph.image, shift);

    const VectorField v = register_svf(ph.image, fixed, quick_config());
    const VectorField disp = exp(v);

    // mean recovered displacement inside the phantom's support
    double mean = 0.0;
    std::size_t count = 0;
    for (int k = 0; k < 32; ++k)
        for (int j = 0; j < 32; ++j)
            for (int i = 0; i < 32; ++i)
                if (ph.labels.at(i, j, k) != 0 && fixed.at(i, j, k) > 0.1) {
                    mean += disp.at(i, j, k)[0];
                    ++count;
                }
    mean /= static_cast<double>(count);
    CHECK(mean == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("registration recovers a smooth synthetic warp with high label overlap") {
    const GridGeometry g = make_geometry(48, 48, 48);
    const PhantomVolumes ph = phantom_at(g, 70.0);
    const VectorField v_true = smooth_random_svf(g, 904, 3.0);
    const VectorField d_true = exp(v_true);
    const ScalarVolume fixed = warp(ph.image, d_true);
    const ScalarVolume fixed_labels = warp(ph.labels, d_true);

    RegistrationConfig cfg;
    cfg.levels = {4, 2, 1};
    cfg.iterations_per_level = 40;
    RegistrationTrace trace;
    const VectorField v = register_svf(ph.image, fixed, cfg, &trace);
    const VectorField disp = exp(v);
    const ScalarVolume moved_labels = warp(ph.labels, disp);

    CHECK(dice(moved_labels, fixed_labels, labels::parenchyma) >= 0.95);
    CHECK(dice(moved_labels, fixed_labels, labels::ventricles) >= 0.90);
    CHECK(dice(moved_labels, fixed_labels, labels::hippocampi) >= 0.90);
    CHECK(min_value(jacobian_determinant(disp)) > 0.0);

    // similarity should mostly decrease along the final level
    const auto &mse = trace.mse_per_level.back();
    int drops = 0;
    for (std::size_t i = 1; i < mse.size(); ++i) drops += mse[i] < mse[i - 1];
    CHECK(drops >= static_cast<int>(0.9 * (mse.size() - 1)));
}

TEST_CASE("registration quality is roughly symmetric") {
    const GridGeometry g = make_geometry(48, 48, 48);
    const ScalarVolume a = phantom_at(g, 64.0).image;
    const ScalarVolume al = phantom_at(g, 64.0).labels;
    const ScalarVolume b = phantom_at(g, 76.0).image;
    const ScalarVolume bl = phantom_at(g, 76.0).labels;
    const RegistrationConfig cfg = quick_config();

    const VectorField vab = register_svf(a, b, cfg);
    const VectorField vba = register_svf(b, a, cfg);
    const double dice_ab = dice(warp(al, exp(vab)), bl, labels::ventricles);
    const double dice_ba = dice(warp(bl, exp(vba)), al, labels::ventricles);
    CHECK(std::abs(dice_ab - dice_ba) < 0.03);
}

TEST_CASE("stronger diffusion regularization keeps the Jacobian healthier on noisy pairs") {
    const GridGeometry g = make_geometry(32, 32, 32);
    PhantomVolumes ph = phantom_at(g, 70.0);
    ScalarVolume noisy_moving = ph.image;
    ScalarVolume noisy_fixed = warp(ph.image, exp(smooth_random_svf(g, 77, 2.0)));
    SplitMix64 rng(500);
    for (double &x : noisy_moving.values) x = std::clamp(x + rng.uniform(-0.05, 0.05), 0.0, 1.0);
    for (double &x : noisy_fixed.values) x = std::clamp(x + rng.uniform(-0.05, 0.05), 0.0, 1.0);

    RegistrationConfig strong = quick_config();
    strong.diffusion_sigma = 2.0;
    RegistrationConfig weak = quick_config();
    weak.diffusion_sigma = 0.5;

    const double minjac_strong =
        min_value(jacobian_determinant(exp(register_svf(noisy_moving, noisy_fixed, strong))));
    const double minjac_weak =
        min_value(jacobian_determinant(exp(register_svf(noisy_moving, noisy_fixed, weak))));
    CHECK(minjac_strong >= minjac_weak);
    CHECK(minjac_strong > 0.0);
}

TEST_CASE("LNCC similarity drives registration under local intensity rescaling") {
    const GridGeometry g = make_geometry(32, 32, 32);
    const PhantomVolumes ph = phantom_at(g, 70.0);
    const VectorField v_true = smooth_random_svf(g, 31, 2.0);
    ScalarVolume fixed = warp(ph.image, exp(v_true));
    const ScalarVolume fixed_labels = warp(ph.labels, exp(v_true));
    // spatially varying intensity gain breaks SSD's assumptions
    for (int k = 0; k < 32; ++k)
        for (int j = 0; j < 32; ++j)
            for (int i = 0; i < 32; ++i) fixed.at(i, j, k) *= 0.7 + 0.3 * i / 31.0;

    RegistrationConfig cfg = quick_config();
    cfg.similarity = RegistrationConfig::Similarity::LNCC;
    cfg.lncc_window = 5;
    const VectorField v = register_svf(ph.image, fixed, cfg);
    const double overlap = dice(warp(ph.labels, exp(v)), fixed_labels, labels::ventricles);
    CHECK(overlap >= 0.80);
}

TEST_CASE("config validation") {
    RegistrationConfig cfg;
    cfg.levels = {4, 2};
    CHECK_THROWS_AS(cfg.validate(), io_error);
    cfg = RegistrationConfig{};
    cfg.levels = {2, 4, 1};
    CHECK_THROWS_AS(cfg.validate(), io_error);
    cfg = RegistrationConfig{};
    cfg.step_scale = 1.5;
    CHECK_THROWS_AS(cfg.validate(), io_error);
    cfg = RegistrationConfig{};
    cfg.lncc_window = 4;
    CHECK_THROWS_AS(cfg.validate(), io_error);
}
