#include "svfsyn/metrics.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

using namespace svfsyn;
using namespace svfsyn::testing;

TEST_CASE("identical volumes score perfectly") {
    const GridGeometry g = make_geometry(10, 10, 10);
    const ScalarVolume v = random_volume(g, 1);
    const MetricReport r = similarity_suite(v, v);
    CHECK(r.mae == 0.0);
    CHECK(r.nfn == 0.0);
    CHECK(r.psnr == 99.0);
    CHECK(r.ncc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant offset has analytic MAE and PSNR") {
    const GridGeometry g = make_geometry(8, 8, 8);
    const ScalarVolume truth = random_volume(g, 2, 0.0, 0.9);
    ScalarVolume pred = truth;
    for (double &x : pred.values) x += 0.1;
    const MetricReport r = similarity_suite(pred, truth);
    CHECK(r.mae == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.psnr == doctest::Approx(20.0).epsilon(1e-10));
}

TEST_CASE("similarity suite matches an explicit-loop oracle") {
    const GridGeometry g = make_geometry(8, 8, 8);
    const ScalarVolume pred = random_volume(g, 3);
    const ScalarVolume truth = random_volume(g, 4);
    const MetricReport r = similarity_suite(pred, truth);
    const std::size_t n = pred.values.size();

    double abs_sum = 0, sq_sum = 0, truth_sq = 0;
    for (std::size_t p = 0; p < n; ++p) {
        abs_sum += std::abs(pred.values[p] - truth.values[p]);
        sq_sum += (pred.values[p] - truth.values[p]) * (pred.values[p] - truth.values[p]);
        truth_sq += truth.values[p] * truth.values[p];
    }
    CHECK(r.mae == doctest::Approx(abs_sum / n).epsilon(1e-12));
    CHECK(r.nfn == doctest::Approx(std::sqrt(sq_sum) / std::sqrt(truth_sq)).epsilon(1e-12));
    CHECK(r.psnr == doctest::Approx(10.0 * std::log10(n / sq_sum)).epsilon(1e-12));

    double mp = 0, mt = 0;
    for (std::size_t p = 0; p < n; ++p) {
        mp += pred.values[p];
        mt += truth.values[p];
    }
    mp /= n;
    mt /= n;
    double cov = 0, vp = 0, vt = 0;
    for (std::size_t p = 0; p < n; ++p) {
        cov += (pred.values[p] - mp) * (truth.values[p] - mt);
        vp += (pred.values[p] - mp) * (pred.values[p] - mp);
        vt += (truth.values[p] - mt) * (truth.values[p] - mt);
    }
    CHECK(r.ncc == doctest::Approx(cov / std::sqrt(vp * vt)).epsilon(1e-12));

    // SSIM oracle: explicit clipped 7^3 windows
    double ssim_acc = 0.0;
    const double c1 = 1e-4, c2 = 9e-4;
    for (int kk = 0; kk < 8; ++kk)
        for (int jj = 0; jj < 8; ++jj)
            for (int ii = 0; ii < 8; ++ii) {
                double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
                int m = 0;
                for (int dz = -3; dz <= 3; ++dz)
                    for (int dy = -3; dy <= 3; ++dy)
                        for (int dx = -3; dx <= 3; ++dx) {
                            const int a = ii + dx, b = jj + dy, c = kk + dz;
                            if (a < 0 || b < 0 || c < 0 || a >= 8 || b >= 8 || c >= 8) continue;
                            const double x = pred.at(a, b, c), y = truth.at(a, b, c);
                            sx += x;
                            sy += y;
                            sxx += x * x;
                            syy += y * y;
                            sxy += x * y;
                            ++m;
                        }
                const double mx = sx / m, my = sy / m;
                const double vx = sxx / m - mx * mx, vy = syy / m - my * my;
                const double cxy = sxy / m - mx * my;
                ssim_acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                            ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
    CHECK(r.ssim == doctest::Approx(ssim_acc / n).epsilon(1e-10));
}

TEST_CASE("NCC and SSIM are symmetric") {
    const GridGeometry g = make_geometry(8, 8, 8);
    const ScalarVolume a = random_volume(g, 5);
    const ScalarVolume b = random_volume(g, 6);
    const MetricReport ab = similarity_suite(a, b);
    const MetricReport ba = similarity_suite(b, a);
    CHECK(std::abs(ab.ncc - ba.ncc) < 1e-10);
    CHECK(std::abs(ab.ssim - ba.ssim) < 1e-10);
}

TEST_CASE("dice") {
    const GridGeometry g = make_geometry(4, 4, 4);
    ScalarVolume a(g, true), b(g, true);

    SUBCASE("identical masks give 1") {
        a.at(1, 1, 1) = 3;
        b.at(1, 1, 1) = 3;
        CHECK(dice(a, b, 3) == 1.0);
    }
    SUBCASE("disjoint masks give 0") {
        a.at(0, 0, 0) = 1;
        b.at(3, 3, 3) = 1;
        CHECK(dice(a, b, 1) == 0.0);
    }
    SUBCASE("|A|=8, |B|=8, overlap 4 gives 0.5") {
        // A occupies x in [0,1], y in [0,1], z in [0,1]; B shifted by one in x
        for (int k = 0; k < 2; ++k)
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i) {
                    a.at(i, j, k) = 5;
                    b.at(i + 1, j, k) = 5;
                }
        CHECK(dice(a, b, 5) == 0.5);
    }
    SUBCASE("both empty gives 1") { CHECK(dice(a, b, 9) == 1.0); }
    SUBCASE("dice grows with intersection at fixed sizes") {
        ScalarVolume c(g, true), d(g, true);
        for (int i = 0; i < 4; ++i) c.at(i, 0, 0) = 1;
        for (int i = 0; i < 4; ++i) d.at(i, 1, 0) = 1;  // disjoint
        const double d0 = dice(c, d, 1);
        d.at(3, 1, 0) = 0;
        d.at(3, 0, 0) = 1;  // one overlap
        const double d1 = dice(c, d, 1);
        CHECK(d1 > d0);
    }
}

TEST_CASE("regional volume MAE") {
    const GridGeometry g = make_geometry(8, 8, 8);
    ScalarVolume truth(g, true), pred(g, true);
    // whole brain: 64 voxels labeled; region "r" is 8 of them in truth
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) {
                truth.at(i, j, k) = 1;
                pred.at(i, j, k) = 1;
            }
    for (int i = 0; i < 8; ++i) {
        truth.values[g.index(i % 4, i / 4 % 4, 0)] = 2;
    }
    // prediction doubles the region's voxel count at parenchyma's expense
    for (int i = 0; i < 16; ++i) {
        pred.values[g.index(i % 4, i / 4 % 4, 0)] = 2;
    }
    const std::map<std::string, std::vector<long>> regions{{"r", {2}}};

    SUBCASE("hand-computed value") {
        const auto out = regional_volume_mae(pred, truth, regions);
        // truth ratio 8/64, predicted 16/64, difference 0.125 -> 12.5%
        CHECK(out.at("r") == doctest::Approx(12.5).epsilon(1e-12));
    }
    SUBCASE("identical volumes give zero") {
        const auto out = regional_volume_mae(truth, truth, regions);
        CHECK(out.at("r") == 0.0);
    }
    SUBCASE("isotropic spacing rescale leaves the value untouched") {
        ScalarVolume pred2 = pred, truth2 = truth;
        for (auto *v : {&pred2, &truth2})
            v->geom.spacing = {2.5, 2.5, 2.5};
        const auto a = regional_volume_mae(pred, truth, regions);
        const auto b = regional_volume_mae(pred2, truth2, regions);
        CHECK(a.at("r") == b.at("r"));
    }
    SUBCASE("empty whole brain throws") {
        const ScalarVolume blank(g, true);
        CHECK_THROWS_AS(regional_volume_mae(blank, truth, regions), io_error);
    }
}

TEST_CASE("report serializes flat stable keys") {
    MetricReport r;
    r.mae = 0.25;
    r.psnr = 12.0;
    r.dsc[2] = 0.5;
    r.regional_mae["ventricles"] = 1.5;
    const std::string j = r.to_json();
    CHECK(j.find("\"mae\": 0.25") != std::string::npos);
    CHECK(j.find("\"dsc.2\": 0.5") != std::string::npos);
    CHECK(j.find("\"regional_mae.ventricles\": 1.5") != std::string::npos);
}
