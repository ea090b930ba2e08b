#include "svfsyn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace svfsyn {

namespace {

long label_at(const ScalarVolume &v, std::size_t p) { return std::lround(v.values[p]); }

}  // namespace

MetricReport similarity_suite(const ScalarVolume &pred, const ScalarVolume &truth) {
    require_same_geometry(pred.geom, truth.geom, "similarity_suite");
    const std::size_t n = pred.values.size();
    MetricReport r;

    double abs_acc = 0.0, sq_acc = 0.0, truth_sq = 0.0;
    double sp = 0.0, st = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double d = pred.values[p] - truth.values[p];
        abs_acc += std::abs(d);
        sq_acc += d * d;
        truth_sq += truth.values[p] * truth.values[p];
        sp += pred.values[p];
        st += truth.values[p];
    }
    r.mae = abs_acc / static_cast<double>(n);
    const double mse = sq_acc / static_cast<double>(n);
    r.nfn = truth_sq > 0.0 ? std::sqrt(sq_acc) / std::sqrt(truth_sq) : (sq_acc > 0.0 ? 1.0 : 0.0);
    r.psnr = mse <= 0.0 ? 99.0 : std::min(99.0, 10.0 * std::log10(1.0 / mse));

    const double mp = sp / static_cast<double>(n);
    const double mt = st / static_cast<double>(n);
    double cov = 0.0, vp = 0.0, vt = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double a = pred.values[p] - mp;
        const double b = truth.values[p] - mt;
        cov += a * b;
        vp += a * a;
        vt += b * b;
    }
    const double denom = std::sqrt(vp) * std::sqrt(vt);
    r.ncc = denom > 0.0 ? cov / denom : (sq_acc == 0.0 ? 1.0 : 0.0);

    // mean local SSIM, 7^3 clipped windows, dynamic range 1
    constexpr int kWindow = 7;
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const ScalarVolume cnt = window_count(pred.geom, kWindow);
    ScalarVolume pp = pred, tt = truth, pt = pred;
    for (std::size_t p = 0; p < n; ++p) {
        pp.values[p] = pred.values[p] * pred.values[p];
        tt.values[p] = truth.values[p] * truth.values[p];
        pt.values[p] = pred.values[p] * truth.values[p];
    }
    const ScalarVolume s_p = window_sum(pred, kWindow);
    const ScalarVolume s_t = window_sum(truth, kWindow);
    const ScalarVolume s_pp = window_sum(pp, kWindow);
    const ScalarVolume s_tt = window_sum(tt, kWindow);
    const ScalarVolume s_pt = window_sum(pt, kWindow);
    double ssim_acc = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double m = cnt.values[p];
        const double mu_p = s_p.values[p] / m;
        const double mu_t = s_t.values[p] / m;
        const double var_p = s_pp.values[p] / m - mu_p * mu_p;
        const double var_t = s_tt.values[p] / m - mu_t * mu_t;
        const double cov_pt = s_pt.values[p] / m - mu_p * mu_t;
        const double num = (2.0 * mu_p * mu_t + c1) * (2.0 * cov_pt + c2);
        const double den = (mu_p * mu_p + mu_t * mu_t + c1) * (var_p + var_t + c2);
        ssim_acc += num / den;
    }
    r.ssim = ssim_acc / static_cast<double>(n);
    return r;
}

double dice(const ScalarVolume &pred_labels, const ScalarVolume &truth_labels, long label) {
    require_same_geometry(pred_labels.geom, truth_labels.geom, "dice");
    std::size_t a = 0, b = 0, inter = 0;
    for (std::size_t p = 0; p < pred_labels.values.size(); ++p) {
        const bool in_a = label_at(pred_labels, p) == label;
        const bool in_b = label_at(truth_labels, p) == label;
        a += in_a;
        b += in_b;
        inter += in_a && in_b;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

std::map<std::string, double> regional_volume_mae(
    const ScalarVolume &pred_labels, const ScalarVolume &truth_labels,
    const std::map<std::string, std::vector<long>> &regions) {
    require_same_geometry(pred_labels.geom, truth_labels.geom, "regional_volume_mae");

    std::size_t wb_pred = 0, wb_truth = 0;
    for (std::size_t p = 0; p < pred_labels.values.size(); ++p) {
        wb_pred += label_at(pred_labels, p) != 0;
        wb_truth += label_at(truth_labels, p) != 0;
    }
    if (wb_pred == 0 || wb_truth == 0)
        throw io_error("regional_volume_mae: empty whole-brain label set");

    // Volumes are voxel count x spacing product (mm^3); the spacing product
    // cancels in each region/whole-brain ratio, so the ratios reduce to voxel
    // count ratios and stay exactly invariant under spacing rescaling.
    std::map<std::string, double> out;
    for (const auto &[name, labels] : regions) {
        std::size_t n_pred = 0, n_truth = 0;
        for (std::size_t p = 0; p < pred_labels.values.size(); ++p) {
            const long lp = label_at(pred_labels, p);
            const long lt = label_at(truth_labels, p);
            n_pred += std::find(labels.begin(), labels.end(), lp) != labels.end();
            n_truth += std::find(labels.begin(), labels.end(), lt) != labels.end();
        }
        const double ratio_pred = static_cast<double>(n_pred) / static_cast<double>(wb_pred);
        const double ratio_truth = static_cast<double>(n_truth) / static_cast<double>(wb_truth);
        out[name] = std::abs(ratio_truth - ratio_pred) * 100.0;
    }
    return out;
}

MetricReport full_report(const ScalarVolume &pred, const ScalarVolume &truth,
                         const ScalarVolume *pred_labels, const ScalarVolume *truth_labels,
                         const std::map<std::string, std::vector<long>> *regions) {
    MetricReport r = similarity_suite(pred, truth);
    if (pred_labels && truth_labels) {
        std::set<long> labels;
        for (std::size_t p = 0; p < pred_labels->values.size(); ++p) {
            const long a = label_at(*pred_labels, p);
            const long b = label_at(*truth_labels, p);
            if (a != 0) labels.insert(a);
            if (b != 0) labels.insert(b);
        }
        for (long l : labels) r.dsc[l] = dice(*pred_labels, *truth_labels, l);
        if (regions) r.regional_mae = regional_volume_mae(*pred_labels, *truth_labels, *regions);
    }
    return r;
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["nfn"] = nfn;
    j["mae"] = mae;
    j["psnr"] = psnr;
    j["ssim"] = ssim;
    j["ncc"] = ncc;
    for (const auto &[label, value] : dsc) j["dsc." + std::to_string(label)] = value;
    for (const auto &[name, value] : regional_mae) j["regional_mae." + name] = value;
    return j.dump(2);
}

}  // namespace svfsyn
