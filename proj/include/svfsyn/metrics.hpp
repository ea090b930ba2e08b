#ifndef SVFSYN_METRICS_HPP
#define SVFSYN_METRICS_HPP

#include <map>
#include <string>
#include <vector>

#include "svfsyn/grid.hpp"

namespace svfsyn {

/// Similarity metrics plus per-region volume errors for one
/// predicted/ground-truth pair. Serializes to a flat JSON document with
/// stable keys: nfn, mae, psnr, ssim, ncc, dsc.<label>, regional_mae.<region>.
struct MetricReport {
    double nfn = 0.0;
    double mae = 0.0;
    double psnr = 0.0;  // dB, capped at 99
    double ssim = 0.0;
    double ncc = 0.0;
    std::map<long, double> dsc;
    std::map<std::string, double> regional_mae;  // percent of whole-brain volume

    std::string to_json() const;
};

/// MAE, NFN (normalized by the truth volume), PSNR for dynamic range 1
/// (capped at 99 dB when MSE < 1e-10), global Pearson NCC, and mean local
/// SSIM over 7^3 windows with the standard stabilizers. Fills everything
/// except dsc/regional_mae.
MetricReport similarity_suite(const ScalarVolume &pred, const ScalarVolume &truth);

/// 2|A^B| / (|A|+|B|) over voxels carrying the given label; 1 when both
/// masks are empty.
double dice(const ScalarVolume &pred_labels, const ScalarVolume &truth_labels, long label);

/// Eq.-style regional volume error: per region r,
/// |Vol(truth,r)/Vol(truth,wb) - Vol(pred,r)/Vol(pred,wb)| * 100 with
/// volumes in mm^3 and whole brain = all nonzero labels.
std::map<std::string, double> regional_volume_mae(
    const ScalarVolume &pred_labels, const ScalarVolume &truth_labels,
    const std::map<std::string, std::vector<long>> &regions);

/// similarity_suite plus dsc for every label present in either volume and
/// regional_mae for the supplied regions.
MetricReport full_report(const ScalarVolume &pred, const ScalarVolume &truth,
                         const ScalarVolume *pred_labels, const ScalarVolume *truth_labels,
                         const std::map<std::string, std::vector<long>> *regions);

}  // namespace svfsyn

#endif
