#ifndef SVFSYN_REGISTRATION_HPP
#define SVFSYN_REGISTRATION_HPP

#include <vector>

#include "svfsyn/grid.hpp"
#include "svfsyn/lie.hpp"

namespace svfsyn {

/// Iterative SVF registration parameters. Defaults suit same-modality
/// phantom pairs; switch similarity to LNCC for locally rescaled intensities.
struct RegistrationConfig {
    enum class Similarity { SSD, LNCC };

    std::vector<int> levels{4, 2, 1};  // coarse-to-fine downsample factors
    int iterations_per_level = 50;
    double fluid_sigma = 2.0;      // update-field smoothing, voxels
    double diffusion_sigma = 1.5;  // total-field smoothing, voxels
    double step_scale = 0.5;       // max update magnitude per iteration, voxels
    Similarity similarity = Similarity::SSD;
    int lncc_window = 9;
    int bch_order = 1;  // composition order for folding updates into the SVF
    ExpConfig exp_cfg{2, 0.5};  // rough-and-fast warps inside the iteration

    void validate() const;
};

/// Per-level mean squared intensity residual, recorded before each update.
struct RegistrationTrace {
    std::vector<std::vector<double>> mse_per_level;
    double final_mean_abs_residual = 0.0;
};

/// Estimates the SVF v with warp(moving, exp(v)) ~ fixed by demons-style
/// iteration: similarity force, per-voxel step clamp, fluid smoothing,
/// BCH composition into v, diffusion smoothing, coarse-to-fine over
/// cfg.levels. Intensities are expected in [0,1]; out-of-range values warn
/// and proceed.
VectorField register_svf(const ScalarVolume &moving, const ScalarVolume &fixed,
                         const RegistrationConfig &cfg, RegistrationTrace *trace = nullptr);

/// Mean over voxels of the squared local correlation coefficient in
/// window^3 neighborhoods (clipped at the boundary). Locally constant
/// patches contribute 0 under the variance guard.
double lncc(const ScalarVolume &a, const ScalarVolume &b, int window);

/// Gaussian smoothing as 3 iterated box filters of matched variance,
/// replicate boundary. sigma in voxels; sigma <= 0 is the identity.
ScalarVolume gaussian_smooth(const ScalarVolume &v, double sigma);
VectorField gaussian_smooth(const VectorField &f, double sigma);

}  // namespace svfsyn

#endif
