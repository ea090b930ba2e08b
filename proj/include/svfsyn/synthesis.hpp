#ifndef SVFSYN_SYNTHESIS_HPP
#define SVFSYN_SYNTHESIS_HPP

#include <functional>
#include <map>
#include <vector>

#include "svfsyn/grid.hpp"
#include "svfsyn/metrics.hpp"
#include "svfsyn/phantom.hpp"
#include "svfsyn/registration.hpp"

namespace svfsyn {

/// Ordered synthesis targets. A transition is any target whose cohort
/// differs from baseline_cohort; its trajectory composes the baseline-cohort
/// segment up to the most recent same-cohort target age (or baseline_age)
/// with the target-cohort segment from there on.
struct CohortSchedule {
    double baseline_age = 60.0;
    Cohort baseline_cohort = Cohort::HC;
    struct Target {
        double age = 60.0;
        Cohort cohort = Cohort::HC;
    };
    std::vector<Target> targets;

    void validate() const;
};

/// Supplies the cohort template image for a requested (age, cohort).
using TemplateProvider = std::function<ScalarVolume(double age, Cohort cohort)>;

/// Phantom-backed provider with per-cohort rates.
TemplateProvider phantom_template_provider(const GridGeometry &geom, double hc_ventricle_rate = 0.04,
                                           double hc_hippocampus_rate = 0.01,
                                           double ad_ventricle_rate = 0.10,
                                           double ad_hippocampus_rate = 0.03);

struct SynthesisTarget {
    double age = 0.0;
    Cohort cohort = Cohort::HC;
    ScalarVolume image;
    ScalarVolume labels;
    VectorField transported_svf;  // the SVF actually integrated (transported, or raw under no-PT)
    VectorField displacement;
    double min_jacobian = 0.0;
    int ladder_steps = 0;  // 0 under the no-PT ablation
    bool flagged = false;  // min_jacobian <= 0
};

struct SynthesisResult {
    VectorField template_to_subject;  // v
    std::vector<SynthesisTarget> targets;
    bool no_pt = false;
};

/// Full pipeline: age-matched template, template-to-subject SVF, per-target
/// template trajectory SVFs, pole-ladder transport, integration, warping.
/// Targets with non-positive Jacobian determinant are flagged and kept.
/// max_threads > 1 parallelizes the per-target stage after the shared
/// registrations complete (bit-deterministic either way).
SynthesisResult synthesize(const ScalarVolume &subject_image, const ScalarVolume &subject_labels,
                           const CohortSchedule &schedule, const TemplateProvider &templates,
                           const RegistrationConfig &reg_cfg, int max_threads = 1);

/// Ablation: applies the cohort-level exp(u_i) directly to the subject,
/// skipping parallel transport.
SynthesisResult synthesize_no_pt(const ScalarVolume &subject_image,
                                 const ScalarVolume &subject_labels,
                                 const CohortSchedule &schedule, const TemplateProvider &templates,
                                 const RegistrationConfig &reg_cfg, int max_threads = 1);

/// One MetricReport per target against the matching ground-truth volumes.
std::vector<MetricReport> evaluate_against_truth(
    const SynthesisResult &result, const std::vector<ScalarVolume> &truth_images,
    const std::vector<ScalarVolume> &truth_labels,
    const std::map<std::string, std::vector<long>> &regions);

}  // namespace svfsyn

#endif
