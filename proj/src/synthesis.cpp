#include "svfsyn/synthesis.hpp"

#include <cmath>
#include <thread>

#include "svfsyn/lie.hpp"
#include "svfsyn/transport.hpp"

namespace svfsyn {

void CohortSchedule::validate() const {
    if (targets.empty()) throw io_error("CohortSchedule: targets must be non-empty");
    if (!std::isfinite(baseline_age)) throw io_error("CohortSchedule: baseline_age must be finite");
    for (const Target &t : targets)
        if (!std::isfinite(t.age)) throw io_error("CohortSchedule: target ages must be finite");
}

TemplateProvider phantom_template_provider(const GridGeometry &geom, double hc_ventricle_rate,
                                           double hc_hippocampus_rate, double ad_ventricle_rate,
                                           double ad_hippocampus_rate) {
    if (ad_ventricle_rate < hc_ventricle_rate)
        throw io_error("phantom_template_provider: AD ventricle rate must be >= HC rate");
    return [=](double age, Cohort cohort) {
        PhantomSpec spec = default_phantom_spec(geom, age, cohort);
        spec.ventricle_rate = cohort == Cohort::AD ? ad_ventricle_rate : hc_ventricle_rate;
        spec.hippocampus_rate = cohort == Cohort::AD ? ad_hippocampus_rate : hc_hippocampus_rate;
        return make_template(spec).image;
    };
}

namespace {

struct RegKey {
    double from_age;
    Cohort from_cohort;
    double to_age;
    Cohort to_cohort;
    auto operator<=>(const RegKey &) const = default;
};

// The SVF u with warp(from, exp(u)) ~ to, memoized across targets.
class TrajectoryRegistry {
public:
    TrajectoryRegistry(const TemplateProvider &templates, const RegistrationConfig &cfg)
        : templates_(templates), cfg_(cfg) {}

    const ScalarVolume &image(double age, Cohort cohort) {
        const auto key = std::make_pair(age, cohort);
        auto it = images_.find(key);
        if (it == images_.end()) it = images_.emplace(key, templates_(age, cohort)).first;
        return it->second;
    }

    const VectorField &svf(const RegKey &key) {
        auto it = svfs_.find(key);
        if (it == svfs_.end()) {
            const ScalarVolume &from = image(key.from_age, key.from_cohort);
            const ScalarVolume &to = image(key.to_age, key.to_cohort);
            it = svfs_.emplace(key, register_svf(from, to, cfg_)).first;
        }
        return it->second;
    }

private:
    const TemplateProvider &templates_;
    const RegistrationConfig &cfg_;
    std::map<std::pair<double, Cohort>, ScalarVolume> images_;
    std::map<RegKey, VectorField> svfs_;
};

// Trajectory SVF from the baseline template to target i, always measured
// from baseline. A cohort transition splits at the most recent preceding
// same-cohort target age and composes the two segments with BCH.
VectorField trajectory_svf(TrajectoryRegistry &reg, const CohortSchedule &schedule,
                           std::size_t target_index) {
    const auto &t = schedule.targets[target_index];
    const double t0 = schedule.baseline_age;
    const Cohort c0 = schedule.baseline_cohort;
    if (t.cohort == c0) return reg.svf({t0, c0, t.age, c0});

    double split_age = t0;
    for (std::size_t j = 0; j < target_index; ++j)
        if (schedule.targets[j].cohort == c0 && schedule.targets[j].age <= t.age)
            split_age = std::max(split_age, schedule.targets[j].age);

    const VectorField second = reg.svf({split_age, t.cohort, t.age, t.cohort});
    if (split_age == t0) return second;
    const VectorField first = reg.svf({t0, c0, split_age, c0});
    return bch(first, second, 2);
}

SynthesisResult run_pipeline(const ScalarVolume &subject_image, const ScalarVolume &subject_labels,
                             const CohortSchedule &schedule, const TemplateProvider &templates,
                             const RegistrationConfig &cfg, bool no_pt, int max_threads) {
    schedule.validate();
    if (!subject_labels.values.empty())
        require_same_geometry(subject_image.geom, subject_labels.geom, "synthesize");

    TrajectoryRegistry reg(templates, cfg);
    const ScalarVolume &T0 = reg.image(schedule.baseline_age, schedule.baseline_cohort);
    require_same_geometry(subject_image.geom, T0.geom, "synthesize");

    SynthesisResult result;
    result.no_pt = no_pt;
    result.template_to_subject = register_svf(T0, subject_image, cfg);

    // Shared registrations run (memoized) before the parallel stage.
    std::vector<VectorField> trajectories(schedule.targets.size());
    for (std::size_t i = 0; i < schedule.targets.size(); ++i)
        trajectories[i] = trajectory_svf(reg, schedule, i);

    result.targets.resize(schedule.targets.size());
    auto process = [&](std::size_t i) {
        SynthesisTarget &out = result.targets[i];
        out.age = schedule.targets[i].age;
        out.cohort = schedule.targets[i].cohort;
        if (no_pt) {
            out.transported_svf = std::move(trajectories[i]);
            out.ladder_steps = 0;
        } else {
            PoleLadderResult pl = pole_ladder(trajectories[i], result.template_to_subject);
            out.transported_svf = std::move(pl.transported);
            out.ladder_steps = pl.steps;
        }
        out.displacement = exp(out.transported_svf);  // full-accuracy integration
        out.min_jacobian = min_value(jacobian_determinant(out.displacement));
        out.flagged = !(out.min_jacobian > 0.0);
        out.image = warp(subject_image, out.displacement);
        if (!subject_labels.values.empty()) out.labels = warp(subject_labels, out.displacement);
    };

    const std::size_t n = result.targets.size();
    const std::size_t workers =
        std::min<std::size_t>(std::max(1, max_threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) process(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n; i += workers) process(i);
            });
        for (std::thread &th : pool) th.join();
    }
    return result;
}

}  // namespace

SynthesisResult synthesize(const ScalarVolume &subject_image, const ScalarVolume &subject_labels,
                           const CohortSchedule &schedule, const TemplateProvider &templates,
                           const RegistrationConfig &reg_cfg, int max_threads) {
    return run_pipeline(subject_image, subject_labels, schedule, templates, reg_cfg, false,
                        max_threads);
}

SynthesisResult synthesize_no_pt(const ScalarVolume &subject_image,
                                 const ScalarVolume &subject_labels,
                                 const CohortSchedule &schedule, const TemplateProvider &templates,
                                 const RegistrationConfig &reg_cfg, int max_threads) {
    return run_pipeline(subject_image, subject_labels, schedule, templates, reg_cfg, true,
                        max_threads);
}

std::vector<MetricReport> evaluate_against_truth(
    const SynthesisResult &result, const std::vector<ScalarVolume> &truth_images,
    const std::vector<ScalarVolume> &truth_labels,
    const std::map<std::string, std::vector<long>> &regions) {
    if (truth_images.size() != result.targets.size())
        throw io_error("evaluate_against_truth: one truth image per target required");
    if (!truth_labels.empty() && truth_labels.size() != result.targets.size())
        throw io_error("evaluate_against_truth: one truth label volume per target required");
    std::vector<MetricReport> reports;
    reports.reserve(result.targets.size());
    for (std::size_t i = 0; i < result.targets.size(); ++i) {
        const SynthesisTarget &t = result.targets[i];
        const bool with_labels = !truth_labels.empty() && !t.labels.values.empty();
        reports.push_back(full_report(t.image, truth_images[i],
                                      with_labels ? &t.labels : nullptr,
                                      with_labels ? &truth_labels[i] : nullptr,
                                      with_labels ? &regions : nullptr));
    }
    return reports;
}

}  // namespace svfsyn
