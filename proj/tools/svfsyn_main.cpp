// svfsyn - stationary-velocity-field deformation toolkit and longitudinal
// synthesis pipeline. Every subcommand is a thin shell over one library
// operation; see README.md for the runspec layout.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "svfsyn/grid.hpp"
#include "svfsyn/lie.hpp"
#include "svfsyn/metrics.hpp"
#include "svfsyn/phantom.hpp"
#include "svfsyn/registration.hpp"
#include "svfsyn/synthesis.hpp"
#include "svfsyn/transport.hpp"
#include "svfsyn/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace svfsyn;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;

[[noreturn]] void fail(int code, const char *category, const std::string &msg) {
    std::fprintf(stderr, "%s: %s\n", category, msg.c_str());
    std::exit(code);
}

int env_thread_cap() {
    const char *cap = std::getenv("SVFSYN_THREADS");
    if (!cap) return 1;
    const int n = std::atoi(cap);
    return n > 0 ? n : 1;
}

std::uint64_t fnv1a64(const std::string &s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

json load_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception &e) {
        throw io_error("bad JSON in '" + path + "': " + e.what());
    }
}

RegistrationConfig registration_config_from_json(const json &j) {
    RegistrationConfig cfg;
    if (j.contains("levels")) cfg.levels = j["levels"].get<std::vector<int>>();
    if (j.contains("iterations_per_level"))
        cfg.iterations_per_level = j["iterations_per_level"].get<int>();
    if (j.contains("fluid_sigma")) cfg.fluid_sigma = j["fluid_sigma"].get<double>();
    if (j.contains("diffusion_sigma")) cfg.diffusion_sigma = j["diffusion_sigma"].get<double>();
    if (j.contains("step_scale")) cfg.step_scale = j["step_scale"].get<double>();
    if (j.contains("similarity")) {
        const std::string s = j["similarity"].get<std::string>();
        if (s == "ssd" || s == "SSD")
            cfg.similarity = RegistrationConfig::Similarity::SSD;
        else if (s == "lncc" || s == "LNCC")
            cfg.similarity = RegistrationConfig::Similarity::LNCC;
        else
            throw io_error("registration.similarity must be 'ssd' or 'lncc'");
    }
    if (j.contains("lncc_window")) cfg.lncc_window = j["lncc_window"].get<int>();
    if (j.contains("bch_order")) cfg.bch_order = j["bch_order"].get<int>();
    if (j.contains("min_scaling_steps"))
        cfg.exp_cfg.min_scaling_steps = j["min_scaling_steps"].get<int>();
    if (j.contains("max_step_displacement"))
        cfg.exp_cfg.max_step_displacement = j["max_step_displacement"].get<double>();
    cfg.validate();
    return cfg;
}

GridGeometry geometry_from_json(const json &j) {
    GridGeometry g;
    for (int a = 0; a < 3; ++a) g.dims[a] = j.at("dims").at(a).get<int>();
    if (j.contains("spacing"))
        for (int a = 0; a < 3; ++a) g.spacing[a] = j["spacing"].at(a).get<double>();
    if (j.contains("origin"))
        for (int a = 0; a < 3; ++a) g.origin[a] = j["origin"].at(a).get<double>();
    g.validate();
    return g;
}

std::string format_age(double age) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", age);
    return buf;
}

// ---- phantom ----------------------------------------------------------

int cmd_phantom(const std::vector<int> &dims, const std::vector<double> &spacing, double age,
                const std::string &cohort, double vent_rate, double hip_rate,
                std::optional<std::uint64_t> seed, const std::vector<double> &marker,
                const std::string &out_dir) {
    GridGeometry geom = make_geometry(dims[0], dims[1], dims[2], spacing[0], spacing[1], spacing[2]);
    PhantomSpec spec = default_phantom_spec(geom, age, cohort_from_name(cohort));
    if (vent_rate >= 0.0) spec.ventricle_rate = vent_rate;
    if (hip_rate >= 0.0) spec.hippocampus_rate = hip_rate;
    if (!marker.empty()) {
        if (marker.size() != 4) throw io_error("--marker expects x,y,z,r");
        spec.marker = {marker[0], marker[1], marker[2], marker[3]};
    }
    PhantomVolumes vols;
    if (seed) {
        spec.seed = *seed;
        vols = make_subject(spec);
    } else {
        vols = make_template(spec);
    }
    fs::create_directories(out_dir);
    write_volume(vols.image, (fs::path(out_dir) / "image.nii").string());
    write_volume(vols.labels, (fs::path(out_dir) / "labels.nii").string());
    return 0;
}

// ---- synthesize -------------------------------------------------------

struct RunSpec {
    std::string subject_image;
    std::string subject_labels;  // optional
    CohortSchedule schedule;
    RegistrationConfig reg_cfg;
    TemplateProvider provider;
    std::string output_dir;
    bool no_pt = false;
    std::string canonical;  // re-serialized spec for the config hash
};

RunSpec parse_runspec(const std::string &path) {
    const json j = load_json_file(path);
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string &p) {
        return fs::path(p).is_absolute() ? p : (base / p).string();
    };

    RunSpec rs;
    try {
        rs.subject_image = resolve(j.at("subject_image").get<std::string>());
        if (j.contains("subject_labels"))
            rs.subject_labels = resolve(j["subject_labels"].get<std::string>());

        const json &sched = j.at("schedule");
        rs.schedule.baseline_age = sched.at("baseline_age").get<double>();
        rs.schedule.baseline_cohort =
            cohort_from_name(sched.at("baseline_cohort").get<std::string>());
        for (const json &t : sched.at("targets"))
            rs.schedule.targets.push_back(
                {t.at("age").get<double>(), cohort_from_name(t.at("cohort").get<std::string>())});
        rs.schedule.validate();

        rs.reg_cfg = j.contains("registration")
                         ? registration_config_from_json(j["registration"])
                         : RegistrationConfig{};

        const json &tj = j.at("templates");
        const std::string type = tj.at("type").get<std::string>();
        if (type == "phantom") {
            const GridGeometry geom = geometry_from_json(tj);
            double hv = 0.04, hh = 0.01, av = 0.10, ah = 0.03;
            if (tj.contains("hc")) {
                hv = tj["hc"].value("ventricle_rate", hv);
                hh = tj["hc"].value("hippocampus_rate", hh);
            }
            if (tj.contains("ad")) {
                av = tj["ad"].value("ventricle_rate", av);
                ah = tj["ad"].value("hippocampus_rate", ah);
            }
            rs.provider = phantom_template_provider(geom, hv, hh, av, ah);
        } else if (type == "directory") {
            const std::string dir = resolve(tj.at("path").get<std::string>());
            rs.provider = [dir](double age, Cohort cohort) {
                const std::string file =
                    (fs::path(dir) / (std::string(cohort_name(cohort)) + "_" + format_age(age) +
                                      ".nii"))
                        .string();
                return read_scalar(file);
            };
        } else {
            throw io_error("templates.type must be 'phantom' or 'directory'");
        }

        rs.output_dir = resolve(j.at("output_dir").get<std::string>());
        rs.no_pt = j.value("no_pt", false);
    } catch (const json::exception &e) {
        throw io_error("runspec '" + path + "': " + e.what());
    }
    rs.canonical = j.dump();
    return rs;
}

int cmd_synthesize(const std::string &spec_path, bool no_pt_flag, bool strict) {
    RunSpec rs = parse_runspec(spec_path);
    if (no_pt_flag) rs.no_pt = true;

    const ScalarVolume subject = read_scalar(rs.subject_image);
    ScalarVolume subject_labels;
    if (!rs.subject_labels.empty()) subject_labels = read_scalar(rs.subject_labels);

    const int threads = env_thread_cap();
    const SynthesisResult result =
        rs.no_pt ? synthesize_no_pt(subject, subject_labels, rs.schedule, rs.provider, rs.reg_cfg,
                                    threads)
                 : synthesize(subject, subject_labels, rs.schedule, rs.provider, rs.reg_cfg,
                              threads);

    fs::create_directories(rs.output_dir);
    const fs::path out(rs.output_dir);
    write_field(result.template_to_subject, VolumeKind::svf,
                (out / "template_to_subject_svf.nii").string());

    json manifest;
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(rs.canonical)));
    manifest["config_hash"] = hash_buf;
    manifest["no_pt"] = rs.no_pt;
    manifest["targets"] = json::array();

    bool any_flagged = false;
    for (std::size_t i = 0; i < result.targets.size(); ++i) {
        const SynthesisTarget &t = result.targets[i];
        char prefix[32];
        std::snprintf(prefix, sizeof(prefix), "target_%03zu", i);
        const std::string image_file = std::string(prefix) + "_image.nii";
        const std::string svf_file = std::string(prefix) + "_svf.nii";
        const std::string disp_file = std::string(prefix) + "_disp.nii";
        write_volume(t.image, (out / image_file).string());
        write_field(t.transported_svf, VolumeKind::svf, (out / svf_file).string());
        write_field(t.displacement, VolumeKind::displacement, (out / disp_file).string());
        json tj;
        tj["age"] = t.age;
        tj["cohort"] = cohort_name(t.cohort);
        tj["ladder_steps"] = t.ladder_steps;
        tj["min_jacobian"] = t.min_jacobian;
        tj["flagged"] = t.flagged;
        tj["image"] = image_file;
        tj["svf"] = svf_file;
        tj["displacement"] = disp_file;
        if (!t.labels.values.empty()) {
            const std::string labels_file = std::string(prefix) + "_labels.nii";
            write_volume(t.labels, (out / labels_file).string());
            tj["labels"] = labels_file;
        }
        manifest["targets"].push_back(tj);
        any_flagged = any_flagged || t.flagged;
    }

    std::ofstream mf(out / "manifest.json");
    mf << manifest.dump(2) << "\n";
    if (!mf) throw io_error("failed writing manifest.json");

    if (any_flagged) {
        std::fprintf(stderr, "synthesize: %s target(s) flagged with non-positive Jacobian\n",
                     strict ? "aborting," : "completed with");
        if (strict) return kExitNumeric;
    }
    return 0;
}

// ---- metrics ----------------------------------------------------------

int cmd_metrics(const std::string &pred, const std::string &truth, const std::string &pred_labels,
                const std::string &truth_labels, const std::string &regions_file,
                const std::string &out_path) {
    const ScalarVolume p = read_scalar(pred);
    const ScalarVolume t = read_scalar(truth);
    std::optional<ScalarVolume> pl, tl;
    if (!pred_labels.empty() != !truth_labels.empty())
        throw io_error("metrics: --pred-labels and --truth-labels must be given together");
    if (!pred_labels.empty()) {
        pl = read_scalar(pred_labels);
        tl = read_scalar(truth_labels);
    }
    std::map<std::string, std::vector<long>> regions;
    if (!regions_file.empty()) {
        const json j = load_json_file(regions_file);
        for (const auto &[name, labels] : j.items())
            regions[name] = labels.get<std::vector<long>>();
    }
    const MetricReport report =
        full_report(p, t, pl ? &*pl : nullptr, tl ? &*tl : nullptr,
                    regions.empty() ? nullptr : &regions);
    std::ofstream out(out_path);
    if (!out) throw io_error("cannot open '" + out_path + "' for writing");
    out << report.to_json() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"svfsyn: SVF diffeomorphisms, pole-ladder transport, and longitudinal synthesis"};
    app.require_subcommand(1);

    // phantom
    auto *phantom = app.add_subcommand("phantom", "generate an analytic template or subject");
    std::vector<int> ph_dims{64, 64, 64};
    std::vector<double> ph_spacing{1.0, 1.0, 1.0};
    double ph_age = 60.0;
    std::string ph_cohort = "hc";
    double ph_vent_rate = -1.0, ph_hip_rate = -1.0;
    std::optional<std::uint64_t> ph_seed;
    std::vector<double> ph_marker;
    std::string ph_out;
    phantom->add_option("--dims", ph_dims, "grid size nx,ny,nz")->expected(3);
    phantom->add_option("--spacing", ph_spacing, "voxel spacing in mm")->expected(3);
    phantom->add_option("--age", ph_age, "age in years [60,90]")->required();
    phantom->add_option("--cohort", ph_cohort, "hc or ad")->required();
    phantom->add_option("--vent-rate", ph_vent_rate, "override ventricle growth rate (voxels/year)");
    phantom->add_option("--hip-rate", ph_hip_rate, "override hippocampus shrink rate (voxels/year)");
    phantom->add_option("--subject-seed", ph_seed, "individuation seed; makes a subject");
    phantom->add_option("--marker", ph_marker, "subject marker blob x,y,z,r (voxels)")->expected(4);
    phantom->add_option("--out", ph_out, "output directory")->required();

    // register
    auto *reg = app.add_subcommand("register", "estimate the SVF aligning moving to fixed");
    std::string rg_moving, rg_fixed, rg_config, rg_out;
    reg->add_option("--moving", rg_moving)->required();
    reg->add_option("--fixed", rg_fixed)->required();
    reg->add_option("--config", rg_config, "RegistrationConfig JSON (defaults when omitted)");
    reg->add_option("--out-svf", rg_out)->required();

    // exp
    auto *exp_cmd = app.add_subcommand("exp", "integrate an SVF into a displacement");
    std::string ex_svf, ex_out;
    bool ex_inverse = false;
    int ex_min_steps = 7;
    double ex_max_step = 0.5;
    exp_cmd->add_option("--svf", ex_svf)->required();
    exp_cmd->add_option("--out", ex_out)->required();
    exp_cmd->add_flag("--inverse", ex_inverse, "integrate -v instead");
    exp_cmd->add_option("--min-steps", ex_min_steps, "floor on squaring count");
    exp_cmd->add_option("--max-step", ex_max_step, "max per-step displacement in voxels");

    // transport
    auto *tr = app.add_subcommand("transport", "pole-ladder transport of u along v");
    std::string tr_u, tr_v, tr_out;
    bool tr_oracle = false;
    tr->add_option("--u", tr_u, "SVF to transport")->required();
    tr->add_option("--v", tr_v, "SVF to transport along")->required();
    tr->add_option("--out", tr_out)->required();
    tr->add_flag("--oracle", tr_oracle, "emit the conjugation-route displacement instead");

    // warp
    auto *wp = app.add_subcommand("warp", "apply a displacement to a volume");
    std::string wp_image, wp_disp, wp_out;
    bool wp_labels = false;
    wp->add_option("--image", wp_image)->required();
    wp->add_option("--disp", wp_disp)->required();
    wp->add_option("--out", wp_out)->required();
    wp->add_flag("--labels", wp_labels, "force nearest-neighbor label resampling");

    // synthesize
    auto *sy = app.add_subcommand("synthesize", "run the full pipeline from a runspec");
    std::string sy_spec;
    bool sy_no_pt = false, sy_strict = false;
    sy->add_option("--spec", sy_spec, "runspec JSON")->required();
    sy->add_flag("--no-pt", sy_no_pt, "ablation: skip parallel transport");
    sy->add_flag("--strict", sy_strict, "exit 4 when any target folds (min Jacobian <= 0)");

    // metrics
    auto *mt = app.add_subcommand("metrics", "similarity report for a predicted/truth pair");
    std::string mt_pred, mt_truth, mt_pred_labels, mt_truth_labels, mt_regions, mt_out;
    mt->add_option("--pred", mt_pred)->required();
    mt->add_option("--truth", mt_truth)->required();
    mt->add_option("--pred-labels", mt_pred_labels);
    mt->add_option("--truth-labels", mt_truth_labels);
    mt->add_option("--regions", mt_regions, "JSON map of region name -> label list");
    mt->add_option("--out", mt_out, "report JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::fprintf(stderr, "E_USAGE: %s\n", e.what());
        return kExitUsage;
    }

    try {
        if (*phantom)
            return cmd_phantom(ph_dims, ph_spacing, ph_age, ph_cohort, ph_vent_rate, ph_hip_rate,
                               ph_seed, ph_marker, ph_out);
        if (*reg) {
            RegistrationConfig cfg;
            if (!rg_config.empty()) cfg = registration_config_from_json(load_json_file(rg_config));
            const ScalarVolume moving = read_scalar(rg_moving);
            const ScalarVolume fixed = read_scalar(rg_fixed);
            write_field(register_svf(moving, fixed, cfg), VolumeKind::svf, rg_out);
            return 0;
        }
        if (*exp_cmd) {
            ExpConfig cfg{ex_min_steps, ex_max_step};
            VectorField v = read_field(ex_svf);
            if (ex_inverse) v = scaled(v, -1.0);
            write_field(exp(v, cfg), VolumeKind::displacement, ex_out);
            return 0;
        }
        if (*tr) {
            const VectorField u = read_field(tr_u);
            const VectorField v = read_field(tr_v);
            if (tr_oracle)
                write_field(conjugation_oracle(u, v), VolumeKind::displacement, tr_out);
            else
                write_field(pole_ladder(u, v).transported, VolumeKind::svf, tr_out);
            return 0;
        }
        if (*wp) {
            ScalarVolume image = read_scalar(wp_image);
            if (wp_labels) image.labels = true;
            const VectorField disp = read_field(wp_disp);
            write_volume(warp(image, disp), wp_out);
            return 0;
        }
        if (*sy) return cmd_synthesize(sy_spec, sy_no_pt, sy_strict);
        if (*mt)
            return cmd_metrics(mt_pred, mt_truth, mt_pred_labels, mt_truth_labels, mt_regions,
                               mt_out);
    } catch (const numeric_error &e) {
        fail(kExitNumeric, "E_NUMERIC", e.what());
    } catch (const io_error &e) {
        fail(kExitFormat, "E_FORMAT", e.what());
    } catch (const std::exception &e) {
        fail(kExitFormat, "E_FORMAT", e.what());
    }
    return kExitUsage;
}
