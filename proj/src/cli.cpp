#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kinfit/features.hpp"
#include "kinfit/io.hpp"
#include "kinfit/robust.hpp"
#include "kinfit/synthetic.hpp"

namespace kinfit {

namespace {

Vec3 parse_vec3(const std::string& text) {
    std::istringstream ss(text);
    ss.imbue(std::locale::classic());
    Vec3 v;
    char comma;
    if (!(ss >> v.x() >> comma >> v.y() >> comma >> v.z()))
        throw CLI::ValidationError("expected 'x,y,z', got '" + text + "'");
    return v;
}

ShapeKind parse_shape(const std::string& name) {
    if (name == "cylinder") return ShapeKind::Cylinder;
    if (name == "cone") return ShapeKind::Cone;
    if (name == "sphere") return ShapeKind::Sphere;
    if (name == "straight-helix") return ShapeKind::StraightHelixTube;
    if (name == "log-spiral") return ShapeKind::LogSpiralTube;
    if (name == "bent-helix") return ShapeKind::BentHelixTube;
    if (name == "cylinder-outlier") return ShapeKind::CylinderOutlier;
    throw CLI::ValidationError("unknown shape '" + name + "'");
}

// Normalized-frame bounding box of the cloud, expanded by the given factor.
void cloud_bounds(const PointCloud& cloud, const NormalizationTransform& tf, double expand,
                  Vec3& lo, Vec3& hi) {
    cloud.bounds(lo, hi);
    lo = tf.to_normalized(lo);
    hi = tf.to_normalized(hi);
    const Vec3 mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    lo = mid - expand * half;
    hi = mid + expand * half;
}

struct SynthArgs {
    std::string shape = "cylinder";
    std::string out;
    ShapeSpec spec;
    bool with_outlier = false;
};

int cmd_synth(const SynthArgs& a) {
    ShapeSpec spec = a.spec;
    spec.kind = parse_shape(a.shape);
    PointCloud cloud = generate(spec);
    if (a.with_outlier) {
        ShapeSpec out_spec;
        out_spec.kind = ShapeKind::CylinderOutlier;
        out_spec.samples = std::max(100, spec.samples / 4);
        out_spec.radius = 0.3;
        out_spec.height = 1.5;
        out_spec.seed = spec.seed + 1;
        out_spec.noise_sigma = spec.noise_sigma;
        out_spec.offset = Vec3(1.6, 0.9, 0.4);
        out_spec.axis = Vec3(0.3, 0.2, 1.0);
        cloud = merge_with_outlier(cloud, generate(out_spec)).cloud;
    }
    save_cloud_xyzn(cloud, a.out);
    return 0;
}

struct FitArgs {
    std::string in, report, weights_out;
    int order = 1;
    bool robust = false;
    double wp = 0.001;
    int iters = 15;
};

int cmd_fit(const FitArgs& a) {
    const PointCloud cloud = load_cloud(a.in);
    FitConfig config;
    config.order = a.order == 1 ? FieldOrder::First : FieldOrder::Second;
    config.robust = a.robust;
    config.w_p = a.wp;
    config.iterations = a.iters;
    const FitReport report = fit(cloud, config);
    if (a.report.empty())
        std::cout << report_to_json(report);
    else
        write_report(report, a.report);
    if (!a.weights_out.empty()) {
        if (!report.weights) throw Error("--weights-out requires --robust");
        std::ofstream out(a.weights_out);
        if (!out) throw IoError("cannot write " + a.weights_out);
        out.imbue(std::locale::classic());
        out.precision(17);
        for (double z : *report.weights) out << z << '\n';
    }
    return 0;
}

struct StreamlineArgs {
    std::string model, in, out, seed, slab;
    double step = 1e-2;
    int steps = 5000;
    double thickness = 0.0;  // 0 means default (2% of bbox diagonal)
};

int cmd_streamline(const StreamlineArgs& a) {
    const FitReport report = read_report(a.model);
    StreamlineOptions opts;
    opts.step = a.step;
    opts.n_steps = a.steps;

    Vec3 seed_input;
    PointCloud cloud;
    if (!a.in.empty()) cloud = load_cloud(a.in);
    if (!a.seed.empty()) {
        seed_input = parse_vec3(a.seed);
    } else if (!a.slab.empty()) {
        if (cloud.empty()) throw Error("--slab needs --in to supply the cloud");
        std::istringstream ss(a.slab);
        ss.imbue(std::locale::classic());
        std::vector<double> vals;
        double x;
        char comma;
        while (ss >> x) {
            vals.push_back(x);
            ss >> comma;
        }
        if (vals.size() != 6) throw Error("--slab expects px,py,pz,nx,ny,nz");
        Vec3 lo, hi;
        cloud.bounds(lo, hi);
        const double thickness =
            a.thickness > 0.0 ? a.thickness : 0.02 * (hi - lo).norm();
        seed_input = select_seed(cloud, Vec3(vals[0], vals[1], vals[2]),
                                 Vec3(vals[3], vals[4], vals[5]), thickness);
    } else {
        throw Error("one of --seed or --slab is required");
    }

    if (!cloud.empty()) {
        // 4x the normalized cloud bounding box.
        cloud_bounds(cloud, report.transform, 4.0, opts.box_lo, opts.box_hi);
    }
    const Vec3 seed = report.transform.to_normalized(seed_input);
    const StreamlineResult result = streamline_integrate(report.params, seed, opts);
    export_polylines({result.line}, a.out, report.transform);
    return 0;
}

struct CorelineArgs {
    std::string model, in, out;
    std::string mode = "jerk";
    int res = 64;
    double strength = 0.0;
    double min_length = 0.0;
};

int cmd_coreline(const CorelineArgs& a) {
    const FitReport report = read_report(a.model);
    CoreLineConfig config;
    config.grid_resolution = a.res;
    config.strength_threshold = a.strength;
    config.min_length = a.min_length;
    if (a.mode == "jerk")
        config.mode = CoreLineMode::HigherOrderParallel;
    else if (a.mode == "jv")
        config.mode = CoreLineMode::FirstOrderParallel;
    else
        throw CLI::ValidationError("unknown mode '" + a.mode + "'");
    if (!a.in.empty())
        cloud_bounds(load_cloud(a.in), report.transform, 1.25, config.bounds_lo, config.bounds_hi);
    const auto lines = extract_core_lines(report.params, config);
    if (lines.empty()) {
        std::cerr << "no core lines found in bounds\n";
        // An empty result is valid; emit nothing but succeed.
        return 0;
    }
    export_polylines(lines, a.out, report.transform);
    return 0;
}

struct ClassifyArgs {
    std::vector<std::string> reports;
    std::string out;
};

int cmd_classify(const ClassifyArgs& a) {
    std::ostringstream csv;
    csv.imbue(std::locale::classic());
    csv.precision(12);
    csv << "file,proj_r_t,abs_proj_r_t\n";
    for (const auto& path : a.reports) {
        const FitReport report = read_report(path);
        const double metric = projection_metric(report.params);
        csv << path << ',' << metric << ',' << std::abs(metric) << '\n';
    }
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(a.out);
        if (!out) throw IoError("cannot write " + a.out);
        out << csv.str();
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Kinematic surface fitting: velocity fields, robust fits, symmetry features"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic oriented point cloud");
    s->add_option("--shape", synth.shape,
                  "cylinder|cone|sphere|straight-helix|log-spiral|bent-helix|cylinder-outlier");
    s->add_option("--samples", synth.spec.samples);
    s->add_option("--noise", synth.spec.noise_sigma);
    s->add_option("--rng-seed", synth.spec.seed);
    s->add_option("--radius", synth.spec.radius);
    s->add_option("--height", synth.spec.height);
    s->add_option("--tube-radius", synth.spec.tube_radius);
    s->add_option("--helix-radius", synth.spec.helix_radius);
    s->add_option("--pitch", synth.spec.pitch);
    s->add_option("--growth", synth.spec.growth_rate);
    s->add_option("--bend-radius", synth.spec.bend_radius);
    s->add_option("--turns", synth.spec.turns);
    s->add_flag("--with-outlier", synth.with_outlier, "append a cylindrical outlier cluster");
    s->add_option("--out", synth.out)->required();

    FitArgs fit_args;
    auto* f = app.add_subcommand("fit", "Fit a velocity field to an oriented point cloud");
    f->add_option("--in", fit_args.in)->required();
    f->add_option("--order", fit_args.order)->check(CLI::IsMember({1, 2}));
    f->add_flag("--robust", fit_args.robust);
    f->add_option("--wp", fit_args.wp);
    f->add_option("--iters", fit_args.iters);
    f->add_option("--report", fit_args.report);
    f->add_option("--weights-out", fit_args.weights_out);

    StreamlineArgs sl;
    auto* st = app.add_subcommand("streamline", "Integrate a streamline of a fitted field");
    st->add_option("--model", sl.model)->required();
    st->add_option("--in", sl.in, "cloud for slab seeding and integration bounds");
    st->add_option("--seed", sl.seed, "seed point 'x,y,z' in input units");
    st->add_option("--slab", sl.slab, "'px,py,pz,nx,ny,nz' cross-section plane");
    st->add_option("--thickness", sl.thickness);
    st->add_option("--step", sl.step);
    st->add_option("--steps", sl.steps);
    st->add_option("--out", sl.out)->required();

    CorelineArgs cl;
    auto* co = app.add_subcommand("coreline", "Extract core lines of a fitted field");
    co->add_option("--model", cl.model)->required();
    co->add_option("--in", cl.in, "cloud used to size the extraction bounds");
    co->add_option("--mode", cl.mode, "jerk (v || jerk) or jv (v || Jv)");
    co->add_option("--res", cl.res);
    co->add_option("--strength", cl.strength);
    co->add_option("--min-length", cl.min_length);
    co->add_option("--out", cl.out)->required();

    ClassifyArgs cf;
    auto* cc = app.add_subcommand("classify", "Tilt metric |proj_r t| from fit reports");
    cc->add_option("reports", cf.reports, "fit report JSON files")->required();
    cc->add_option("--out", cf.out, "CSV output path (default stdout)");

    try {
        app.parse(argc, argv);
        if (s->parsed()) return cmd_synth(synth);
        if (f->parsed()) return cmd_fit(fit_args);
        if (st->parsed()) return cmd_streamline(sl);
        if (co->parsed()) return cmd_coreline(cl);
        if (cc->parsed()) return cmd_classify(cf);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidSpec& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NoNormalsDerivable& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const EmptySlab& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const InsufficientPoints& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace kinfit
