#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kinfit/features.hpp"
#include "kinfit/field.hpp"
#include "kinfit/fitting.hpp"
#include "kinfit/io.hpp"
#include "kinfit/synthetic.hpp"
#include "kinfit/types.hpp"

namespace py = pybind11;
using namespace kinfit;

namespace {

using Rows = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

PointCloud cloud_from_arrays(const Eigen::Ref<const Rows>& positions,
                             const Eigen::Ref<const Rows>& normals) {
    if (positions.rows() != normals.rows())
        throw py::value_error("positions and normals must have the same number of rows");
    PointCloud cloud;
    cloud.points.resize(std::size_t(positions.rows()));
    for (Eigen::Index i = 0; i < positions.rows(); ++i) {
        cloud.points[std::size_t(i)].position = positions.row(i).transpose();
        cloud.points[std::size_t(i)].normal = normals.row(i).transpose().normalized();
    }
    return cloud;
}

Rows positions_of(const PointCloud& cloud) {
    Rows out(Eigen::Index(cloud.size()), 3);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        out.row(Eigen::Index(i)) = cloud.points[i].position.transpose();
    return out;
}

Rows normals_of(const PointCloud& cloud) {
    Rows out(Eigen::Index(cloud.size()), 3);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        out.row(Eigen::Index(i)) = cloud.points[i].normal.transpose();
    return out;
}

Rows polyline_points(const Polyline& line) {
    Rows out(Eigen::Index(line.points.size()), 3);
    for (std::size_t i = 0; i < line.points.size(); ++i)
        out.row(Eigen::Index(i)) = line.points[i].transpose();
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Kinematic surface fitting: stationary velocity fields for oriented point clouds";

    py::register_exception<Error>(mod, "KinfitError", PyExc_RuntimeError);

    py::enum_<FieldOrder>(mod, "FieldOrder")
        .value("FIRST", FieldOrder::First)
        .value("SECOND", FieldOrder::Second);

    py::enum_<PolylineKind>(mod, "PolylineKind")
        .value("STREAMLINE", PolylineKind::Streamline)
        .value("AXIS", PolylineKind::Axis)
        .value("CORE_LINE", PolylineKind::CoreLine);

    py::enum_<HaltReason>(mod, "HaltReason")
        .value("COMPLETED", HaltReason::Completed)
        .value("CONVERGED", HaltReason::Converged)
        .value("LEFT_BOUNDS", HaltReason::LeftBounds);

    py::enum_<CoreLineMode>(mod, "CoreLineMode")
        .value("FIRST_ORDER_PARALLEL", CoreLineMode::FirstOrderParallel)
        .value("HIGHER_ORDER_PARALLEL", CoreLineMode::HigherOrderParallel);

    py::enum_<ShapeKind>(mod, "ShapeKind")
        .value("CYLINDER", ShapeKind::Cylinder)
        .value("CONE", ShapeKind::Cone)
        .value("SPHERE", ShapeKind::Sphere)
        .value("STRAIGHT_HELIX_TUBE", ShapeKind::StraightHelixTube)
        .value("LOG_SPIRAL_TUBE", ShapeKind::LogSpiralTube)
        .value("BENT_HELIX_TUBE", ShapeKind::BentHelixTube)
        .value("CYLINDER_OUTLIER", ShapeKind::CylinderOutlier);

    py::class_<FieldParams>(mod, "FieldParams")
        .def(py::init<>())
        .def_readwrite("order", &FieldParams::order)
        .def_readwrite("t", &FieldParams::t)
        .def_readwrite("r", &FieldParams::r)
        .def_readwrite("c", &FieldParams::c)
        .def_readwrite("gamma", &FieldParams::gamma)
        .def("dim", &FieldParams::dim)
        .def("flat", &FieldParams::flat)
        .def_static("from_flat", &FieldParams::from_flat, py::arg("m"), py::arg("order"))
        .def("__repr__", [](const FieldParams& m) {
            return "FieldParams(order=" +
                   std::string(m.order == FieldOrder::First ? "FIRST" : "SECOND") +
                   ", gamma=" + std::to_string(m.gamma) + ")";
        });

    py::class_<NormalizationTransform>(mod, "NormalizationTransform")
        .def(py::init<>())
        .def_readwrite("centroid", &NormalizationTransform::centroid)
        .def_readwrite("scale", &NormalizationTransform::scale)
        .def("to_normalized", &NormalizationTransform::to_normalized)
        .def("to_input", &NormalizationTransform::to_input);

    py::class_<PointCloud>(mod, "PointCloud")
        .def(py::init<>())
        .def(py::init(&cloud_from_arrays), py::arg("positions"), py::arg("normals"))
        .def("__len__", &PointCloud::size)
        .def_property_readonly("positions", &positions_of)
        .def_property_readonly("normals", &normals_of);

    py::class_<Polyline>(mod, "Polyline")
        .def_property_readonly("points", &polyline_points)
        .def_readonly("kind", &Polyline::kind)
        .def("arc_length", &Polyline::arc_length);

    // --- field evaluation ---------------------------------------------------
    mod.def("eval_velocity", &eval_velocity, py::arg("p"), py::arg("m"));
    mod.def("velocity_jacobian", &velocity_jacobian, py::arg("p"), py::arg("m"));
    mod.def("jerk", &jerk, py::arg("p"), py::arg("m"));
    mod.def("swirl_strength", &swirl_strength, py::arg("p"), py::arg("m"));
    mod.def("projection_metric", &projection_metric, py::arg("m"));
    mod.def("convergence_point_first_order", &convergence_point_first_order, py::arg("m"),
            py::arg("gamma_tol") = 1e-9);
    mod.def(
        "convergence_point_second_order",
        [](const FieldParams& m, const std::vector<Vec3>& seeds, double eps) {
            const auto result = convergence_point_second_order(m, seeds, eps);
            return py::make_tuple(result.point, result.best_residual);
        },
        py::arg("m"), py::arg("seeds"), py::arg("eps_conv") = 1e-8,
        "Returns (point or None, best residual).");
    mod.def("recenter_first_order", &recenter_first_order, py::arg("m"), py::arg("p0"),
            py::arg("tol") = 1e-8);
    mod.def("symmetry_axis_first_order", &symmetry_axis_first_order, py::arg("m"),
            "Returns (point on axis, unit direction).");

    // --- streamlines --------------------------------------------------------
    py::class_<StreamlineOptions>(mod, "StreamlineOptions")
        .def(py::init<>())
        .def_readwrite("step", &StreamlineOptions::step)
        .def_readwrite("n_steps", &StreamlineOptions::n_steps)
        .def_readwrite("eps_conv", &StreamlineOptions::eps_conv)
        .def_readwrite("box_lo", &StreamlineOptions::box_lo)
        .def_readwrite("box_hi", &StreamlineOptions::box_hi);

    py::class_<StreamlineResult>(mod, "StreamlineResult")
        .def_readonly("line", &StreamlineResult::line)
        .def_readonly("halt", &StreamlineResult::halt)
        .def_readonly("steps_taken", &StreamlineResult::steps_taken);

    mod.def("streamline_integrate", &streamline_integrate, py::arg("m"), py::arg("seed"),
            py::arg("options") = StreamlineOptions{});
    mod.def("streamline_closed_form", &streamline_closed_form, py::arg("m"), py::arg("seed"),
            py::arg("u"));

    // --- fitting ------------------------------------------------------------
    py::class_<FitConfig>(mod, "FitConfig")
        .def(py::init<>())
        .def_readwrite("order", &FitConfig::order)
        .def_readwrite("w_p", &FitConfig::w_p)
        .def_readwrite("iterations", &FitConfig::iterations)
        .def_readwrite("robust", &FitConfig::robust)
        .def_readwrite("eig_tolerance", &FitConfig::eig_tolerance)
        .def_readwrite("nu_bracket", &FitConfig::nu_bracket);

    py::class_<FitReport>(mod, "FitReport")
        .def_readonly("params", &FitReport::params)
        .def_readonly("rmse", &FitReport::rmse)
        .def_readonly("eigenvalue", &FitReport::eigenvalue)
        .def_readonly("nu", &FitReport::nu)
        .def_readonly("sigma", &FitReport::sigma)
        .def_readonly("weights", &FitReport::weights)
        .def_readonly("inlier_rmse", &FitReport::inlier_rmse)
        .def_readonly("transform", &FitReport::transform)
        .def_readonly("iterations_run", &FitReport::iterations_run)
        .def_readonly("objective_history", &FitReport::objective_history)
        .def("to_json", &report_to_json);

    mod.def("fit", &fit, py::arg("cloud"), py::arg("config") = FitConfig{},
            py::call_guard<py::gil_scoped_release>());
    mod.def("distance", &distance, py::arg("point"), py::arg("m"), py::arg("w_p") = 0.001);

    // --- features -----------------------------------------------------------
    py::class_<CoreLineConfig>(mod, "CoreLineConfig")
        .def(py::init<>())
        .def_readwrite("grid_resolution", &CoreLineConfig::grid_resolution)
        .def_readwrite("bounds_lo", &CoreLineConfig::bounds_lo)
        .def_readwrite("bounds_hi", &CoreLineConfig::bounds_hi)
        .def_readwrite("strength_threshold", &CoreLineConfig::strength_threshold)
        .def_readwrite("min_length", &CoreLineConfig::min_length)
        .def_readwrite("mode", &CoreLineConfig::mode);

    mod.def("extract_core_lines", &extract_core_lines, py::arg("m"),
            py::arg("config") = CoreLineConfig{}, py::call_guard<py::gil_scoped_release>());

    mod.def(
        "classify_critical_point",
        [](const Vec3& p0, const FieldParams& m, double eps) {
            const auto info = classify_critical_point(p0, m, eps);
            return py::make_tuple(std::string(to_string(info.cls)), info.eigenvalues);
        },
        py::arg("p0"), py::arg("m"), py::arg("eps_conv") = 1e-8,
        "Returns (class name, Jacobian eigenvalues).");

    // --- synthetic fixtures -------------------------------------------------
    py::class_<ShapeSpec>(mod, "ShapeSpec")
        .def(py::init<>())
        .def_readwrite("kind", &ShapeSpec::kind)
        .def_readwrite("samples", &ShapeSpec::samples)
        .def_readwrite("noise_sigma", &ShapeSpec::noise_sigma)
        .def_readwrite("seed", &ShapeSpec::seed)
        .def_readwrite("radius", &ShapeSpec::radius)
        .def_readwrite("height", &ShapeSpec::height)
        .def_readwrite("half_angle", &ShapeSpec::half_angle)
        .def_readwrite("tube_radius", &ShapeSpec::tube_radius)
        .def_readwrite("helix_radius", &ShapeSpec::helix_radius)
        .def_readwrite("pitch", &ShapeSpec::pitch)
        .def_readwrite("growth_rate", &ShapeSpec::growth_rate)
        .def_readwrite("bend_radius", &ShapeSpec::bend_radius)
        .def_readwrite("turns", &ShapeSpec::turns)
        .def_readwrite("offset", &ShapeSpec::offset)
        .def_readwrite("axis", &ShapeSpec::axis);

    mod.def("generate", &generate, py::arg("spec"));
    mod.def(
        "merge_with_outlier",
        [](const PointCloud& base, const PointCloud& outlier) {
            const LabeledCloud merged = merge_with_outlier(base, outlier);
            return py::make_tuple(merged.cloud, merged.inlier);
        },
        py::arg("base"), py::arg("outlier"), "Returns (cloud, inlier labels).");

    // --- io -----------------------------------------------------------------
    py::enum_<CloudFormat>(mod, "CloudFormat")
        .value("AUTO", CloudFormat::Auto)
        .value("OBJ", CloudFormat::OBJ)
        .value("PLY_ASCII", CloudFormat::PLY_ASCII)
        .value("XYZN", CloudFormat::XYZN);

    mod.def(
        "load_cloud",
        [](const std::filesystem::path& path, CloudFormat format) {
            return load_cloud(path, format);
        },
        py::arg("path"), py::arg("format") = CloudFormat::Auto);
    mod.def("save_cloud_xyzn", &save_cloud_xyzn, py::arg("cloud"), py::arg("path"));
    mod.def("select_seed", &select_seed, py::arg("cloud"), py::arg("plane_point"),
            py::arg("plane_normal"), py::arg("thickness"));
    mod.def("export_polylines", &export_polylines, py::arg("lines"), py::arg("path"),
            py::arg("frame") = NormalizationTransform{});
    mod.def("import_polylines", &import_polylines, py::arg("path"));
    mod.def("write_report", &write_report, py::arg("report"), py::arg("path"));
    mod.def("read_report", &read_report, py::arg("path"));
    mod.def("report_to_json", &report_to_json, py::arg("report"));
}
