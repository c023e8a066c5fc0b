#include <doctest.h>

#include <random>

#include "kinfit/features.hpp"
#include "kinfit/fitting.hpp"
#include "kinfit/synthetic.hpp"
#include "test_util.hpp"

using namespace kinfit;

TEST_CASE("critical point classification") {
    SUBCASE("pure contraction is a sink") {
        FieldParams m;
        m.order = FieldOrder::First;
        m.r = Vec3::Zero();
        m.c = Vec3::Zero();
        m.gamma = -1.0;
        const CriticalPointInfo info = classify_critical_point(Vec3::Zero(), m);
        CHECK(info.cls == CriticalPointClass::Sink);
        for (const auto& ev : info.eigenvalues) {
            CHECK(ev.real() == doctest::Approx(-1.0));
            CHECK(ev.imag() == doctest::Approx(0.0));
        }
    }

    SUBCASE("rotation with contraction is a spiral sink") {
        FieldParams m;
        m.order = FieldOrder::First;
        m.r = Vec3(0, 0, 1);
        m.c = Vec3::Zero();
        m.gamma = -0.1;
        const CriticalPointInfo info = classify_critical_point(Vec3::Zero(), m);
        CHECK(info.cls == CriticalPointClass::SpiralSink);
        // Eigenvalues of the rotation+scaling Jacobian: -0.1 +- i and -0.1.
        int complex_count = 0;
        for (const auto& ev : info.eigenvalues) {
            CHECK(ev.real() == doctest::Approx(-0.1));
            if (std::abs(ev.imag()) > 1e-9) {
                ++complex_count;
                CHECK(std::abs(ev.imag()) == doctest::Approx(1.0));
            }
        }
        CHECK(complex_count == 2);
    }

    SUBCASE("expansion variants") {
        FieldParams m;
        m.order = FieldOrder::First;
        m.r = Vec3(0, 0, 1);
        m.c = Vec3::Zero();
        m.gamma = 0.1;
        CHECK(classify_critical_point(Vec3::Zero(), m).cls == CriticalPointClass::SpiralSource);
        m.r = Vec3::Zero();
        CHECK(classify_critical_point(Vec3::Zero(), m).cls == CriticalPointClass::Source);
    }

    SUBCASE("pure rotation is degenerate") {
        FieldParams m;
        m.order = FieldOrder::First;
        m.r = Vec3(0, 0, 1);
        m.c = Vec3::Zero();
        m.gamma = 0.0;
        CHECK(classify_critical_point(Vec3::Zero(), m).cls == CriticalPointClass::Degenerate);
    }

    SUBCASE("non-critical point is rejected") {
        FieldParams m;
        m.order = FieldOrder::First;
        m.r = Vec3(0, 0, 1);
        m.c = Vec3(1, 0, 0);
        m.gamma = -0.5;
        CHECK_THROWS_AS(classify_critical_point(Vec3(5, 5, 5), m), NotACriticalPoint);
    }
}

TEST_CASE("jerk closed form") {
    std::mt19937_64 rng(17);

    SUBCASE("constant field has no jerk") {
        FieldParams m;
        m.order = FieldOrder::Second;
        m.t = Vec3::Zero();
        m.r = Vec3::Zero();
        m.c = Vec3(0.3, -0.4, 0.8);
        m.gamma = 0.0;
        CHECK(jerk(Vec3(1, 2, 3), m).norm() == doctest::Approx(0.0));
    }

    SUBCASE("first-order fields reduce to J^2 v") {
        for (int k = 0; k < 50; ++k) {
            const FieldParams m = testutil::random_params(rng, FieldOrder::First);
            const Vec3 p = testutil::random_vec(rng, 2.0);
            const Mat3 j = velocity_jacobian(p, m);
            const Vec3 expect = j * (j * eval_velocity(p, m));
            CHECK((jerk(p, m) - expect).norm() < 1e-12 * std::max(1.0, expect.norm()));
        }
    }

    SUBCASE("matches the finite-difference derivative of acceleration along v") {
        for (int k = 0; k < 50; ++k) {
            const FieldParams m = testutil::random_params(rng, FieldOrder::Second);
            const Vec3 p = testutil::random_vec(rng, 1.5);
            const Vec3 v = eval_velocity(p, m);
            auto accel = [&](const Vec3& q) {
                return Vec3(velocity_jacobian(q, m) * eval_velocity(q, m));
            };
            const double h = 1e-6;
            const Vec3 fd = (accel(p + h * v) - accel(p - h * v)) / (2.0 * h);
            const Vec3 b = jerk(p, m);
            CHECK((b - fd).norm() < 1e-5 * std::max(1.0, fd.norm()));
        }
    }
}

namespace {

FieldParams rotational_field(double gamma) {
    FieldParams m;
    m.order = FieldOrder::First;
    m.r = Vec3(0, 0, 1);
    m.c = Vec3::Zero();
    m.gamma = gamma;
    return m;
}

std::vector<Vec3> all_vertices(const std::vector<Polyline>& lines) {
    std::vector<Vec3> out;
    for (const auto& line : lines)
        out.insert(out.end(), line.points.begin(), line.points.end());
    return out;
}

std::vector<Vec3> z_axis_samples(double lo, double hi, int n = 200) {
    std::vector<Vec3> out;
    for (int i = 0; i < n; ++i)
        out.push_back(Vec3(0, 0, lo + (hi - lo) * double(i) / double(n - 1)));
    return out;
}

double total_arc_length(const std::vector<Polyline>& lines) {
    double s = 0.0;
    for (const auto& line : lines) s += line.arc_length();
    return s;
}

}  // namespace

TEST_CASE("core line of a rotational field is the axis") {
    const FieldParams m = rotational_field(-0.2);
    CoreLineConfig config;
    for (CoreLineMode mode :
         {CoreLineMode::FirstOrderParallel, CoreLineMode::HigherOrderParallel}) {
        config.mode = mode;
        const auto lines = extract_core_lines(m, config);
        REQUIRE(!lines.empty());
        const auto verts = all_vertices(lines);
        const double h = testutil::hausdorff(verts, z_axis_samples(-1.5, 1.5));
        CHECK(h < 1e-3);
    }
}

TEST_CASE("core line passes near the first-order convergence point") {
    FieldParams m;
    m.order = FieldOrder::First;
    m.r = Vec3(0.1, -0.2, 0.9);
    m.c = Vec3(0.15, 0.1, -0.05);
    m.gamma = -0.3;
    const Vec3 p0 = convergence_point_first_order(m);
    CoreLineConfig config;
    const auto lines = extract_core_lines(m, config);
    REQUIRE(!lines.empty());
    const double cell = 3.0 / config.grid_resolution;
    double best = 1e300;
    for (const Vec3& q : all_vertices(lines)) best = std::min(best, (q - p0).norm());
    CHECK(best < cell);
}

TEST_CASE("constant field yields no core lines") {
    FieldParams m;
    m.order = FieldOrder::First;
    m.r = Vec3::Zero();
    m.c = Vec3(0.2, 0.5, -0.1);
    m.gamma = 0.0;
    CHECK(extract_core_lines(m, CoreLineConfig{}).empty());
}

TEST_CASE("mode equivalence for first-order fields") {
    FieldParams m;
    m.order = FieldOrder::First;
    m.r = Vec3(0.2, 0.1, 1.0);
    m.c = Vec3(0.05, -0.1, 0.0);
    m.gamma = -0.15;
    CoreLineConfig config;
    config.mode = CoreLineMode::FirstOrderParallel;
    const auto a = extract_core_lines(m, config);
    config.mode = CoreLineMode::HigherOrderParallel;
    const auto b = extract_core_lines(m, config);
    REQUIRE(!a.empty());
    REQUIRE(!b.empty());
    const double cell = 3.0 / config.grid_resolution;
    CHECK(testutil::hausdorff(all_vertices(a), all_vertices(b)) < cell);
}

TEST_CASE("parallelism residual on a fitted bent helix") {
    ShapeSpec spec;
    spec.kind = ShapeKind::BentHelixTube;
    spec.samples = 2500;
    spec.noise_sigma = 0.001;
    const PointCloud cloud = generate(spec);
    FitConfig fc;
    fc.order = FieldOrder::Second;
    const FitReport report = fit(cloud, fc);

    CoreLineConfig config;
    config.strength_threshold = 1e-6;
    const auto lines = extract_core_lines(report.params, config);
    REQUIRE(!lines.empty());
    const double max_angle = 2.0 * std::numbers::pi / 180.0;
    for (const auto& line : lines) {
        for (const Vec3& q : line.points) {
            const Vec3 v = eval_velocity(q, report.params);
            const Vec3 w = jerk(q, report.params);
            if (v.norm() < 1e-12 || w.norm() < 1e-12) continue;
            const double sin_angle = v.cross(w).norm() / (v.norm() * w.norm());
            CHECK(sin_angle < std::sin(max_angle));
        }
    }
}

TEST_CASE("parallelism residual invariant for both modes") {
    FieldParams m;
    m.order = FieldOrder::Second;
    m.t = Vec3(0.05, -0.02, 0.04);
    m.r = Vec3(0.1, 0.0, 1.0);
    m.c = Vec3(0.02, 0.05, 0.01);
    m.gamma = -0.1;
    for (CoreLineMode mode :
         {CoreLineMode::FirstOrderParallel, CoreLineMode::HigherOrderParallel}) {
        CoreLineConfig config;
        config.mode = mode;
        for (const auto& line : extract_core_lines(m, config)) {
            for (const Vec3& q : line.points) {
                const Vec3 v = eval_velocity(q, m);
                const Vec3 w = mode == CoreLineMode::FirstOrderParallel
                                   ? Vec3(velocity_jacobian(q, m) * v)
                                   : jerk(q, m);
                if (v.norm() < 1e-12 || w.norm() < 1e-12) continue;
                CHECK(v.cross(w).norm() / (v.norm() * w.norm()) < 0.05);
            }
        }
    }
}

TEST_CASE("filters only remove core lines") {
    const FieldParams m = rotational_field(-0.2);
    CoreLineConfig config;
    const auto base = extract_core_lines(m, config);
    REQUIRE(!base.empty());

    config.min_length = 10.0;  // longer than anything inside the bounds
    CHECK(extract_core_lines(m, config).empty());
    config.min_length = 0.5;
    CHECK(total_arc_length(extract_core_lines(m, config)) <=
          total_arc_length(base) + 1e-12);

    config.min_length = 0.0;
    config.strength_threshold = 2.0;  // swirl strength of the field is 1
    CHECK(extract_core_lines(m, config).empty());
    config.strength_threshold = 0.5;
    CHECK(total_arc_length(extract_core_lines(m, config)) <=
          total_arc_length(base) + 1e-12);
}

TEST_CASE("grid refinement keeps the core line in place") {
    FieldParams m;
    m.order = FieldOrder::First;
    m.r = Vec3(0.1, 0.2, 1.0);
    m.c = Vec3(0.1, 0.0, -0.05);
    m.gamma = -0.2;
    CoreLineConfig coarse;
    coarse.grid_resolution = 32;
    CoreLineConfig fine;
    fine.grid_resolution = 64;
    const auto a = extract_core_lines(m, coarse);
    const auto b = extract_core_lines(m, fine);
    REQUIRE(!a.empty());
    REQUIRE(!b.empty());
    const double coarse_diag = std::sqrt(3.0) * 3.0 / coarse.grid_resolution;
    CHECK(testutil::hausdorff(all_vertices(a), all_vertices(b)) < coarse_diag);
}

TEST_CASE("swirl strength of a unit rotation is one") {
    const FieldParams m = rotational_field(-0.3);
    CHECK(swirl_strength(Vec3(0.4, 0.2, 0.7), m) == doctest::Approx(1.0));
}

TEST_CASE("projection metric") {
    FieldParams m;
    m.order = FieldOrder::Second;

    SUBCASE("orthogonal tilt has zero projection") {
        m.r = Vec3(0, 0, 2);
        m.t = Vec3(0.4, -0.1, 0);
        CHECK(projection_metric(m) == doctest::Approx(0.0));
    }

    SUBCASE("collinear tilt gives twice the rotation magnitude") {
        m.r = Vec3(0.3, -0.5, 0.2);
        m.t = 2.0 * m.r;
        CHECK(projection_metric(m) == doctest::Approx(2.0 * m.r.norm()));
    }

    SUBCASE("reference parameter set") {
        m.t = Vec3(-0.46, 0.23, 0.17);
        m.r = Vec3(-0.14, -0.03, 0.81);
        CHECK(projection_metric(m) == doctest::Approx(0.237).epsilon(0.01));
    }

    SUBCASE("degenerate rotation is rejected") {
        m.r = Vec3::Zero();
        m.t = Vec3(1, 0, 0);
        CHECK_THROWS_AS(projection_metric(m), DegenerateField);
    }

    SUBCASE("first-order input is rejected") {
        FieldParams first;
        first.order = FieldOrder::First;
        first.r = Vec3(0, 0, 1);
        CHECK_THROWS_AS(projection_metric(first), Error);
    }
}
