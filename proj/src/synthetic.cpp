#include "kinfit/synthetic.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace kinfit {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

struct Rng {
    std::mt19937_64 gen;
    std::uniform_real_distribution<double> uni{0.0, 1.0};
    std::normal_distribution<double> gauss{0.0, 1.0};

    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * uni(gen); }
    double normal() { return gauss(gen); }
    Vec3 unit_vector() {
        Vec3 v;
        do {
            v = Vec3(normal(), normal(), normal());
        } while (v.norm() < 1e-6);
        return v.normalized();
    }
};

void add_noise(OrientedPoint& q, double sigma, Rng& rng) {
    if (sigma <= 0.0) return;
    q.position += sigma * rng.normal() * q.normal;
    // Tilt the normal by an independent Gaussian in each tangent direction;
    // this keeps the projection of the error onto any fixed direction
    // Gaussian (a random-axis/random-angle rotation would not).
    Mat3 basis;
    basis.col(2) = q.normal;
    basis.col(0) = q.normal.unitOrthogonal();
    basis.col(1) = q.normal.cross(basis.col(0));
    q.normal = (q.normal + sigma * rng.normal() * basis.col(0) +
                sigma * rng.normal() * basis.col(1))
                   .normalized();
}

// Rotation taking +z to spec.axis, applied after the offset-free sample.
Mat3 frame_to_axis(const Vec3& axis) {
    const Vec3 a = axis.normalized();
    return Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), a).toRotationMatrix();
}

PointCloud sample_cylinder(const ShapeSpec& spec, Rng& rng) {
    PointCloud cloud;
    const Mat3 rot = frame_to_axis(spec.axis);
    for (int i = 0; i < spec.samples; ++i) {
        const double phi = rng.uniform(0.0, kTau);
        const double z = rng.uniform(-0.5 * spec.height, 0.5 * spec.height);
        OrientedPoint q;
        q.normal = Vec3(std::cos(phi), std::sin(phi), 0.0);
        q.position = spec.radius * q.normal + z * Vec3::UnitZ();
        q.position = rot * q.position + spec.offset;
        q.normal = rot * q.normal;
        add_noise(q, spec.noise_sigma, rng);
        cloud.points.push_back(q);
    }
    return cloud;
}

PointCloud sample_cone(const ShapeSpec& spec, Rng& rng) {
    PointCloud cloud;
    const double ta = std::tan(spec.half_angle);
    const double ca = std::cos(spec.half_angle), sa = std::sin(spec.half_angle);
    for (int i = 0; i < spec.samples; ++i) {
        const double phi = rng.uniform(0.0, kTau);
        const double z = rng.uniform(0.2 * spec.height, spec.height);
        OrientedPoint q;
        q.position = Vec3(z * ta * std::cos(phi), z * ta * std::sin(phi), z);
        q.normal = Vec3(ca * std::cos(phi), ca * std::sin(phi), -sa);
        q.position += spec.offset;
        add_noise(q, spec.noise_sigma, rng);
        cloud.points.push_back(q);
    }
    return cloud;
}

PointCloud sample_sphere(const ShapeSpec& spec, Rng& rng) {
    PointCloud cloud;
    for (int i = 0; i < spec.samples; ++i) {
        OrientedPoint q;
        q.normal = rng.unit_vector();
        q.position = spec.radius * q.normal + spec.offset;
        add_noise(q, spec.noise_sigma, rng);
        cloud.points.push_back(q);
    }
    return cloud;
}

// Circular cross-section swept along a centerline; the tube normal is the
// radial direction in the plane perpendicular to the centerline tangent.
PointCloud sample_tube(const ShapeSpec& spec, Rng& rng, double s_lo, double s_hi,
                       const std::function<Vec3(double)>& center,
                       const std::function<Vec3(double)>& tangent) {
    PointCloud cloud;
    for (int i = 0; i < spec.samples; ++i) {
        const double s = rng.uniform(s_lo, s_hi);
        const double phi = rng.uniform(0.0, kTau);
        const Vec3 t = tangent(s).normalized();
        Vec3 ref = Vec3::UnitZ();
        if (std::abs(t.dot(ref)) > 0.99) ref = Vec3::UnitX();
        const Vec3 n1 = ref.cross(t).normalized();
        const Vec3 n2 = t.cross(n1);
        OrientedPoint q;
        q.normal = std::cos(phi) * n1 + std::sin(phi) * n2;
        q.position = center(s) + spec.tube_radius * q.normal + spec.offset;
        add_noise(q, spec.noise_sigma, rng);
        cloud.points.push_back(q);
    }
    return cloud;
}

}  // namespace

PointCloud generate(const ShapeSpec& spec) {
    if (spec.samples < 100) throw InvalidSpec("generate: need at least 100 samples");
    if (spec.tube_radius <= 0.0) throw InvalidSpec("generate: tube radius must be positive");
    Rng rng(spec.seed);

    switch (spec.kind) {
        case ShapeKind::Cylinder:
        case ShapeKind::CylinderOutlier:
            return sample_cylinder(spec, rng);
        case ShapeKind::Cone:
            return sample_cone(spec, rng);
        case ShapeKind::Sphere:
            return sample_sphere(spec, rng);
        case ShapeKind::StraightHelixTube: {
            const double R = spec.helix_radius, h = spec.pitch;
            return sample_tube(
                spec, rng, 0.0, kTau * spec.turns,
                [=](double s) { return Vec3(R * std::cos(s), R * std::sin(s), h * s); },
                [=](double s) { return Vec3(-R * std::sin(s), R * std::cos(s), h); });
        }
        case ShapeKind::LogSpiralTube: {
            // Concho-spiral centerline, an exact streamline of the field
            // r = (0,0,1), gamma = growth_rate, c = 0.
            const double a = spec.helix_radius, g = spec.growth_rate, b = spec.pitch;
            return sample_tube(
                spec, rng, 0.0, kTau * spec.turns,
                [=](double s) {
                    const double e = std::exp(g * s);
                    return Vec3(e * a * std::cos(s), e * a * std::sin(s), e * a * b);
                },
                [=](double s) {
                    const double e = std::exp(g * s);
                    return Vec3(e * a * (g * std::cos(s) - std::sin(s)),
                                e * a * (g * std::sin(s) + std::cos(s)), e * a * b * g);
                });
        }
        case ShapeKind::BentHelixTube: {
            // Helix wound around a circular arc in the xy-plane.
            const double Rb = spec.bend_radius, a = spec.helix_radius;
            const double span = 0.9 * std::numbers::pi;  // arc angle covered
            const double w = kTau * spec.turns / span;   // windings per arc radian
            return sample_tube(
                spec, rng, -0.5 * span, 0.5 * span,
                [=](double s) {
                    const double rad = Rb + a * std::cos(w * s);
                    return Vec3(rad * std::cos(s) - Rb, rad * std::sin(s), a * std::sin(w * s));
                },
                [=](double s) {
                    const double rad = Rb + a * std::cos(w * s);
                    const double drad = -a * w * std::sin(w * s);
                    return Vec3(drad * std::cos(s) - rad * std::sin(s),
                                drad * std::sin(s) + rad * std::cos(s), a * w * std::cos(w * s));
                });
        }
    }
    throw InvalidSpec("generate: unknown shape kind");
}

LabeledCloud merge_with_outlier(const PointCloud& base, const PointCloud& outlier) {
    if (base.empty() || outlier.empty())
        throw Error("merge_with_outlier: clouds must be non-empty");
    LabeledCloud out;
    out.cloud.points = base.points;
    out.cloud.points.insert(out.cloud.points.end(), outlier.points.begin(), outlier.points.end());
    out.inlier.assign(base.size(), true);
    out.inlier.insert(out.inlier.end(), outlier.size(), false);
    return out;
}

}  // namespace kinfit
