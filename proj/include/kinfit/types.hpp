#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinfit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// --- error hierarchy -------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateField : Error {
    using Error::Error;
};
struct InvalidCenter : Error {
    using Error::Error;
};
struct DegenerateDenominator : Error {
    using Error::Error;
};
struct InsufficientPoints : Error {
    using Error::Error;
};
struct RankDeficient : Error {
    using Error::Error;
};
struct SingularNormalization : Error {
    using Error::Error;
};
struct EigenFailure : Error {
    using Error::Error;
};
struct NotACriticalPoint : Error {
    using Error::Error;
};
struct InvalidSpec : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct NoNormalsDerivable : Error {
    using Error::Error;
};
struct EmptySlab : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

// --- basic data ------------------------------------------------------------

struct OrientedPoint {
    Vec3 position = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();  // unit length
};

struct PointCloud {
    std::vector<OrientedPoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    Vec3 centroid() const;
    // Axis-aligned bounds; throws on empty cloud.
    void bounds(Vec3& lo, Vec3& hi) const;
};

enum class PolylineKind { Streamline, Axis, CoreLine };

struct Polyline {
    std::vector<Vec3> points;
    PolylineKind kind = PolylineKind::Streamline;

    double arc_length() const;
};

// Maps input coordinates into the normalized fitting frame: q = (p - centroid)/scale.
struct NormalizationTransform {
    Vec3 centroid = Vec3::Zero();
    double scale = 1.0;

    Vec3 to_normalized(const Vec3& p) const { return (p - centroid) / scale; }
    Vec3 to_input(const Vec3& q) const { return q * scale + centroid; }
};

inline Mat3 skew(const Vec3& a) {
    Mat3 s;
    s << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
    return s;
}

}  // namespace kinfit
