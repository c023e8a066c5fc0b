#pragma once

#include <cstdint>

#include "kinfit/types.hpp"

namespace kinfit {

enum class ShapeKind {
    Cylinder,
    Cone,
    Sphere,
    StraightHelixTube,
    LogSpiralTube,
    BentHelixTube,
    CylinderOutlier
};

// Deterministic generators for validation fixtures. Defaults give desk-scale
// shapes whose fit behavior reproduces the expected first/second order
// ordering; none of the magnitudes is calibrated against published numbers.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::Cylinder;
    int samples = 2000;  // >= 100
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;

    // primitives
    double radius = 1.0;      // cylinder/sphere radius
    double height = 2.0;      // cylinder/cone extent along the axis
    double half_angle = 0.5;  // cone opening half-angle, radians

    // swept tubes
    double tube_radius = 0.12;
    double helix_radius = 1.0;   // cross distance of the centerline from its axis
    double pitch = 0.35;         // axial advance per radian (straight helix, spiral)
    double growth_rate = 0.12;   // exponential growth of the log spiral
    double bend_radius = 2.0;    // arc radius of the bent helix axis
    double turns = 2.5;          // centerline winding turns

    // placement, used for outlier structures
    Vec3 offset = Vec3::Zero();
    Vec3 axis = Vec3::UnitZ();
};

PointCloud generate(const ShapeSpec& spec);

struct LabeledCloud {
    PointCloud cloud;
    std::vector<bool> inlier;  // per point; never visible to the fitter
};

LabeledCloud merge_with_outlier(const PointCloud& base, const PointCloud& outlier);

}  // namespace kinfit
