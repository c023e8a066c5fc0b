#pragma once

#include <complex>

#include "kinfit/field.hpp"

namespace kinfit {

enum class CriticalPointClass {
    Source,
    Sink,
    SpiralSource,
    SpiralSink,
    Saddle,
    SpiralSaddle,
    Degenerate
};

struct CriticalPointInfo {
    Vec3 position;
    std::array<std::complex<double>, 3> eigenvalues;
    CriticalPointClass cls = CriticalPointClass::Degenerate;
};

const char* to_string(CriticalPointClass cls);

CriticalPointInfo classify_critical_point(const Vec3& p0, const FieldParams& m,
                                          double eps_conv = 1e-8);

// Derivative of the acceleration a = J v along the flow: b = (grad a) v.
// Closed form for both orders: b = J^2 v + 2(t.v)v - 2|v|^2 t.
Vec3 jerk(const Vec3& p, const FieldParams& m);

enum class CoreLineMode {
    FirstOrderParallel,   // v parallel to J v
    HigherOrderParallel,  // v parallel to jerk
};

struct CoreLineConfig {
    int grid_resolution = 64;  // cells per axis, >= 8
    Vec3 bounds_lo = Vec3::Constant(-1.5);
    Vec3 bounds_hi = Vec3::Constant(1.5);
    double strength_threshold = 0.0;  // min swirl strength (max |Im eig(J)|)
    double min_length = 0.0;          // min polyline arc length
    CoreLineMode mode = CoreLineMode::HigherOrderParallel;
};

// Swirl strength max |Im eigenvalue| of J(p).
double swirl_strength(const Vec3& p, const FieldParams& m);

// Parallel-vectors extraction of core lines on a regular grid: per-face
// triangle solves, cell-wise segment linking, greedy chaining, then swirl
// strength and arc length filtering. Empty result is valid.
std::vector<Polyline> extract_core_lines(const FieldParams& m, const CoreLineConfig& config);

// |proj_r t| = (t.r)/|r|, signed as written; the intrinsic tilt metric.
double projection_metric(const FieldParams& m);

}  // namespace kinfit
