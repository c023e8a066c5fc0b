#pragma once

#include <optional>

#include "kinfit/types.hpp"

namespace kinfit {

enum class FieldOrder { First, Second };

// Stationary velocity field parameters.
//   First order:  v(p) = r x p + gamma p + c                (7 parameters)
//   Second order: v(p) = (t x p) x p + r x p + gamma p + c  (10 parameters)
// The flat layout is [r, c, gamma] resp. [t, r, c, gamma].
struct FieldParams {
    FieldOrder order = FieldOrder::First;
    Vec3 t = Vec3::Zero();  // zero for first order
    Vec3 r = Vec3::Zero();
    Vec3 c = Vec3::Zero();
    double gamma = 0.0;

    int dim() const { return order == FieldOrder::First ? 7 : 10; }

    Eigen::VectorXd flat() const;
    static FieldParams from_flat(const Eigen::VectorXd& m, FieldOrder order);
};

Vec3 eval_velocity(const Vec3& p, const FieldParams& m);

// J(p) = grad_p v. First order: A_r + gamma I (constant).
// Second order adds p (x) t + (t.p) I - 2 t (x) p.
Mat3 velocity_jacobian(const Vec3& p, const FieldParams& m);

// Closed-form zero of a first-order field; requires |gamma| above tolerance.
Vec3 convergence_point_first_order(const FieldParams& m, double gamma_tol = 1e-9);

struct ConvergenceSearchResult {
    std::optional<Vec3> point;
    double best_residual = std::numeric_limits<double>::infinity();
};

// Derivative-free multi-start minimization of |v(p)| for second-order fields.
ConvergenceSearchResult convergence_point_second_order(const FieldParams& m,
                                                       const std::vector<Vec3>& seeds,
                                                       double eps_conv = 1e-8);

// Translate a first-order field so the given zero becomes the origin (c' = 0).
FieldParams recenter_first_order(const FieldParams& m, const Vec3& p0, double tol = 1e-8);

// How far the centered second-order expression (with the rotation axis pivoted at p0)
// deviates from v(p). Zero when t = 0 or p0 = 0; nonzero in general.
double recenter_second_order_residual(const FieldParams& m, const Vec3& p0, const Vec3& p);

struct StreamlineOptions {
    double step = 1e-2;
    int n_steps = 5000;
    double eps_conv = 1e-8;
    Vec3 box_lo = Vec3::Constant(-4.0);
    Vec3 box_hi = Vec3::Constant(4.0);
};

enum class HaltReason { Completed, Converged, LeftBounds };

struct StreamlineResult {
    Polyline line;
    HaltReason halt = HaltReason::Completed;
    int steps_taken = 0;
};

// Classical RK4 with fixed step; halts early at a fixed point or when
// leaving the bounding box.
StreamlineResult streamline_integrate(const FieldParams& m, const Vec3& seed,
                                      const StreamlineOptions& opts);

// Concho-spiral closed form for first-order fields (r, gamma not both zero).
Vec3 streamline_closed_form(const FieldParams& m, const Vec3& seed, double u);

// (point on axis, unit direction). The straight line through p0 along r.
std::pair<Vec3, Vec3> symmetry_axis_first_order(const FieldParams& m);

}  // namespace kinfit
