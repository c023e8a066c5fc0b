#pragma once

#include <optional>

#include "kinfit/field.hpp"
#include "kinfit/types.hpp"

namespace kinfit {

struct FitConfig {
    FieldOrder order = FieldOrder::First;
    double w_p = 0.001;
    int iterations = 15;
    bool robust = false;
    double eig_tolerance = 1e-12;            // eigenvalue tie tolerance
    std::pair<double, double> nu_bracket = {0.1, 1e6};
};

// Per-point quadratic forms of the squared tangency distance,
// d_i^2 = (m^T M m)/(m^T N m).
struct QuadraticForms {
    Eigen::MatrixXd M;  // f f^T, rank 1
    Eigen::MatrixXd N;  // N1 + w_p N2
};

struct FitReport {
    FieldParams params;
    double rmse = 0.0;
    double eigenvalue = 0.0;
    std::optional<double> nu;
    std::optional<double> sigma;
    std::optional<std::vector<double>> weights;       // z_i, robust fits only
    std::optional<double> inlier_rmse;                // over points with z_i > 0.5
    NormalizationTransform transform;
    int iterations_run = 0;
    std::vector<double> objective_history;            // sum z_i d_i^2 per iteration
};

// Basis matrices of the linear-in-parameters field: v = H(p) m and
// grad_p(v . n) = D(p, n) m. Rows are 3, columns dim(order).
Eigen::MatrixXd velocity_basis(const Vec3& p, FieldOrder order);
Eigen::MatrixXd grad_basis(const Vec3& p, const Vec3& n, FieldOrder order);

// f(p, n) with v(p, m) . n = m . f. Seven entries [p x n, n, p.n] for first
// order, ten [(n x p) x p, p x n, n, p.n] for second.
Eigen::VectorXd feature_vector(const Vec3& p, const Vec3& n, FieldOrder order);

Vec3 grad_dot(const Vec3& p, const Vec3& n, const FieldParams& m);

QuadraticForms build_forms(const OrientedPoint& point, FieldOrder order, double w_p);

// Signed normalized tangency distance d_i.
double distance(const OrientedPoint& point, const FieldParams& m, double w_p);

// One fixed-point round: assemble the weighted pencil (B, C) at m_prev and
// return the unit-norm generalized eigenvector of the eigenvalue closest to
// zero, with the sign convention applied. Writes the eigenvalue if requested.
Eigen::VectorXd solve_once(const std::vector<QuadraticForms>& forms,
                           const Eigen::VectorXd& m_prev, const std::vector<double>& weights,
                           double* eigenvalue_out = nullptr);

// Flip m so the dominant r-component (or c-component when r is negligible)
// is positive.
void apply_sign_convention(Eigen::VectorXd& m, FieldOrder order);

// Centroid to origin, RMS point radius to 1.
NormalizationTransform compute_normalization(const PointCloud& cloud);
PointCloud apply_normalization(const PointCloud& cloud, const NormalizationTransform& tf);

FitReport fit(const PointCloud& cloud, const FitConfig& config);

namespace detail {
// Shared between the plain and robust fitting paths.
std::vector<QuadraticForms> prepare_forms(const PointCloud& normalized, const FitConfig& config);
Eigen::VectorXd initial_guess(const std::vector<QuadraticForms>& forms, FieldOrder order,
                              const std::vector<double>& weights = {});
double rmse_of(const PointCloud& normalized, const FieldParams& params, double w_p);
}  // namespace detail

}  // namespace kinfit
