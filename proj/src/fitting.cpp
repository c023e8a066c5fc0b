#include "kinfit/fitting.hpp"

#include <cmath>

#include "kinfit/robust.hpp"

namespace kinfit {

Eigen::MatrixXd velocity_basis(const Vec3& p, FieldOrder order) {
    const int d = order == FieldOrder::First ? 7 : 10;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, d);
    int k = 0;
    if (order == FieldOrder::Second) {
        // (t x p) x p = (p (x) p - (p.p) I) t
        h.block<3, 3>(0, 0) = p * p.transpose() - p.squaredNorm() * Mat3::Identity();
        k = 3;
    }
    h.block<3, 3>(0, k) = -skew(p);  // r x p = -p x r
    h.block<3, 3>(0, k + 3) = Mat3::Identity();
    h.col(k + 6) = p;
    return h;
}

Eigen::MatrixXd grad_basis(const Vec3& p, const Vec3& n, FieldOrder order) {
    const int d = order == FieldOrder::First ? 7 : 10;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, d);
    int k = 0;
    if (order == FieldOrder::Second) {
        g.block<3, 3>(0, 0) =
            p.dot(n) * Mat3::Identity() - 2.0 * p * n.transpose() + n * p.transpose();
        k = 3;
    }
    g.block<3, 3>(0, k) = skew(n);  // n x r
    g.col(k + 6) = n;
    return g;
}

Eigen::VectorXd feature_vector(const Vec3& p, const Vec3& n, FieldOrder order) {
    return velocity_basis(p, order).transpose() * n;
}

Vec3 grad_dot(const Vec3& p, const Vec3& n, const FieldParams& m) {
    return grad_basis(p, n, m.order) * m.flat();
}

QuadraticForms build_forms(const OrientedPoint& point, FieldOrder order, double w_p) {
    const Eigen::MatrixXd h = velocity_basis(point.position, order);
    const Eigen::MatrixXd g = grad_basis(point.position, point.normal, order);
    const Eigen::VectorXd f = h.transpose() * point.normal;
    QuadraticForms q;
    q.M = f * f.transpose();
    q.N = h.transpose() * h + w_p * g.transpose() * g;
    return q;
}

double distance(const OrientedPoint& point, const FieldParams& m, double w_p) {
    const Vec3 v = eval_velocity(point.position, m);
    const double denom2 = v.squaredNorm() + w_p * grad_dot(point.position, point.normal, m).squaredNorm();
    if (denom2 <= 0.0)
        throw DegenerateDenominator("distance: zero velocity and zero gradient term");
    return v.dot(point.normal) / std::sqrt(denom2);
}

void apply_sign_convention(Eigen::VectorXd& m, FieldOrder order) {
    const int r0 = order == FieldOrder::First ? 0 : 3;
    int block = r0;
    if (m.segment<3>(r0).norm() < 1e-9) block = r0 + 3;  // fall back to c
    int imax = 0;
    m.segment<3>(block).cwiseAbs().maxCoeff(&imax);
    if (m(block + imax) < 0.0) m = -m;
}

namespace {

// Smallest-|lambda| generalized eigenpair of the symmetric pencil (B, C),
// C positive definite up to jitter repair.
Eigen::VectorXd solve_pencil(Eigen::MatrixXd B, Eigen::MatrixXd C, double* eigenvalue_out) {
    const int d = int(B.rows());
    // The pencil is homogeneous in either matrix; rescale to balance
    // conditioning (exact-data fits drive trace(C) toward zero).
    const double tb = B.trace(), tc = C.trace();
    if (!(tb > 0.0) || !(tc > 0.0))
        throw SingularNormalization("solve_pencil: non-positive trace");
    B /= tb;
    C /= tc;

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(B, C);
    if (solver.info() != Eigen::Success) {
        C += (1e-12 * C.trace() / d) * Eigen::MatrixXd::Identity(d, d);
        solver.compute(B, C);
        if (solver.info() != Eigen::Success)
            throw SingularNormalization("solve_pencil: C singular beyond jitter repair");
    }

    const Eigen::VectorXd evals = solver.eigenvalues();
    int best = 0;
    for (int i = 1; i < d; ++i)
        if (std::abs(evals(i)) < std::abs(evals(best)) - 1e-12) best = i;
    if (eigenvalue_out) *eigenvalue_out = evals(best) * tb / tc;
    Eigen::VectorXd m = solver.eigenvectors().col(best);
    if (!m.allFinite()) throw EigenFailure("solve_pencil: non-finite eigenvector");
    m.normalize();
    return m;
}

}  // namespace

Eigen::VectorXd solve_once(const std::vector<QuadraticForms>& forms,
                           const Eigen::VectorXd& m_prev, const std::vector<double>& weights,
                           double* eigenvalue_out) {
    const int d = int(m_prev.size());
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < forms.size(); ++i) {
        const double z = weights.empty() ? 1.0 : weights[i];
        const double nn = m_prev.dot(forms[i].N * m_prev);
        if (!(nn > 0.0)) throw SingularNormalization("solve_once: m^T N_i m not positive");
        // Round-off can push the rank-1 quadratic form slightly negative.
        const double mm = std::max(m_prev.dot(forms[i].M * m_prev), 0.0);
        B += (z / nn) * forms[i].M;
        C += (z * mm / (nn * nn)) * forms[i].N;
    }
    const FieldOrder order = d == 7 ? FieldOrder::First : FieldOrder::Second;
    if (C.trace() == 0.0) {
        // Every residual m'M_i m is exactly zero: m_prev is an exact fit and
        // a fixed point of the iteration.
        if (eigenvalue_out) *eigenvalue_out = 0.0;
        Eigen::VectorXd m = m_prev.normalized();
        apply_sign_convention(m, order);
        return m;
    }
    Eigen::VectorXd m = solve_pencil(std::move(B), std::move(C), eigenvalue_out);
    apply_sign_convention(m, order);
    return m;
}

NormalizationTransform compute_normalization(const PointCloud& cloud) {
    NormalizationTransform tf;
    tf.centroid = cloud.centroid();
    double sum2 = 0.0;
    for (const auto& q : cloud.points) sum2 += (q.position - tf.centroid).squaredNorm();
    tf.scale = std::sqrt(sum2 / double(cloud.size()));
    if (!(tf.scale > 0.0)) tf.scale = 1.0;  // all points coincident
    return tf;
}

PointCloud apply_normalization(const PointCloud& cloud, const NormalizationTransform& tf) {
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& q : cloud.points)
        out.points.push_back({tf.to_normalized(q.position), q.normal.normalized()});
    return out;
}

namespace detail {

std::vector<QuadraticForms> prepare_forms(const PointCloud& normalized, const FitConfig& config) {
    std::vector<QuadraticForms> forms;
    forms.reserve(normalized.size());
    for (const auto& q : normalized.points) {
        if (std::abs(q.normal.norm() - 1.0) > 1e-6)
            throw Error("fit: normal is not unit length");
        forms.push_back(build_forms(q, config.order, config.w_p));
    }
    return forms;
}

// Warm start: pencil (sum w_i M_i, sum w_i N_i), smallest-|lambda| vector.
Eigen::VectorXd initial_guess(const std::vector<QuadraticForms>& forms, FieldOrder order,
                              const std::vector<double>& weights) {
    const int d = order == FieldOrder::First ? 7 : 10;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < forms.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        B += w * forms[i].M;
        C += w * forms[i].N;
    }
    Eigen::VectorXd m;
    try {
        m = solve_pencil(std::move(B), std::move(C), nullptr);
    } catch (const SingularNormalization& e) {
        throw RankDeficient(std::string("fit: degenerate cloud: ") + e.what());
    }
    apply_sign_convention(m, order);
    return m;
}

double rmse_of(const PointCloud& normalized, const FieldParams& params, double w_p) {
    double sum = 0.0;
    for (const auto& q : normalized.points) {
        const double d = distance(q, params, w_p);
        sum += d * d;
    }
    return std::sqrt(sum / double(normalized.size()));
}

}  // namespace detail

FitReport fit(const PointCloud& cloud, const FitConfig& config) {
    if (config.robust) return robust_fit(cloud, config);
    if (cloud.size() < 10) throw InsufficientPoints("fit: need at least 10 oriented points");

    FitReport report;
    report.transform = compute_normalization(cloud);
    const PointCloud normalized = apply_normalization(cloud, report.transform);
    const auto forms = detail::prepare_forms(normalized, config);

    Eigen::VectorXd m = detail::initial_guess(forms, config.order);
    const std::vector<double> unit_weights;  // empty means all ones
    double eigenvalue = 0.0;
    for (int it = 0; it < config.iterations; ++it) {
        m = solve_once(forms, m, unit_weights, &eigenvalue);
        report.iterations_run = it + 1;
        double obj = 0.0;
        for (const auto& f : forms) obj += m.dot(f.M * m) / m.dot(f.N * m);
        report.objective_history.push_back(obj);
    }

    report.params = FieldParams::from_flat(m, config.order);
    report.eigenvalue = eigenvalue;
    report.rmse = detail::rmse_of(normalized, report.params, config.w_p);
    return report;
}

}  // namespace kinfit
