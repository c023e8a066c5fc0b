#include "kinfit/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace kinfit {

Eigen::VectorXd FieldParams::flat() const {
    Eigen::VectorXd m(dim());
    int k = 0;
    if (order == FieldOrder::Second) {
        m.segment<3>(k) = t;
        k += 3;
    }
    m.segment<3>(k) = r;
    m.segment<3>(k + 3) = c;
    m(k + 6) = gamma;
    return m;
}

FieldParams FieldParams::from_flat(const Eigen::VectorXd& m, FieldOrder order) {
    FieldParams p;
    p.order = order;
    const int expected = order == FieldOrder::First ? 7 : 10;
    if (m.size() != expected)
        throw Error("from_flat: expected " + std::to_string(expected) + " entries, got " +
                    std::to_string(m.size()));
    int k = 0;
    if (order == FieldOrder::Second) {
        p.t = m.segment<3>(0);
        k = 3;
    }
    p.r = m.segment<3>(k);
    p.c = m.segment<3>(k + 3);
    p.gamma = m(k + 6);
    return p;
}

Vec3 eval_velocity(const Vec3& p, const FieldParams& m) {
    Vec3 v = m.r.cross(p) + m.gamma * p + m.c;
    if (m.order == FieldOrder::Second) v += m.t.cross(p).cross(p);
    return v;
}

Mat3 velocity_jacobian(const Vec3& p, const FieldParams& m) {
    Mat3 j = skew(m.r) + m.gamma * Mat3::Identity();
    if (m.order == FieldOrder::Second) {
        // d/dp[(t x p) x p] = d/dp[(t.p)p - (p.p)t] = p t^T + (t.p)I - 2 t p^T
        j += p * m.t.transpose() + m.t.dot(p) * Mat3::Identity() - 2.0 * m.t * p.transpose();
    }
    return j;
}

Vec3 convergence_point_first_order(const FieldParams& m, double gamma_tol) {
    if (m.order != FieldOrder::First)
        throw Error("convergence_point_first_order: field is not first order");
    if (std::abs(m.gamma) < gamma_tol)
        throw DegenerateField("convergence_point_first_order: |gamma| below tolerance");
    const double g = m.gamma;
    const double denom = g * (m.r.squaredNorm() + g * g);
    return (g * m.r.cross(m.c) - g * g * m.c - m.r.dot(m.c) * m.r) / denom;
}

namespace {

// Nelder-Mead on |v(p)|, standard reflection/expansion/contraction/shrink.
Vec3 nelder_mead_speed_min(const FieldParams& m, const Vec3& start, double& out_val) {
    auto f = [&](const Vec3& p) { return eval_velocity(p, m).norm(); };

    const double init = std::max(0.1, 0.05 * start.norm());
    std::array<Vec3, 4> x;
    std::array<double, 4> fx;
    x[0] = start;
    for (int i = 0; i < 3; ++i) x[i + 1] = start + init * Vec3::Unit(i);
    for (int i = 0; i < 4; ++i) fx[i] = f(x[i]);

    const int max_iter = 500;
    for (int it = 0; it < max_iter; ++it) {
        std::array<int, 4> idx = {0, 1, 2, 3};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        std::array<Vec3, 4> xs;
        std::array<double, 4> fs;
        for (int i = 0; i < 4; ++i) {
            xs[i] = x[idx[i]];
            fs[i] = fx[idx[i]];
        }
        x = xs;
        fx = fs;

        double spread = 0.0;
        for (int i = 1; i < 4; ++i) spread = std::max(spread, (x[i] - x[0]).norm());
        if (fx[0] < 1e-14 || spread < 1e-12) break;

        const Vec3 centroid = (x[0] + x[1] + x[2]) / 3.0;
        const Vec3 xr = centroid + (centroid - x[3]);
        const double fr = f(xr);
        if (fr < fx[0]) {
            const Vec3 xe = centroid + 2.0 * (centroid - x[3]);
            const double fe = f(xe);
            if (fe < fr) {
                x[3] = xe;
                fx[3] = fe;
            } else {
                x[3] = xr;
                fx[3] = fr;
            }
        } else if (fr < fx[2]) {
            x[3] = xr;
            fx[3] = fr;
        } else {
            const Vec3 xc = centroid + 0.5 * (x[3] - centroid);
            const double fc = f(xc);
            if (fc < fx[3]) {
                x[3] = xc;
                fx[3] = fc;
            } else {
                for (int i = 1; i < 4; ++i) {
                    x[i] = x[0] + 0.5 * (x[i] - x[0]);
                    fx[i] = f(x[i]);
                }
            }
        }
    }
    int best = int(std::min_element(fx.begin(), fx.end()) - fx.begin());
    out_val = fx[best];
    return x[best];
}

}  // namespace

ConvergenceSearchResult convergence_point_second_order(const FieldParams& m,
                                                       const std::vector<Vec3>& seeds,
                                                       double eps_conv) {
    if (seeds.empty()) throw Error("convergence_point_second_order: no seeds");
    ConvergenceSearchResult result;
    Vec3 best = Vec3::Zero();
    for (const Vec3& s : seeds) {
        double val = 0.0;
        Vec3 p = nelder_mead_speed_min(m, s, val);
        if (val < result.best_residual) {
            result.best_residual = val;
            best = p;
        }
    }
    if (result.best_residual < eps_conv) result.point = best;
    return result;
}

FieldParams recenter_first_order(const FieldParams& m, const Vec3& p0, double tol) {
    if (m.order != FieldOrder::First)
        throw Error("recenter_first_order: field is not first order");
    const double scale = std::max(1.0, m.flat().norm());
    if (eval_velocity(p0, m).norm() > tol * scale)
        throw InvalidCenter("recenter_first_order: v(p0) is not zero");
    FieldParams out = m;
    out.c = Vec3::Zero();
    return out;
}

double recenter_second_order_residual(const FieldParams& m, const Vec3& p0, const Vec3& p) {
    const Vec3 q = p - p0;
    const Vec3 centered = (m.t.cross(q) + m.r).cross(q) + m.gamma * q;
    return (centered - eval_velocity(p, m)).norm();
}

StreamlineResult streamline_integrate(const FieldParams& m, const Vec3& seed,
                                      const StreamlineOptions& opts) {
    if (opts.step <= 0.0 || opts.n_steps < 1)
        throw Error("streamline_integrate: step must be > 0, n_steps >= 1");
    StreamlineResult res;
    res.line.kind = PolylineKind::Streamline;
    res.line.points.reserve(std::size_t(opts.n_steps) + 1);
    res.line.points.push_back(seed);

    auto inside = [&](const Vec3& p) {
        return (p.array() >= opts.box_lo.array()).all() && (p.array() <= opts.box_hi.array()).all();
    };

    Vec3 p = seed;
    const double h = opts.step;
    for (int i = 0; i < opts.n_steps; ++i) {
        if (eval_velocity(p, m).norm() < opts.eps_conv) {
            res.halt = HaltReason::Converged;
            return res;
        }
        const Vec3 k1 = eval_velocity(p, m);
        const Vec3 k2 = eval_velocity(p + 0.5 * h * k1, m);
        const Vec3 k3 = eval_velocity(p + 0.5 * h * k2, m);
        const Vec3 k4 = eval_velocity(p + h * k3, m);
        p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!inside(p)) {
            res.halt = HaltReason::LeftBounds;
            return res;
        }
        res.line.points.push_back(p);
        res.steps_taken = i + 1;
    }
    return res;
}

Vec3 streamline_closed_form(const FieldParams& m, const Vec3& seed, double u) {
    if (m.order != FieldOrder::First)
        throw Error("streamline_closed_form: field is not first order");
    const double omega = m.r.norm();
    const double g = m.gamma;
    if (omega < 1e-14 && std::abs(g) < 1e-14)
        throw DegenerateField("streamline_closed_form: r and gamma both zero");

    if (omega < 1e-14) {
        // Pure scale field: p(u) = p0 + exp(g u)(seed - p0) with p0 = -c/g.
        const Vec3 p0 = -m.c / g;
        return p0 + std::exp(g * u) * (seed - p0);
    }

    const Vec3 ez = m.r / omega;
    if (std::abs(g) < 1e-14) {
        // Screw motion: rotation about the axis through (r x c)/|r|^2 plus
        // drift along the axis-parallel part of c.
        const Vec3 pa = m.r.cross(m.c) / (omega * omega);
        const Vec3 c_par = m.c.dot(ez) * ez;
        const Vec3 q = seed - pa;
        const Vec3 q_par = q.dot(ez) * ez;
        const Vec3 q_perp = q - q_par;
        const double a = std::cos(omega * u), s = std::sin(omega * u);
        const Vec3 rotated = a * q_perp + s * ez.cross(q_perp);
        return pa + q_par + rotated + u * c_par;
    }

    // General rotational-scale case: exponential spiral about the axis through p0.
    const Vec3 p0 = convergence_point_first_order(m);
    const Vec3 q = seed - p0;
    const Vec3 q_par = q.dot(ez) * ez;
    const Vec3 q_perp = q - q_par;
    const double a = std::cos(omega * u), s = std::sin(omega * u);
    const Vec3 rotated = a * q_perp + s * ez.cross(q_perp);
    return p0 + std::exp(g * u) * (rotated + q_par);
}

std::pair<Vec3, Vec3> symmetry_axis_first_order(const FieldParams& m) {
    if (m.order != FieldOrder::First)
        throw Error("symmetry_axis_first_order: field is not first order");
    if (m.r.norm() < 1e-12) throw DegenerateField("symmetry_axis_first_order: r is zero");
    const Vec3 p0 = convergence_point_first_order(m);
    return {p0, m.r.normalized()};
}

Vec3 PointCloud::centroid() const {
    if (points.empty()) throw Error("centroid of empty cloud");
    Vec3 c = Vec3::Zero();
    for (const auto& q : points) c += q.position;
    return c / double(points.size());
}

void PointCloud::bounds(Vec3& lo, Vec3& hi) const {
    if (points.empty()) throw Error("bounds of empty cloud");
    lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    hi = -lo;
    for (const auto& q : points) {
        lo = lo.cwiseMin(q.position);
        hi = hi.cwiseMax(q.position);
    }
}

double Polyline::arc_length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
    return len;
}

}  // namespace kinfit
