#pragma once

#include <random>

#include "kinfit/field.hpp"
#include "kinfit/types.hpp"

namespace kinfit::testutil {

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return Vec3(u(rng), u(rng), u(rng));
}

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec3 v;
    do {
        v = Vec3(g(rng), g(rng), g(rng));
    } while (v.norm() < 1e-6);
    return v.normalized();
}

inline FieldParams random_params(std::mt19937_64& rng, FieldOrder order,
                                 double min_gamma = 0.0) {
    FieldParams m;
    m.order = order;
    if (order == FieldOrder::Second) m.t = random_vec(rng);
    m.r = random_vec(rng);
    m.c = random_vec(rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    do {
        m.gamma = u(rng);
    } while (std::abs(m.gamma) < min_gamma);
    return m;
}

// Central finite-difference Jacobian of the velocity field.
inline Mat3 fd_jacobian(const Vec3& p, const FieldParams& m, double h = 1e-5) {
    Mat3 j;
    for (int i = 0; i < 3; ++i) {
        const Vec3 dp = h * Vec3::Unit(i);
        j.col(i) = (eval_velocity(p + dp, m) - eval_velocity(p - dp, m)) / (2.0 * h);
    }
    return j;
}

// One-sided Hausdorff distance from the points of a to polyline b
// (distance to b's segments).
inline double directed_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    auto point_segment = [](const Vec3& p, const Vec3& s0, const Vec3& s1) {
        const Vec3 d = s1 - s0;
        const double len2 = d.squaredNorm();
        if (len2 < 1e-30) return (p - s0).norm();
        const double t = std::clamp((p - s0).dot(d) / len2, 0.0, 1.0);
        return (p - (s0 + t * d)).norm();
    };
    double worst = 0.0;
    for (const Vec3& p : a) {
        double best = std::numeric_limits<double>::infinity();
        if (b.size() == 1) best = (p - b[0]).norm();
        for (std::size_t i = 1; i < b.size(); ++i)
            best = std::min(best, point_segment(p, b[i - 1], b[i]));
        worst = std::max(worst, best);
    }
    return worst;
}

inline double hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

}  // namespace kinfit::testutil
