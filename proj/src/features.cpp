#include "kinfit/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>

namespace kinfit {

const char* to_string(CriticalPointClass cls) {
    switch (cls) {
        case CriticalPointClass::Source: return "source";
        case CriticalPointClass::Sink: return "sink";
        case CriticalPointClass::SpiralSource: return "spiral-source";
        case CriticalPointClass::SpiralSink: return "spiral-sink";
        case CriticalPointClass::Saddle: return "saddle";
        case CriticalPointClass::SpiralSaddle: return "spiral-saddle";
        case CriticalPointClass::Degenerate: return "degenerate";
    }
    return "unknown";
}

CriticalPointInfo classify_critical_point(const Vec3& p0, const FieldParams& m, double eps_conv) {
    if (eval_velocity(p0, m).norm() >= eps_conv)
        throw NotACriticalPoint("classify_critical_point: velocity is not zero at p0");

    CriticalPointInfo info;
    info.position = p0;
    Eigen::EigenSolver<Mat3> solver(velocity_jacobian(p0, m));
    for (int i = 0; i < 3; ++i) info.eigenvalues[i] = solver.eigenvalues()(i);

    bool any_zero = false, any_complex = false, any_pos = false, any_neg = false;
    for (const auto& ev : info.eigenvalues) {
        if (std::abs(ev.real()) < 1e-9)
            any_zero = true;
        else if (ev.real() > 0)
            any_pos = true;
        else
            any_neg = true;
        if (std::abs(ev.imag()) > 1e-9) any_complex = true;
    }

    if (any_zero)
        info.cls = CriticalPointClass::Degenerate;
    else if (any_pos && any_neg)
        info.cls = any_complex ? CriticalPointClass::SpiralSaddle : CriticalPointClass::Saddle;
    else if (any_pos)
        info.cls = any_complex ? CriticalPointClass::SpiralSource : CriticalPointClass::Source;
    else
        info.cls = any_complex ? CriticalPointClass::SpiralSink : CriticalPointClass::Sink;
    return info;
}

Vec3 jerk(const Vec3& p, const FieldParams& m) {
    const Vec3 v = eval_velocity(p, m);
    const Mat3 j = velocity_jacobian(p, m);
    Vec3 b = j * (j * v);
    if (m.order == FieldOrder::Second)
        b += 2.0 * m.t.dot(v) * v - 2.0 * v.squaredNorm() * m.t;
    return b;
}

double swirl_strength(const Vec3& p, const FieldParams& m) {
    Eigen::EigenSolver<Mat3> solver(velocity_jacobian(p, m));
    return solver.eigenvalues().imag().cwiseAbs().maxCoeff();
}

double projection_metric(const FieldParams& m) {
    if (m.order != FieldOrder::Second)
        throw Error("projection_metric: defined for second-order fields");
    const double rn = m.r.norm();
    if (rn < 1e-12) throw DegenerateField("projection_metric: r is zero");
    return m.t.dot(m.r) / rn;
}

// ---------------------------------------------------------------------------
// Parallel-vectors core line extraction.
// ---------------------------------------------------------------------------

namespace {

struct FacePoint {
    std::int64_t id;  // face key * 2 + triangle index
    Vec3 position;
};

// Parallel point of two linearly interpolated vector fields on one triangle.
// Solves V b = lambda W b over barycentric b, keeps the best interior
// solution with a near-zero cross-product residual.
bool solve_triangle(const std::array<Vec3, 3>& corners, const std::array<Vec3, 3>& vv,
                    const std::array<Vec3, 3>& ww, Vec3& out) {
    Mat3 V, W;
    for (int i = 0; i < 3; ++i) {
        V.col(i) = vv[i];
        W.col(i) = ww[i];
    }
    Eigen::GeneralizedEigenSolver<Mat3> solver(V, W, true);
    if (solver.info() != Eigen::Success) return false;

    double best_residual = 1e-6;
    bool found = false;
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3cd bc = solver.eigenvectors().col(i);
        if (bc.imag().cwiseAbs().maxCoeff() > 1e-9 * bc.cwiseAbs().maxCoeff()) continue;
        Vec3 b = bc.real();
        const double sum = b.sum();
        if (std::abs(sum) < 1e-12) continue;  // point at infinity
        b /= sum;
        if (b.minCoeff() < -1e-9 || b.maxCoeff() > 1.0 + 1e-9) continue;
        const Vec3 vb = V * b, wb = W * b;
        const double vn = vb.norm(), wn = wb.norm();
        if (vn < 1e-12 || wn < 1e-12) continue;  // degenerate, not a swirl
        const double residual = vb.cross(wb).norm() / (vn * wn);
        if (residual < best_residual) {
            best_residual = residual;
            out = b(0) * corners[0] + b(1) * corners[1] + b(2) * corners[2];
            found = true;
        }
    }
    return found;
}

// Alignment residual of the true (non-interpolated) fields at q; large value
// when either vector vanishes.
double true_residual(const Vec3& q, const FieldParams& m, CoreLineMode mode) {
    const Vec3 v = eval_velocity(q, m);
    const Vec3 w = mode == CoreLineMode::FirstOrderParallel
                       ? Vec3(velocity_jacobian(q, m) * v)
                       : jerk(q, m);
    const double vn = v.norm(), wn = w.norm();
    if (vn < 1e-14 || wn < 1e-14) return 1e300;
    return v.cross(w).norm() / (vn * wn);
}

// Pattern search within the face rectangle, polishing the interpolated
// intersection against the true fields (the linear interpolation error of the
// grid would otherwise dominate the parallelism residual).
Vec3 refine_on_face(Vec3 x, int axis, const Vec3& face_lo, const Vec3& face_hi,
                    const FieldParams& m, CoreLineMode mode) {
    const int u = (axis + 1) % 3, w2 = (axis + 2) % 3;
    const double span = std::max(face_hi(u) - face_lo(u), face_hi(w2) - face_lo(w2));
    double step = 0.25 * span;
    double best = true_residual(x, m, mode);
    while (step > 1e-6 * span) {
        bool moved = false;
        for (int dir = 0; dir < 4; ++dir) {
            Vec3 cand = x;
            const int ax = dir < 2 ? u : w2;
            cand(ax) += (dir % 2 == 0 ? step : -step);
            cand(ax) = std::clamp(cand(ax), face_lo(ax), face_hi(ax));
            const double r = true_residual(cand, m, mode);
            if (r < best) {
                best = r;
                x = cand;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }
    return x;
}

}  // namespace

std::vector<Polyline> extract_core_lines(const FieldParams& m, const CoreLineConfig& config) {
    if (config.grid_resolution < 8) throw Error("extract_core_lines: resolution must be >= 8");
    const int res = config.grid_resolution;
    const Vec3 cell = (config.bounds_hi - config.bounds_lo) / double(res);
    if (!(cell.minCoeff() > 0.0)) throw Error("extract_core_lines: empty bounds");

    const int nn = res + 1;
    auto node_pos = [&](int i, int j, int k) {
        return Vec3(config.bounds_lo + Vec3(i * cell.x(), j * cell.y(), k * cell.z()));
    };
    std::vector<Vec3> vs(std::size_t(nn) * nn * nn), ws(vs.size());
    auto node_index = [&](int i, int j, int k) { return (std::size_t(i) * nn + j) * nn + k; };
    for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
            for (int k = 0; k < nn; ++k) {
                const Vec3 p = node_pos(i, j, k);
                const std::size_t idx = node_index(i, j, k);
                vs[idx] = eval_velocity(p, m);
                ws[idx] = config.mode == CoreLineMode::FirstOrderParallel
                              ? Vec3(velocity_jacobian(p, m) * vs[idx])
                              : jerk(p, m);
            }

    // Faces keyed by (normal axis, slab index, in-plane indices).
    auto face_key = [&](int axis, int i, int j, int k) {
        return ((std::int64_t(axis) * (nn) + i) * nn + j) * nn + k;
    };

    // Corner nodes of a face: axis is the normal direction, (i,j,k) the
    // lowest corner node in grid coordinates.
    auto face_nodes = [&](int axis, int i, int j, int k) {
        std::array<std::array<int, 3>, 4> q{};
        const int u = (axis + 1) % 3, w2 = (axis + 2) % 3;
        std::array<int, 3> base = {i, j, k};
        for (int c = 0; c < 4; ++c) {
            auto node = base;
            node[u] += c & 1;
            node[w2] += (c >> 1) & 1;
            q[c] = node;
        }
        return q;  // order: (0,0), (1,0), (0,1), (1,1) in the face plane
    };

    // Solve every face once; store at most one point per triangle.
    std::map<std::int64_t, std::vector<FacePoint>> face_points;
    auto solve_face = [&](int axis, int i, int j, int k) {
        const auto q = face_nodes(axis, i, j, k);
        std::array<Vec3, 4> pos;
        std::array<Vec3, 4> fv, fw;
        for (int c = 0; c < 4; ++c) {
            pos[c] = node_pos(q[c][0], q[c][1], q[c][2]);
            const std::size_t idx = node_index(q[c][0], q[c][1], q[c][2]);
            fv[c] = vs[idx];
            fw[c] = ws[idx];
        }
        const std::int64_t key = face_key(axis, i, j, k);
        // Diagonal split: (0,1,3) and (0,3,2).
        const std::array<std::array<int, 3>, 2> tris = {{{0, 1, 3}, {0, 3, 2}}};
        std::vector<FacePoint> pts;
        for (int tindex = 0; tindex < 2; ++tindex) {
            const auto& t = tris[tindex];
            Vec3 out;
            if (solve_triangle({pos[t[0]], pos[t[1]], pos[t[2]]}, {fv[t[0]], fv[t[1]], fv[t[2]]},
                               {fw[t[0]], fw[t[1]], fw[t[2]]}, out)) {
                out = refine_on_face(out, axis, pos[0], pos[3], m, config.mode);
                pts.push_back({key * 2 + tindex, out});
            }
        }
        if (!pts.empty()) face_points[key] = std::move(pts);
    };

    for (int axis = 0; axis < 3; ++axis) {
        for (int i = 0; i < (axis == 0 ? res + 1 : res); ++i)
            for (int j = 0; j < (axis == 1 ? res + 1 : res); ++j)
                for (int k = 0; k < (axis == 2 ? res + 1 : res); ++k) solve_face(axis, i, j, k);
    }

    // Per cell: gather the points on its six faces and link them pairwise.
    std::map<std::int64_t, Vec3> points_by_id;
    std::vector<std::pair<std::int64_t, std::int64_t>> segments;
    std::set<std::pair<std::int64_t, std::int64_t>> seen;  // same-face pairs repeat per cell
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j)
            for (int k = 0; k < res; ++k) {
                std::vector<FacePoint> pts;
                const std::array<std::int64_t, 6> keys = {
                    face_key(0, i, j, k),     face_key(0, i + 1, j, k), face_key(1, i, j, k),
                    face_key(1, i, j + 1, k), face_key(2, i, j, k),     face_key(2, i, j, k + 1)};
                for (auto key : keys) {
                    auto it = face_points.find(key);
                    if (it != face_points.end())
                        pts.insert(pts.end(), it->second.begin(), it->second.end());
                }
                if (pts.size() < 2) continue;
                std::sort(pts.begin(), pts.end(),
                          [](const FacePoint& a, const FacePoint& b) { return a.id < b.id; });
                // Greedy nearest pairing.
                std::vector<bool> used(pts.size(), false);
                while (true) {
                    double best = std::numeric_limits<double>::infinity();
                    int ba = -1, bb = -1;
                    for (std::size_t a = 0; a < pts.size(); ++a)
                        for (std::size_t b = a + 1; b < pts.size(); ++b) {
                            if (used[a] || used[b]) continue;
                            const double dd = (pts[a].position - pts[b].position).squaredNorm();
                            if (dd < best) {
                                best = dd;
                                ba = int(a);
                                bb = int(b);
                            }
                        }
                    if (ba < 0) break;
                    used[ba] = used[bb] = true;
                    const auto edge = std::minmax(pts[ba].id, pts[bb].id);
                    if (!seen.insert({edge.first, edge.second}).second) continue;
                    points_by_id[pts[ba].id] = pts[ba].position;
                    points_by_id[pts[bb].id] = pts[bb].position;
                    segments.emplace_back(pts[ba].id, pts[bb].id);
                }
            }

    // Chain segments into polylines; break at valence > 2.
    std::map<std::int64_t, std::vector<std::size_t>> incident;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        incident[segments[s].first].push_back(s);
        incident[segments[s].second].push_back(s);
    }
    auto is_junction = [&](std::int64_t id) { return incident[id].size() != 2; };

    std::vector<bool> seg_used(segments.size(), false);
    std::vector<Polyline> chains;
    auto walk = [&](std::size_t seg, std::int64_t start) {
        Polyline line;
        line.kind = PolylineKind::CoreLine;
        std::int64_t cur = start;
        line.points.push_back(points_by_id[cur]);
        std::size_t s = seg;
        while (!seg_used[s]) {
            seg_used[s] = true;
            cur = segments[s].first == cur ? segments[s].second : segments[s].first;
            line.points.push_back(points_by_id[cur]);
            if (is_junction(cur)) break;
            const auto& inc = incident[cur];
            s = inc[0] == s ? inc[1] : inc[0];
        }
        return line;
    };

    for (const auto& [id, inc] : incident) {
        if (inc.size() == 2) continue;  // interior or junction handled from endpoints
        for (std::size_t s : inc)
            if (!seg_used[s]) chains.push_back(walk(s, id));
    }
    for (std::size_t s = 0; s < segments.size(); ++s)  // leftover closed loops
        if (!seg_used[s]) chains.push_back(walk(s, segments[s].first));

    // Filter: drop weak-swirl vertices (splitting chains), then short chains.
    std::vector<Polyline> result;
    for (const auto& chain : chains) {
        Polyline current;
        current.kind = PolylineKind::CoreLine;
        auto flush = [&]() {
            if (current.points.size() >= 2 && current.arc_length() >= config.min_length)
                result.push_back(current);
            current.points.clear();
        };
        for (const Vec3& p : chain.points) {
            if (swirl_strength(p, m) >= config.strength_threshold &&
                true_residual(p, m, config.mode) < 0.05)
                current.points.push_back(p);
            else
                flush();
        }
        flush();
    }
    return result;
}

}  // namespace kinfit
