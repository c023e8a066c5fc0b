#include "kinfit/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace kinfit {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

bool parse_doubles(const std::string& line, std::vector<double>& out) {
    out.clear();
    std::istringstream ss(line);
    ss.imbue(std::locale::classic());
    double x;
    while (ss >> x) out.push_back(x);
    ss.clear();
    std::string rest;
    ss >> rest;
    return rest.empty();
}

PointCloud finalize_with_face_normals(const std::filesystem::path& path,
                                      const std::vector<Vec3>& vertices,
                                      const std::vector<std::vector<int>>& faces,
                                      const std::vector<Vec3>& vertex_normals, LoadStats* stats) {
    std::vector<Vec3> normals;
    if (!vertex_normals.empty()) {
        normals = vertex_normals;
    } else {
        if (faces.empty())
            throw NoNormalsDerivable(path.string() + ": no normals and no faces to derive them");
        normals.assign(vertices.size(), Vec3::Zero());
        for (const auto& f : faces) {
            // Fan triangulation; the cross product carries the area weight.
            for (std::size_t k = 2; k < f.size(); ++k) {
                const Vec3& a = vertices[f[0]];
                const Vec3& b = vertices[f[k - 1]];
                const Vec3& c = vertices[f[k]];
                const Vec3 fn = (b - a).cross(c - a);
                if (fn.norm() < 1e-30) {
                    if (stats) ++stats->degenerate_faces;
                    continue;
                }
                normals[f[0]] += fn;
                normals[f[k - 1]] += fn;
                normals[f[k]] += fn;
            }
        }
    }

    PointCloud cloud;
    cloud.points.reserve(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const double n = normals[i].norm();
        if (n < 1e-30)
            throw NoNormalsDerivable(path.string() + ": vertex " + std::to_string(i) +
                                     " has no derivable normal");
        cloud.points.push_back({vertices[i], normals[i] / n});
    }
    if (stats) {
        stats->vertex_count = vertices.size();
        stats->had_normals = !vertex_normals.empty();
    }
    return cloud;
}

PointCloud load_obj(const std::filesystem::path& path, LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Vec3> vertices, vn;
    std::vector<Vec3> accumulated;  // per-vertex vn accumulation via faces
    std::vector<std::vector<int>> faces;
    std::string line;
    std::size_t lineno = 0;
    bool any_vn_ref = false;

    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        ss.imbue(std::locale::classic());
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v" || tag == "vn") {
            double x, y, z;
            if (!(ss >> x >> y >> z)) parse_fail(path, lineno, "malformed '" + tag + "' record");
            (tag == "v" ? vertices : vn).emplace_back(x, y, z);
            if (tag == "v") accumulated.emplace_back(Vec3::Zero());
        } else if (tag == "f") {
            std::vector<int> face;
            std::string tok;
            while (ss >> tok) {
                int vi = 0, ni = 0;
                bool has_ni = false;
                const auto s1 = tok.find('/');
                try {
                    vi = std::stoi(tok.substr(0, s1));
                    if (s1 != std::string::npos) {
                        const auto s2 = tok.find('/', s1 + 1);
                        if (s2 != std::string::npos && s2 + 1 < tok.size()) {
                            ni = std::stoi(tok.substr(s2 + 1));
                            has_ni = true;
                        }
                    }
                } catch (const std::exception&) {
                    parse_fail(path, lineno, "malformed face index '" + tok + "'");
                }
                const int idx = vi > 0 ? vi - 1 : int(vertices.size()) + vi;
                if (idx < 0 || idx >= int(vertices.size()))
                    parse_fail(path, lineno, "vertex index out of range");
                face.push_back(idx);
                if (has_ni) {
                    const int nidx = ni > 0 ? ni - 1 : int(vn.size()) + ni;
                    if (nidx < 0 || nidx >= int(vn.size()))
                        parse_fail(path, lineno, "normal index out of range");
                    accumulated[idx] += vn[nidx].normalized();
                    any_vn_ref = true;
                }
            }
            if (face.size() < 3) parse_fail(path, lineno, "face with fewer than 3 vertices");
            faces.push_back(std::move(face));
        }
    }
    if (vertices.empty()) throw ParseError(path.string() + ": no vertices");

    std::vector<Vec3> vertex_normals;
    if (any_vn_ref) {
        vertex_normals = accumulated;
    } else if (!vn.empty() && vn.size() == vertices.size()) {
        vertex_normals = vn;  // common unindexed convention: vn parallel to v
    }
    return finalize_with_face_normals(path, vertices, faces, vertex_normals, stats);
}

PointCloud load_ply(const std::filesystem::path& path, LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;

    auto next_line = [&]() {
        if (!std::getline(in, line)) parse_fail(path, lineno, "unexpected end of file");
        ++lineno;
    };

    next_line();
    if (line.rfind("ply", 0) != 0) parse_fail(path, lineno, "missing 'ply' magic");
    next_line();
    if (line.rfind("format ascii", 0) != 0)
        parse_fail(path, lineno, "only ASCII PLY is supported");

    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<std::string> properties;  // scalar property names, "" for lists
    };
    std::vector<Element> elements;
    while (true) {
        next_line();
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "comment") continue;
        if (tag == "end_header") break;
        if (tag == "element") {
            Element e;
            if (!(ss >> e.name >> e.count)) parse_fail(path, lineno, "malformed element line");
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) parse_fail(path, lineno, "property before element");
            std::string type, name;
            ss >> type;
            if (type == "list") {
                std::string t2, t3;
                ss >> t2 >> t3 >> name;
                elements.back().properties.push_back("");
            } else {
                ss >> name;
                elements.back().properties.push_back(name);
            }
        } else {
            parse_fail(path, lineno, "unexpected header line '" + tag + "'");
        }
    }

    std::vector<Vec3> vertices;
    std::vector<Vec3> vertex_normals;
    std::vector<std::vector<int>> faces;
    for (const auto& e : elements) {
        if (e.name == "vertex") {
            auto find = [&](const char* n) {
                auto it = std::find(e.properties.begin(), e.properties.end(), n);
                return it == e.properties.end() ? -1 : int(it - e.properties.begin());
            };
            const int ix = find("x"), iy = find("y"), iz = find("z");
            const int inx = find("nx"), iny = find("ny"), inz = find("nz");
            if (ix < 0 || iy < 0 || iz < 0)
                parse_fail(path, lineno, "vertex element lacks x/y/z properties");
            const bool has_n = inx >= 0 && iny >= 0 && inz >= 0;
            std::vector<double> row;
            for (std::size_t i = 0; i < e.count; ++i) {
                next_line();
                if (!parse_doubles(line, row) || row.size() != e.properties.size())
                    parse_fail(path, lineno, "malformed vertex row");
                vertices.emplace_back(row[ix], row[iy], row[iz]);
                if (has_n) vertex_normals.emplace_back(row[inx], row[iny], row[inz]);
            }
        } else if (e.name == "face") {
            std::vector<double> row;
            for (std::size_t i = 0; i < e.count; ++i) {
                next_line();
                if (!parse_doubles(line, row) || row.empty() ||
                    row.size() != std::size_t(row[0]) + 1 || row[0] < 3)
                    parse_fail(path, lineno, "malformed face row");
                std::vector<int> face;
                for (std::size_t k = 1; k < row.size(); ++k) {
                    const int idx = int(row[k]);
                    if (idx < 0 || idx >= int(vertices.size()))
                        parse_fail(path, lineno, "face index out of range");
                    face.push_back(idx);
                }
                faces.push_back(std::move(face));
            }
        } else {
            for (std::size_t i = 0; i < e.count; ++i) next_line();  // skip unknown elements
        }
    }
    if (vertices.empty()) throw ParseError(path.string() + ": no vertices");
    return finalize_with_face_normals(path, vertices, faces, vertex_normals, stats);
}

PointCloud load_xyzn(const std::filesystem::path& path, LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    PointCloud cloud;
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> row;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        if (!parse_doubles(line, row) || row.size() != 6)
            parse_fail(path, lineno, "expected 6 numbers: x y z nx ny nz");
        Vec3 n(row[3], row[4], row[5]);
        if (n.norm() < 1e-30) parse_fail(path, lineno, "zero normal");
        cloud.points.push_back({Vec3(row[0], row[1], row[2]), n.normalized()});
    }
    if (cloud.empty()) throw ParseError(path.string() + ": no points");
    if (stats) {
        stats->vertex_count = cloud.size();
        stats->had_normals = true;
    }
    return cloud;
}

}  // namespace

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format, LoadStats* stats) {
    if (format == CloudFormat::Auto) {
        auto ext = path.extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".obj")
            format = CloudFormat::OBJ;
        else if (ext == ".ply")
            format = CloudFormat::PLY_ASCII;
        else
            format = CloudFormat::XYZN;
    }
    switch (format) {
        case CloudFormat::OBJ: return load_obj(path, stats);
        case CloudFormat::PLY_ASCII: return load_ply(path, stats);
        default: return load_xyzn(path, stats);
    }
}

void save_cloud_xyzn(const PointCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.imbue(std::locale::classic());
    out.precision(17);
    for (const auto& q : cloud.points) {
        out << q.position.x() << ' ' << q.position.y() << ' ' << q.position.z() << ' '
            << q.normal.x() << ' ' << q.normal.y() << ' ' << q.normal.z() << '\n';
    }
    if (!out) throw IoError("write failure on " + path.string());
}

Vec3 select_seed(const PointCloud& cloud, const Vec3& plane_point, const Vec3& plane_normal,
                 double thickness) {
    const Vec3 n = plane_normal.normalized();
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
    for (const auto& q : cloud.points) {
        if (std::abs((q.position - plane_point).dot(n)) <= 0.5 * thickness) {
            sum += q.position;
            ++count;
        }
    }
    if (count < 3) throw EmptySlab("select_seed: fewer than 3 points in the slab");
    return sum / double(count);
}

void export_polylines(const std::vector<Polyline>& lines, const std::filesystem::path& path,
                      const NormalizationTransform& frame) {
    if (lines.empty()) throw Error("export_polylines: empty list");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.imbue(std::locale::classic());
    out.precision(12);

    std::size_t total = 0;
    for (const auto& l : lines) total += l.points.size();

    out << "# vtk DataFile Version 3.0\n";
    out << "kinfit polylines\n";
    out << "ASCII\n";
    out << "DATASET POLYDATA\n";
    out << "POINTS " << total << " double\n";
    for (const auto& l : lines)
        for (const Vec3& q : l.points) {
            const Vec3 p = frame.to_input(q);
            out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
        }
    std::size_t entries = 0;
    for (const auto& l : lines) entries += 1 + l.points.size();
    out << "LINES " << lines.size() << ' ' << entries << '\n';
    std::size_t base = 0;
    for (const auto& l : lines) {
        out << l.points.size();
        for (std::size_t i = 0; i < l.points.size(); ++i) out << ' ' << base + i;
        out << '\n';
        base += l.points.size();
    }
    out << "CELL_DATA " << lines.size() << '\n';
    out << "SCALARS kind int 1\n";
    out << "LOOKUP_TABLE default\n";
    for (const auto& l : lines) out << int(l.kind) << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

std::vector<Polyline> import_polylines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string word;
    std::vector<Vec3> points;
    std::vector<std::vector<std::size_t>> conn;
    std::vector<int> kinds;
    std::size_t lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        ss.imbue(std::locale::classic());
        if (!(ss >> word)) continue;  // blank line (or tail of a block read)
        if (word == "POINTS") {
            std::size_t n = 0;
            if (!(ss >> n)) parse_fail(path, lineno, "bad POINTS count");
            points.resize(n);
            for (auto& p : points)
                if (!(in >> p.x() >> p.y() >> p.z())) parse_fail(path, lineno, "short POINTS block");
        } else if (word == "LINES") {
            std::size_t n = 0, total = 0;
            if (!(ss >> n >> total)) parse_fail(path, lineno, "bad LINES counts");
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t cnt;
                if (!(in >> cnt)) parse_fail(path, lineno, "short LINES block");
                std::vector<std::size_t> idx(cnt);
                for (auto& v : idx)
                    if (!(in >> v) || v >= points.size())
                        parse_fail(path, lineno, "bad line index");
                conn.push_back(std::move(idx));
            }
        } else if (word == "SCALARS") {
            std::getline(in, line);  // LOOKUP_TABLE
            kinds.resize(conn.size());
            for (auto& k : kinds)
                if (!(in >> k)) parse_fail(path, lineno, "short scalar block");
        }
    }
    std::vector<Polyline> lines_out;
    for (std::size_t i = 0; i < conn.size(); ++i) {
        Polyline l;
        l.kind = i < kinds.size() ? PolylineKind(kinds[i]) : PolylineKind::CoreLine;
        for (auto v : conn[i]) l.points.push_back(points[v]);
        lines_out.push_back(std::move(l));
    }
    return lines_out;
}

namespace {

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

}  // namespace

std::string report_to_json(const FitReport& report) {
    json j;
    j["order"] = report.params.order == FieldOrder::First ? 1 : 2;
    json m;
    if (report.params.order == FieldOrder::Second) m["t"] = vec_to_json(report.params.t);
    m["r"] = vec_to_json(report.params.r);
    m["c"] = vec_to_json(report.params.c);
    m["gamma"] = report.params.gamma;
    j["m"] = m;
    j["eigenvalue"] = report.eigenvalue;
    j["rmse"] = report.rmse;
    if (report.nu) j["nu"] = *report.nu;
    if (report.sigma) j["sigma"] = *report.sigma;
    if (report.inlier_rmse) j["inlier_rmse"] = *report.inlier_rmse;
    if (report.weights && !report.weights->empty()) {
        std::vector<double> z = *report.weights;
        std::sort(z.begin(), z.end());
        j["z_summary"] = {{"min", z.front()},
                          {"median", z[z.size() / 2]},
                          {"max", z.back()}};
    }
    j["transform"] = {{"centroid", vec_to_json(report.transform.centroid)},
                      {"scale", report.transform.scale}};
    j["iterations_run"] = report.iterations_run;
    return j.dump(2) + "\n";
}

FitReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("report JSON: ") + e.what());
    }
    FitReport report;
    try {
        report.params.order = int(j.at("order")) == 1 ? FieldOrder::First : FieldOrder::Second;
        const auto& m = j.at("m");
        if (report.params.order == FieldOrder::Second) report.params.t = vec_from_json(m.at("t"));
        report.params.r = vec_from_json(m.at("r"));
        report.params.c = vec_from_json(m.at("c"));
        report.params.gamma = m.at("gamma");
        report.eigenvalue = j.at("eigenvalue");
        report.rmse = j.at("rmse");
        if (j.contains("nu")) report.nu = double(j.at("nu"));
        if (j.contains("sigma")) report.sigma = double(j.at("sigma"));
        if (j.contains("inlier_rmse")) report.inlier_rmse = double(j.at("inlier_rmse"));
        report.transform.centroid = vec_from_json(j.at("transform").at("centroid"));
        report.transform.scale = j.at("transform").at("scale");
        report.iterations_run = j.at("iterations_run");
    } catch (const json::exception& e) {
        throw ParseError(std::string("report JSON: ") + e.what());
    }
    return report;
}

void write_report(const FitReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << report_to_json(report);
    if (!out) throw IoError("write failure on " + path.string());
}

FitReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return report_from_json(buffer.str());
}

}  // namespace kinfit
