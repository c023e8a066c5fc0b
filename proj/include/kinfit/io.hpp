#pragma once

#include <filesystem>
#include <iosfwd>

#include "kinfit/fitting.hpp"
#include "kinfit/types.hpp"

namespace kinfit {

enum class CloudFormat { Auto, OBJ, PLY_ASCII, XYZN };

struct LoadStats {
    std::size_t vertex_count = 0;
    bool had_normals = false;          // normals present in the file
    std::size_t degenerate_faces = 0;  // skipped with a warning count
};

// OBJ (v/vn/f, with area-weighted face-normal accumulation when vn are
// absent), ASCII PLY (x y z [nx ny nz]) or whitespace "x y z nx ny nz" rows.
// All normals are renormalized to unit length.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format = CloudFormat::Auto,
                      LoadStats* stats = nullptr);

void save_cloud_xyzn(const PointCloud& cloud, const std::filesystem::path& path);

// Centroid of the points within distance thickness/2 of the plane
// (plane_point, plane_normal); needs at least 3 points in the slab.
Vec3 select_seed(const PointCloud& cloud, const Vec3& plane_point, const Vec3& plane_normal,
                 double thickness);

// Legacy ASCII polydata (POINTS + LINES, kind as a scalar field), with
// coordinates mapped back to input units.
void export_polylines(const std::vector<Polyline>& lines, const std::filesystem::path& path,
                      const NormalizationTransform& frame);

std::vector<Polyline> import_polylines(const std::filesystem::path& path);

// Fit report serialization; the schema ships in schemas/fit_report.schema.json.
std::string report_to_json(const FitReport& report);
FitReport report_from_json(const std::string& text);
void write_report(const FitReport& report, const std::filesystem::path& path);
FitReport read_report(const std::filesystem::path& path);

int run_cli(int argc, const char* const* argv);

}  // namespace kinfit
