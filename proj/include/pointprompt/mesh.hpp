#pragma once

#include "pointprompt/geometry.hpp"
#include "pointprompt/rng.hpp"

#include <array>
#include <string>
#include <vector>

namespace pointprompt {

/// Triangle mesh. Faces are fan-triangulated on load, so each entry has
/// exactly three in-range vertex indices.
struct Mesh {
    MatrixR vertices;  // [V x 3]
    std::vector<std::array<Index, 3>> faces;
};

// Parses the OFF format: optional "OFF" header (tolerating the fused
// "OFF490 518 0" variant found in ModelNet files), a counts line, V vertex
// lines, F polygon lines. Comments (#) and blank lines are skipped; polygons
// fan-triangulate. Errors carry the offending line number.
Mesh parse_off(const std::string& content);
Mesh load_off(const std::string& path);

// Area-weighted triangle selection with uniform barycentric placement,
// without normalization.
MatrixR sample_mesh_surface_raw(const Mesh& mesh, Index n, Rng& rng);

// sample_mesh_surface_raw + normalization (centroid to origin, unit max
// norm). Deterministic per seed.
PointCloud sample_surface(const Mesh& mesh, Index n, Rng& rng);

// One "x y z" line per point, whitespace separated. Normalized on load.
PointCloud load_xyz(const std::string& path);

}  // namespace pointprompt
