#pragma once

#include "pointprompt/types.hpp"

#include <optional>

namespace pointprompt {

/// N x 3 point coordinates, unitless. Loaders hand out normalized clouds:
/// centroid at the origin, max point norm 1.
struct PointCloud {
    MatrixR points;  // [N x 3]
    std::optional<Index> label;

    Index count() const { return points.rows(); }
};

// Center at the centroid and scale so the farthest point sits on the unit
// sphere. Throws DataError on degenerate (single-position) clouds.
void normalize_cloud(PointCloud& pc);

bool is_normalized(const PointCloud& pc, Scalar tol = 1e-9);

// Rotation about z by `azimuth` then about x by `elevation` (radians).
Matrix3 view_rotation(Scalar azimuth, Scalar elevation);

void rotate_cloud(PointCloud& pc, const Matrix3& rot);

// Lexicographic (x, y, z) sort; makes downstream index-based tie-breaking
// independent of input point order.
void canonical_sort(PointCloud& pc);

}  // namespace pointprompt
