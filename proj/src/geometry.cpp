#include "pointprompt/geometry.hpp"

#include "pointprompt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace pointprompt {

void normalize_cloud(PointCloud& pc) {
    if (pc.count() == 0) throw DataError("normalize_cloud: empty point cloud");
    const Eigen::RowVector3d centroid = pc.points.colwise().mean();
    pc.points.rowwise() -= centroid;
    const Scalar max_norm = pc.points.rowwise().norm().maxCoeff();
    if (max_norm <= 0.0) throw DataError("normalize_cloud: degenerate cloud (all points equal)");
    pc.points /= max_norm;
}

bool is_normalized(const PointCloud& pc, Scalar tol) {
    if (pc.count() == 0) return false;
    const Scalar centroid = pc.points.colwise().mean().norm();
    const Scalar max_norm = pc.points.rowwise().norm().maxCoeff();
    return centroid <= tol && std::abs(max_norm - 1.0) <= tol;
}

Matrix3 view_rotation(Scalar azimuth, Scalar elevation) {
    Matrix3 rz, rx;
    rz << std::cos(azimuth), -std::sin(azimuth), 0.0,
          std::sin(azimuth), std::cos(azimuth), 0.0,
          0.0, 0.0, 1.0;
    rx << 1.0, 0.0, 0.0,
          0.0, std::cos(elevation), -std::sin(elevation),
          0.0, std::sin(elevation), std::cos(elevation);
    return rx * rz;
}

void rotate_cloud(PointCloud& pc, const Matrix3& rot) {
    pc.points = pc.points * rot.transpose();
}

void canonical_sort(PointCloud& pc) {
    const Index n = pc.count();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        for (int c = 0; c < 3; ++c) {
            if (pc.points(a, c) != pc.points(b, c)) return pc.points(a, c) < pc.points(b, c);
        }
        return false;
    });
    MatrixR sorted(n, 3);
    for (Index i = 0; i < n; ++i) sorted.row(i) = pc.points.row(order[static_cast<std::size_t>(i)]);
    pc.points = std::move(sorted);
}

}  // namespace pointprompt
