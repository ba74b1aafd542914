#include "pointprompt/render.hpp"

#include "pointprompt/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pointprompt {

MatrixR render_depth(const PointCloud& pc, Scalar azimuth, Scalar elevation, Index height,
                     Index width) {
    if (height < 1 || width < 1) throw ArgumentError("render_depth: empty image");
    if (!std::isfinite(azimuth) || !std::isfinite(elevation)) {
        throw ArgumentError("render_depth: view angles must be finite");
    }
    const Matrix3 rot = view_rotation(azimuth, elevation);
    MatrixR img = MatrixR::Zero(height, width);
    for (Index i = 0; i < pc.count(); ++i) {
        const Vector3 p = rot * pc.points.row(i).transpose();
        // Camera looks along +y; smaller y is closer. Coordinates stay inside
        // the unit ball for normalized clouds, so y in [-1, 1] maps closeness
        // onto [0.5, 1] and never collides with the 0 background.
        const Scalar closeness = (3.0 - p.y()) / 4.0;
        const Index col = std::clamp<Index>(
            static_cast<Index>(std::floor((p.x() + 1.0) * 0.5 * static_cast<Scalar>(width))), 0,
            width - 1);
        const Index row = std::clamp<Index>(
            static_cast<Index>(std::floor((1.0 - p.z()) * 0.5 * static_cast<Scalar>(height))), 0,
            height - 1);
        img(row, col) = std::max(img(row, col), closeness);
    }
    return img;
}

}  // namespace pointprompt
