#pragma once

#include "pointprompt/geometry.hpp"

namespace pointprompt {

/// Orthographic depth render of a normalized cloud: view rotation, nearest
/// depth per pixel. Occupied pixels carry values in (0, 1] (closer points are
/// larger); empty pixels are exactly 0.
MatrixR render_depth(const PointCloud& pc, Scalar azimuth, Scalar elevation, Index height,
                     Index width);

}  // namespace pointprompt
